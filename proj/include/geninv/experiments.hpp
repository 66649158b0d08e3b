#pragma once

#include "geninv/analysis.hpp"
#include "geninv/inversion.hpp"
#include "geninv/network.hpp"
#include "geninv/rng.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace geninv {

/// 10 log10(||truth||^2 / ||truth - estimate||^2); +inf when the error is
/// exactly zero. Rejects zero truth.
double snr_db(const Vec& truth, const Vec& estimate);

/// ||truth - estimate|| / ||truth||.
double rel_err(const Vec& truth, const Vec& estimate);

struct TrialRecord {
  std::string sweep_var;
  double sweep_value = 0.0;
  int trial = 0;
  std::string method;
  std::string layer;  // "z", "x1", ..., "output"
  double snr_db = 0.0;
  double rel_err = 0.0;
  double wall_ms = 0.0;
  bool converged = false;
  std::string cert_verdict;
};

struct Quantiles {
  double q10 = 0, q25 = 0, q50 = 0, q75 = 0, q90 = 0;
};

/// Linear-interpolation quantiles of a nonempty sample (order-independent).
Quantiles compute_quantiles(std::vector<double> values);

/// Fixed column order:
/// sweep_var,sweep_value,trial,method,layer,snr_db,rel_err,wall_ms,converged,cert_verdict
void emit_csv(const std::vector<TrialRecord>& records, const std::filesystem::path& path);
std::vector<TrialRecord> parse_csv(const std::filesystem::path& path);

/// Per-(sweep value, method, layer, metric) quantile summary:
/// sweep_var,sweep_value,method,layer,metric,q10,q25,q50,q75,q90,count
void emit_summary(const std::vector<TrialRecord>& records, const std::filesystem::path& path);

/// Observed indices after randomly concealing conceal_fraction of n coordinates.
IndexSet random_mask(Index n, double conceal_fraction, Rng& rng);

/// Observed indices after concealing the top rows_concealed rows of a
/// row-major height x width image.
IndexSet top_rows_mask(Index height, Index width, Index rows_concealed);

/// Per-method configuration shared by the experiment runners. The layered-BP
/// lambda sweep picks the run with the lowest masked data-fit objective.
struct MethodConfigs {
  GdConfig gd;
  LbpConfig lbp;
  std::vector<double> lbp_lambda_sweep = {1e-5, 7e-6, 3e-6, 1e-6, 0.0};
  bool lbp_debias = true;
  LatentPursuitConfig lp;
  OracleConfig oracle;
};

struct PhasePlan {
  Index n = 196;
  Index n0 = 8;
  std::vector<Index> n1_grid = {16, 24, 32, 40, 48, 56, 64, 72, 80, 88, 96,
                                104, 112, 120, 128, 136, 144, 152, 160};
  int trials = 64;
  std::vector<std::string> methods = {"gd", "layered-bp", "latent-pursuit"};
  double sigma = 0.0;
  ActivationSpec activation{ActivationKind::tanh_fn};
  std::uint64_t seed = 1;
  int jobs = 1;
  bool timing = false;
  MethodConfigs cfg;

  /// The full-size protocol: n=625, n1 in 50..1000, 512 trials.
  static PhasePlan paper_scale(Index n0);
};

/// Two-matrix Gaussian generator per grid point; every trial reproducible from
/// (seed, n0, n1, trial) alone.
std::vector<TrialRecord> run_phase_transition(const PhasePlan& plan);

struct InpaintPlan {
  enum class MaskKind { random, top_rows };

  std::string manifest;  // weight source; empty = synthetic fixture below
  std::vector<Index> fixture_dims = {8, 24, 64, 196};
  ActivationSpec fixture_activation{ActivationKind::piecewise_linear};
  std::uint64_t fixture_seed = 7;

  MaskKind mask_kind = MaskKind::random;
  double conceal_fraction = 0.45;
  Index image_height = 14;
  Index rows_concealed = 6;

  int trials = 64;
  std::vector<std::string> methods = {"gd", "latent-pursuit"};
  double sigma = 0.0;
  std::uint64_t seed = 2;
  int jobs = 1;
  bool timing = false;
  MethodConfigs cfg;
};

std::vector<TrialRecord> run_inpainting(const InpaintPlan& plan);

/// Invert one observation with one method (by name) and compute per-layer
/// records against the ground-truth trace. Exposed for the CLI and tests.
std::vector<TrialRecord> run_methods_on_trial(const GeneratorNetwork& net,
                                              const ForwardTrace& truth, const Observation& obs,
                                              const std::vector<std::string>& methods,
                                              const MethodConfigs& cfg, Rng trial_rng,
                                              const std::string& sweep_var, double sweep_value,
                                              int trial, const std::string& cert_verdict,
                                              bool timing);

}  // namespace geninv
