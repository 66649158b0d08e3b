#pragma once

#include "geninv/network.hpp"
#include "geninv/rng.hpp"
#include "geninv/solvers.hpp"
#include "geninv/types.hpp"

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace geninv {

// What an inversion driver sees: the (possibly noisy) signal, optionally the
// set of observed coordinates, a deterministic noise bound eps, and optionally
// the Gaussian noise level sigma (used for bound computations and to derive
// eps when only sigma is known).
struct Observation {
  Vec y;
  std::optional<IndexSet> mask;  // observed coordinate indices, sorted
  double eps = 0.0;
  std::optional<double> sigma;

  IndexSet observed(Index n) const { return mask ? *mask : all_indices(n); }
  Vec y_observed(Index) const { return mask ? entries_of(y, *mask) : y; }

  void validate(Index n) const {
    if (y.size() != n) throw std::invalid_argument("observation: signal length mismatch");
    if (!(eps >= 0.0)) throw std::invalid_argument("observation: eps must be >= 0");
    if (mask) {
      if (mask->empty()) throw std::invalid_argument("observation: mask observes no coordinates");
      for (std::size_t i = 0; i < mask->size(); ++i) {
        if ((*mask)[i] < 0 || (*mask)[i] >= n)
          throw std::invalid_argument("observation: mask index out of range");
        if (i > 0 && (*mask)[i] <= (*mask)[i - 1])
          throw std::invalid_argument("observation: mask must be sorted and duplicate-free");
      }
    }
  }
};

struct StageReport {
  std::string stage;
  SolveReport report;
};

struct InversionResult {
  Vec z_hat;
  std::vector<Vec> x_hat;          // per hidden layer estimates, x_1..x_L
  std::vector<IndexSet> supports;  // recovered supports per hidden layer
  std::vector<double> eps_schedule;     // layered BP: eps_{L+1}, eps_L, ..., eps_1
  std::vector<double> lambda_schedule;  // lambda actually used per solve stage
  std::vector<StageReport> stage_reports;
  std::vector<std::string> flags;

  bool converged() const {
    for (const auto& s : stage_reports)
      if (!s.report.converged) return false;
    return true;
  }
};

/// Raised by layered basis pursuit when a layer's recovered support is empty
/// (nothing downstream can be recovered).
struct EmptySupportError : std::runtime_error {
  explicit EmptySupportError(Index layer_index)
      : std::runtime_error("empty recovered support at layer " + std::to_string(layer_index)),
        layer(layer_index) {}
  Index layer;
};

/// {j : v_j > tau}; intended for nonnegative solver outputs.
IndexSet support_of(const Vec& v, double tau);

constexpr double kSupportTol = 1e-8;

/// eps from sigma when only sigma is known: a high-probability bound on the
/// l2 norm of N(0, sigma^2 I_m) noise.
inline double eps_from_sigma(double sigma, Index observed_count) {
  const double m = double(observed_count);
  return sigma * std::sqrt(m + 4.0 * std::sqrt(m));
}

/// Support-composed effective matrix: rows are the observed output
/// coordinates, columns the latent space; every hidden layer is restricted to
/// its support. Throws if any support is empty.
Mat composed_effective_matrix(const GeneratorNetwork& net, const std::vector<IndexSet>& supports,
                              const IndexSet& observed);

// ---------------------------------------------------------------------------
// Oracle estimators (true supports known)

struct OracleConfig {
  int max_iters = 10000;
  double init_step = 1e-1;
  double grad_tol = 1e-12;
};

/// Minimizes 0.5||y_obs - phi(M z)||^2 over z, where M is the support-composed
/// effective matrix, by monotone backtracking gradient descent.
InversionResult oracle_end_to_end(const GeneratorNetwork& net, const Observation& obs,
                                  const std::vector<IndexSet>& true_supports,
                                  const OracleConfig& cfg = {});

/// Sequential least-squares projections on the known supports, from the
/// image layer down to the latent vector.
InversionResult oracle_layered(const GeneratorNetwork& net, const Observation& obs,
                               const std::vector<IndexSet>& true_supports);

struct BoundPair {
  double lower = 0.0;
  double upper = 0.0;
};

/// Expected-squared-error bounds for the layer-wise oracle under white
/// Gaussian noise of level sigma: layer i in [sigma^2 s_i / prod lambda_max,
/// sigma^2 s_i / prod lambda_min], products over the supported Gram matrices
/// from layer i up; the latent bound uses n_0 and all layers.
struct OracleBounds {
  std::vector<BoundPair> layers;  // x_1..x_L
  BoundPair latent;
  std::vector<std::string> flags;
};

OracleBounds oracle_bounds(const GeneratorNetwork& net, const std::vector<IndexSet>& true_supports,
                           double sigma,
                           const std::optional<IndexSet>& mask = std::nullopt);

// ---------------------------------------------------------------------------
// Layered basis pursuit

struct LbpConfig {
  /// True sparsity levels s_1..s_L for the eps schedule; recovered support
  /// sizes are used when absent.
  std::optional<std::vector<Index>> sparsity_levels;
  double lambda_floor = 1e-8;  // replaces lambda = 0 in the noiseless case
  std::optional<double> lambda_last;  // overrides lambda_L (sweep driver)
  double support_tol = kSupportTol;
  SolverConfig solver;
};

InversionResult layered_basis_pursuit(const GeneratorNetwork& net, const Observation& obs,
                                      const LbpConfig& cfg = {});

// ---------------------------------------------------------------------------
// Latent pursuit

struct LatentPursuitConfig {
  double lambda_last = 0.0;  // l1 weight in the image-layer stage
  double lambda_mid = 0.0;   // l1 weight in the midlayer stages
  double rho = 1e-2;
  double gamma = 0.0;  // ridge weight in the latent stage
  double support_tol = kSupportTol;
  bool debias = true;
  SolverConfig solver;
  OracleConfig debias_cfg;
};

InversionResult latent_pursuit(const GeneratorNetwork& net, const Observation& obs,
                               const LatentPursuitConfig& cfg = {});

// ---------------------------------------------------------------------------
// Debiasing

struct DebiasResult {
  Vec z;
  SolveReport report;
  bool kept_init = false;  // line search could not improve on the init
};

/// Refit of z over frozen recovered supports: monotone backtracking descent on
/// 0.5||y_obs - phi(M z)||^2 starting from init. Never returns a point with a
/// higher objective than the init.
DebiasResult debias(const GeneratorNetwork& net, const Observation& obs,
                    const std::vector<IndexSet>& supports, const Vec& z_init,
                    const OracleConfig& cfg = {});

/// Objective/gradient of the frozen-support data-fit term, exposed for
/// derivative checks.
struct ComposedObjective {
  Mat m;
  Vec y_obs;
  ActivationSpec activation;

  double value_and_grad(const Vec& z, Vec* grad) const {
    const Vec t = m * z;
    Vec r(t.size());
    for (Index i = 0; i < t.size(); ++i) r[i] = activation.value(t[i]) - y_obs[i];
    if (grad) {
      Vec d(t.size());
      for (Index i = 0; i < t.size(); ++i) d[i] = activation.deriv(t[i]) * r[i];
      grad->noalias() = m.transpose() * d;
    }
    return 0.5 * r.squaredNorm();
  }
};

ComposedObjective make_composed_objective(const GeneratorNetwork& net, const Observation& obs,
                                          const std::vector<IndexSet>& supports);

// ---------------------------------------------------------------------------
// Gradient-descent baseline

struct GdConfig {
  std::vector<double> step_sizes = {1e-1, 1e0, 1e1, 1e2, 1e3, 1e4};
  int max_iters = 10000;
  double grad_tol = 1e-9;
  double momentum = 0.0;
  double step_decay = 1.0;  // multiplicative per-iteration step decay
  bool debias = false;
};

/// Minimizes the masked data fit over z from a seeded standard-normal start,
/// taking the smallest step size that drives the gradient norm under grad_tol;
/// if none does, the best-objective run is reported (failure is an outcome,
/// not an error). Hidden layers come from a forward pass at the returned z.
InversionResult gradient_descent_invert(const GeneratorNetwork& net, const Observation& obs,
                                        const GdConfig& cfg, Rng rng);

}  // namespace geninv
