// Command-line frontend: certify, invert, oracle, phase, inpaint, gen-random.
// Exit codes: 0 success, 1 input/usage error, 2 completed but not converged
// (result file still written, flagged).

#include "geninv/analysis.hpp"
#include "geninv/experiments.hpp"
#include "geninv/inversion.hpp"
#include "geninv/network_io.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace geninv;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInputError = 1;
constexpr int kExitNotConverged = 2;

void write_json(const json& doc, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
  out << doc.dump(2) << "\n";
}

json report_to_json(const StageReport& s) {
  return json{{"stage", s.stage},
              {"iterations", s.report.iterations},
              {"objective", s.report.objective},
              {"opt_residual", s.report.opt_residual},
              {"feas_residual", s.report.feas_residual},
              {"converged", s.report.converged}};
}

json result_to_json(const InversionResult& res) {
  json layers = json::array();
  for (std::size_t i = 0; i < res.x_hat.size(); ++i) {
    json layer;
    layer["name"] = "x" + std::to_string(i + 1);
    layer["support"] = res.supports.size() > i ? res.supports[i] : IndexSet{};
    layer["values"] = std::vector<double>(res.x_hat[i].data(),
                                          res.x_hat[i].data() + res.x_hat[i].size());
    layers.push_back(std::move(layer));
  }
  json reports = json::array();
  for (const auto& s : res.stage_reports) reports.push_back(report_to_json(s));
  return json{{"z_hat", std::vector<double>(res.z_hat.data(), res.z_hat.data() + res.z_hat.size())},
              {"layers", std::move(layers)},
              {"eps_schedule", res.eps_schedule},
              {"lambda_schedule", res.lambda_schedule},
              {"stage_reports", std::move(reports)},
              {"flags", res.flags},
              {"converged", res.converged()}};
}

json certificate_to_json(const UniquenessCertificate& cert) {
  json conditions = json::array();
  for (const auto& c : cert.conditions)
    conditions.push_back(json{{"name", c.name},
                              {"cardinality", c.sparsity},
                              {"threshold", c.threshold},
                              {"met", c.met},
                              {"violated", c.violated},
                              {"detail", c.detail}});
  return json{{"conditions", std::move(conditions)},
              {"verdict", to_string(cert.verdict)},
              {"assumption_flags", cert.assumption_flags}};
}

std::vector<Index> parse_dims(const std::string& text) {
  std::vector<Index> dims;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) dims.push_back(std::stoll(item));
  return dims;
}

Observation make_observation(const Vec& y, const std::string& mask_path, double eps,
                             double sigma) {
  Observation obs;
  obs.y = y;
  if (!mask_path.empty()) obs.mask = load_index_set(mask_path);
  obs.eps = eps;
  if (sigma > 0.0) obs.sigma = sigma;
  return obs;
}

json metrics_json(const GeneratorNetwork& net, const ForwardTrace& truth,
                  const InversionResult& res) {
  const ForwardTrace at_zhat = forward(net, res.z_hat);
  json out;
  out["z"] = {{"rel_err", rel_err(truth.z, res.z_hat)}, {"snr_db", snr_db(truth.z, res.z_hat)}};
  for (Index i = 1; i <= net.depth(); ++i) {
    const Vec& est = res.x_hat[static_cast<std::size_t>(i - 1)].size()
                         ? res.x_hat[static_cast<std::size_t>(i - 1)]
                         : at_zhat.hidden[static_cast<std::size_t>(i - 1)];
    const Vec& t = truth.hidden[static_cast<std::size_t>(i - 1)];
    if (t.squaredNorm() > 0.0)
      out["x" + std::to_string(i)] = {{"rel_err", rel_err(t, est)}, {"snr_db", snr_db(t, est)}};
  }
  out["output"] = {{"rel_err", rel_err(truth.output, at_zhat.output)},
                   {"snr_db", snr_db(truth.output, at_zhat.output)}};
  return out;
}

struct SolverFlags {
  int max_iters = 20000;
  double tol_opt = 1e-9;
  double tol_feas = 1e-8;

  void attach(CLI::App* cmd) {
    cmd->add_option("--max-iters", max_iters, "solver iteration cap")->capture_default_str();
    cmd->add_option("--tol-opt", tol_opt, "optimality residual tolerance")->capture_default_str();
    cmd->add_option("--tol-feas", tol_feas, "feasibility residual tolerance")
        ->capture_default_str();
  }
  SolverConfig config() const {
    SolverConfig cfg;
    cfg.max_iters = max_iters;
    cfg.tol_opt = tol_opt;
    cfg.tol_feas = tol_feas;
    return cfg;
  }
  json to_json() const {
    return json{{"max_iters", max_iters}, {"tol_opt", tol_opt}, {"tol_feas", tol_feas}};
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Layer-wise inversion and invertibility certification of feed-forward "
               "ReLU generators"};
  app.require_subcommand(1);

  // ---- gen-random -----------------------------------------------------
  auto* gen = app.add_subcommand("gen-random", "generate a random Gaussian network");
  std::string gen_dims = "10,100,196";
  std::string gen_activation = "tanh";
  double gen_alpha = 0.1, gen_knee = 1.0;
  std::uint64_t gen_seed = 0;
  std::string gen_out;
  bool gen_force = false;
  gen->add_option("--dims", gen_dims, "comma list n0,n1,...,n")->capture_default_str();
  gen->add_option("--activation", gen_activation, "identity|tanh|sigmoid|piecewise_linear|leaky_relu")
      ->capture_default_str();
  gen->add_option("--alpha", gen_alpha, "activation slope parameter")->capture_default_str();
  gen->add_option("--knee", gen_knee, "piecewise-linear knee")->capture_default_str();
  gen->add_option("--seed", gen_seed, "rng seed")->capture_default_str();
  gen->add_option("--out", gen_out, "manifest path to write")->required();
  gen->add_flag("--force", gen_force, "overwrite existing files");

  // ---- certify ---------------------------------------------------------
  auto* certify = app.add_subcommand("certify", "certify invertibility of a network/signal pair");
  std::string cert_weights, cert_latent, cert_out;
  std::uint64_t cert_seed = 0;
  bool cert_have_seed = false;
  std::string cert_policy = "generic";
  std::uint64_t cert_samples = 2000;
  certify->add_option("--weights", cert_weights, "weight manifest")->required();
  certify->add_option("--latent", cert_latent, "latent vector file");
  certify->add_option("--seed", cert_seed, "draw the latent vector from this seed instead")
      ->each([&](const std::string&) { cert_have_seed = true; });
  certify->add_option("--policy", cert_policy, "generic|exact|sampled")->capture_default_str();
  certify->add_option("--samples", cert_samples, "subset samples in sampled mode")
      ->capture_default_str();
  certify->add_option("--out", cert_out, "certificate JSON path");

  // ---- invert ----------------------------------------------------------
  auto* invert = app.add_subcommand("invert", "invert an observed signal");
  std::string inv_weights, inv_obs, inv_mask, inv_method = "latent-pursuit", inv_out;
  std::string inv_truth_latent;
  double inv_sigma = 0.0, inv_eps = 0.0;
  std::uint64_t inv_seed = 0;
  std::string inv_debias = "on";
  double inv_lambda_last = 0.0, inv_rho = 1e-2, inv_gamma = 0.0;
  SolverFlags inv_solver;
  invert->add_option("--weights", inv_weights, "weight manifest")->required();
  invert->add_option("--observation", inv_obs, "signal vector file")->required();
  invert->add_option("--mask", inv_mask, "file of observed coordinate indices");
  invert->add_option("--method", inv_method, "gd|layered-bp|latent-pursuit|oracle")
      ->capture_default_str();
  invert->add_option("--sigma", inv_sigma, "gaussian noise level")->capture_default_str();
  invert->add_option("--eps", inv_eps, "deterministic noise bound")->capture_default_str();
  invert->add_option("--seed", inv_seed, "rng seed (gd initialization)")->capture_default_str();
  invert->add_option("--debias", inv_debias, "on|off")->capture_default_str();
  invert->add_option("--lambda-last", inv_lambda_last, "image-layer l1 weight (latent-pursuit)")
      ->capture_default_str();
  invert->add_option("--rho", inv_rho, "augmented Lagrangian parameter")->capture_default_str();
  invert->add_option("--gamma", inv_gamma, "latent ridge weight")->capture_default_str();
  invert->add_option("--truth-latent", inv_truth_latent,
                     "ground-truth latent file (enables metrics; required for --method oracle)");
  invert->add_option("--out", inv_out, "result JSON path")->required();
  inv_solver.attach(invert);

  // ---- oracle ----------------------------------------------------------
  auto* oracle = app.add_subcommand("oracle", "oracle study on a known latent vector");
  std::string ora_weights, ora_latent, ora_mask, ora_variant = "layered", ora_out;
  double ora_sigma = 0.0;
  std::uint64_t ora_seed = 0;
  oracle->add_option("--weights", ora_weights, "weight manifest")->required();
  oracle->add_option("--latent", ora_latent, "latent vector file (else drawn from --seed)");
  oracle->add_option("--seed", ora_seed, "seed for latent and noise draws")->capture_default_str();
  oracle->add_option("--sigma", ora_sigma, "gaussian noise level")->capture_default_str();
  oracle->add_option("--mask", ora_mask, "file of observed coordinate indices");
  oracle->add_option("--variant", ora_variant, "layered|end-to-end")->capture_default_str();
  oracle->add_option("--out", ora_out, "result JSON path")->required();

  // ---- phase -----------------------------------------------------------
  auto* phase = app.add_subcommand("phase", "random-weights phase-transition experiment");
  PhasePlan phase_plan;
  std::string phase_n1 = "16:8:160";
  std::string phase_methods = "gd,layered-bp,latent-pursuit";
  std::string phase_csv, phase_summary;
  bool phase_paper_scale = false;
  long long phase_n0 = 8;
  phase->add_option("--n", phase_plan.n, "output dimension")->capture_default_str();
  phase->add_option("--n0", phase_n0, "latent dimension")->capture_default_str();
  phase->add_option("--n1", phase_n1, "hidden grid start:step:stop or comma list")
      ->capture_default_str();
  phase->add_option("--trials", phase_plan.trials, "trials per grid point")->capture_default_str();
  phase->add_option("--methods", phase_methods, "comma list of methods")->capture_default_str();
  phase->add_option("--sigma", phase_plan.sigma, "gaussian noise level")->capture_default_str();
  phase->add_option("--seed", phase_plan.seed, "master seed")->capture_default_str();
  phase->add_option("--jobs", phase_plan.jobs, "parallel trial workers")->capture_default_str();
  phase->add_flag("--timing", phase_plan.timing, "record wall-clock times (non-reproducible)");
  phase->add_flag("--paper-scale", phase_paper_scale, "n=625, n1 50..1000, 512 trials");
  phase->add_option("--out-csv", phase_csv, "per-trial CSV path")->required();
  phase->add_option("--out-summary", phase_summary, "quantile summary CSV path");

  // ---- inpaint ---------------------------------------------------------
  auto* inpaint = app.add_subcommand("inpaint", "masked-signal inversion experiment");
  InpaintPlan inpaint_plan;
  std::string ip_weights, ip_mask_kind = "random", ip_methods = "gd,latent-pursuit";
  std::string ip_csv, ip_summary;
  inpaint->add_option("--weights", ip_weights, "weight manifest (default: synthetic fixture)");
  inpaint->add_option("--mask-kind", ip_mask_kind, "random|top-rows")->capture_default_str();
  inpaint->add_option("--conceal", inpaint_plan.conceal_fraction, "concealed fraction (random)")
      ->capture_default_str();
  inpaint->add_option("--rows", inpaint_plan.rows_concealed, "concealed top rows")
      ->capture_default_str();
  inpaint->add_option("--height", inpaint_plan.image_height, "image height in pixels")
      ->capture_default_str();
  inpaint->add_option("--trials", inpaint_plan.trials, "trial count")->capture_default_str();
  inpaint->add_option("--methods", ip_methods, "comma list of methods")->capture_default_str();
  inpaint->add_option("--sigma", inpaint_plan.sigma, "gaussian noise level")->capture_default_str();
  inpaint->add_option("--seed", inpaint_plan.seed, "master seed")->capture_default_str();
  inpaint->add_option("--jobs", inpaint_plan.jobs, "parallel trial workers")->capture_default_str();
  inpaint->add_flag("--timing", inpaint_plan.timing, "record wall-clock times (non-reproducible)");
  inpaint->add_option("--out-csv", ip_csv, "per-trial CSV path")->required();
  inpaint->add_option("--out-summary", ip_summary, "quantile summary CSV path");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) {
      const auto dims = parse_dims(gen_dims);
      ActivationSpec act;
      act.kind = activation_kind_from_string(gen_activation);
      act.alpha = gen_alpha;
      act.knee = gen_knee;
      act.validate();
      Rng rng(gen_seed);
      const GeneratorNetwork net = random_network(dims, act, rng);
      save_network(net, gen_out, gen_force);
      json meta{{"command", "gen-random"}, {"dims", dims},           {"activation", gen_activation},
                {"alpha", gen_alpha},      {"knee", gen_knee},       {"seed", gen_seed},
                {"out", gen_out},          {"force", gen_force}};
      std::cout << meta.dump(2) << "\n";
      return kExitOk;
    }

    if (*certify) {
      const GeneratorNetwork net = load_network(cert_weights);
      Vec z;
      if (!cert_latent.empty()) {
        z = load_vector(cert_latent);
      } else if (cert_have_seed) {
        Rng rng(cert_seed);
        z = rng.gaussian_vector(net.latent_dim());
      } else {
        std::cerr << "certify: provide --latent or --seed\n";
        return kExitInputError;
      }
      const ForwardTrace trace = forward(net, z);
      CertifyPolicy policy;
      if (cert_policy == "generic")
        policy.mode = CertifyPolicy::Mode::generic;
      else if (cert_policy == "exact")
        policy.mode = CertifyPolicy::Mode::exact;
      else if (cert_policy == "sampled")
        policy.mode = CertifyPolicy::Mode::sampled;
      else {
        std::cerr << "certify: unknown policy " << cert_policy << "\n";
        return kExitInputError;
      }
      policy.samples = cert_samples;
      const UniquenessCertificate cert = certify_uniqueness(net, trace, policy);
      json doc = certificate_to_json(cert);
      doc["config"] = json{{"command", "certify"},   {"weights", cert_weights},
                           {"latent", cert_latent},  {"seed", cert_seed},
                           {"policy", cert_policy},  {"samples", cert_samples},
                           {"cardinalities", trace.cardinalities()}};
      std::cout << render_certificate(cert);
      if (!cert_out.empty()) write_json(doc, cert_out);
      return kExitOk;
    }

    if (*invert) {
      const GeneratorNetwork net = load_network(inv_weights);
      const Vec y = load_vector(inv_obs);
      const Observation obs = make_observation(y, inv_mask, inv_eps, inv_sigma);
      const bool debias_on = inv_debias == "on";
      Rng rng(inv_seed);

      std::optional<ForwardTrace> truth;
      if (!inv_truth_latent.empty()) truth = forward(net, load_vector(inv_truth_latent));

      InversionResult res;
      if (inv_method == "gd") {
        GdConfig cfg;
        cfg.debias = debias_on;
        res = gradient_descent_invert(net, obs, cfg, rng);
      } else if (inv_method == "layered-bp") {
        LbpConfig cfg;
        cfg.solver = inv_solver.config();
        res = layered_basis_pursuit(net, obs, cfg);
        if (debias_on) {
          bool ok = true;
          for (const auto& s : res.supports) ok = ok && !s.empty();
          if (ok) {
            const DebiasResult d = debias(net, obs, res.supports, res.z_hat);
            res.stage_reports.push_back({"debias", d.report});
            res.z_hat = d.z;
          }
        }
      } else if (inv_method == "latent-pursuit") {
        LatentPursuitConfig cfg;
        cfg.lambda_last = inv_lambda_last;
        cfg.rho = inv_rho;
        cfg.gamma = inv_gamma;
        cfg.debias = debias_on;
        cfg.solver = inv_solver.config();
        res = latent_pursuit(net, obs, cfg);
      } else if (inv_method == "oracle") {
        if (!truth) {
          std::cerr << "invert: --method oracle requires --truth-latent\n";
          return kExitInputError;
        }
        res = oracle_end_to_end(net, obs, truth->supports);
      } else {
        std::cerr << "invert: unknown method " << inv_method << "\n";
        return kExitInputError;
      }

      json doc = result_to_json(res);
      doc["config"] = json{{"command", "invert"},
                           {"weights", inv_weights},
                           {"observation", inv_obs},
                           {"mask", inv_mask},
                           {"method", inv_method},
                           {"sigma", inv_sigma},
                           {"eps", inv_eps},
                           {"seed", inv_seed},
                           {"debias", inv_debias},
                           {"lambda_last", inv_lambda_last},
                           {"rho", inv_rho},
                           {"gamma", inv_gamma},
                           {"truth_latent", inv_truth_latent},
                           {"solver", inv_solver.to_json()}};
      if (truth) doc["metrics"] = metrics_json(net, *truth, res);
      write_json(doc, inv_out);
      std::cout << "wrote " << inv_out << (res.converged() ? "" : " (not converged)") << "\n";
      return res.converged() ? kExitOk : kExitNotConverged;
    }

    if (*oracle) {
      const GeneratorNetwork net = load_network(ora_weights);
      Rng rng(ora_seed);
      const Vec z = ora_latent.empty() ? rng.gaussian_vector(net.latent_dim())
                                       : load_vector(ora_latent);
      const ForwardTrace truth = forward(net, z);
      Observation obs;
      obs.y = truth.output;
      if (ora_sigma > 0.0) {
        obs.y += ora_sigma * rng.gaussian_vector(net.output_dim());
        obs.sigma = ora_sigma;
      }
      if (!ora_mask.empty()) obs.mask = load_index_set(ora_mask);

      InversionResult res;
      if (ora_variant == "layered")
        res = oracle_layered(net, obs, truth.supports);
      else if (ora_variant == "end-to-end")
        res = oracle_end_to_end(net, obs, truth.supports);
      else {
        std::cerr << "oracle: unknown variant " << ora_variant << "\n";
        return kExitInputError;
      }

      json doc = result_to_json(res);
      doc["config"] = json{{"command", "oracle"}, {"weights", ora_weights},
                           {"latent", ora_latent}, {"seed", ora_seed},
                           {"sigma", ora_sigma},   {"mask", ora_mask},
                           {"variant", ora_variant}};
      doc["metrics"] = metrics_json(net, truth, res);
      if (ora_sigma > 0.0) {
        const OracleBounds bounds = oracle_bounds(net, truth.supports, ora_sigma, obs.mask);
        json b;
        b["latent"] = {{"lower", bounds.latent.lower}, {"upper", bounds.latent.upper}};
        json layers = json::array();
        for (std::size_t i = 0; i < bounds.layers.size(); ++i)
          layers.push_back(json{{"layer", "x" + std::to_string(i + 1)},
                                {"lower", bounds.layers[i].lower},
                                {"upper", bounds.layers[i].upper}});
        b["layers"] = std::move(layers);
        b["flags"] = bounds.flags;
        doc["expected_error_bounds"] = std::move(b);
      }
      write_json(doc, ora_out);
      std::cout << "wrote " << ora_out << "\n";
      return res.converged() ? kExitOk : kExitNotConverged;
    }

    if (*phase) {
      if (phase_paper_scale) phase_plan = PhasePlan::paper_scale(phase_n0);
      phase_plan.n0 = phase_n0;
      if (!phase_paper_scale) {
        phase_plan.n1_grid.clear();
        if (phase_n1.find(':') != std::string::npos) {
          long long start = 0, step = 0, stop = 0;
          if (std::sscanf(phase_n1.c_str(), "%lld:%lld:%lld", &start, &step, &stop) != 3 ||
              step <= 0) {
            std::cerr << "phase: bad --n1 grid\n";
            return kExitInputError;
          }
          for (long long v = start; v <= stop; v += step) phase_plan.n1_grid.push_back(v);
        } else {
          phase_plan.n1_grid = parse_dims(phase_n1);
        }
      }
      phase_plan.methods.clear();
      std::stringstream ms(phase_methods);
      std::string m;
      while (std::getline(ms, m, ',')) phase_plan.methods.push_back(m);

      const auto records = run_phase_transition(phase_plan);
      emit_csv(records, phase_csv);
      if (!phase_summary.empty()) emit_summary(records, phase_summary);
      json meta{{"command", "phase"},
                {"n", phase_plan.n},
                {"n0", phase_plan.n0},
                {"n1_grid", phase_plan.n1_grid},
                {"trials", phase_plan.trials},
                {"methods", phase_plan.methods},
                {"sigma", phase_plan.sigma},
                {"seed", phase_plan.seed},
                {"jobs", phase_plan.jobs},
                {"timing", phase_plan.timing},
                {"paper_scale", phase_paper_scale},
                {"lbp_lambda_sweep", phase_plan.cfg.lbp_lambda_sweep},
                {"selection", "data_fit_objective"},
                {"out_csv", phase_csv},
                {"out_summary", phase_summary}};
      write_json(meta, phase_csv + ".meta.json");
      std::cout << "wrote " << phase_csv << " (" << records.size() << " rows)\n";
      return kExitOk;
    }

    if (*inpaint) {
      inpaint_plan.manifest = ip_weights;
      if (ip_mask_kind == "random")
        inpaint_plan.mask_kind = InpaintPlan::MaskKind::random;
      else if (ip_mask_kind == "top-rows")
        inpaint_plan.mask_kind = InpaintPlan::MaskKind::top_rows;
      else {
        std::cerr << "inpaint: unknown mask kind " << ip_mask_kind << "\n";
        return kExitInputError;
      }
      inpaint_plan.methods.clear();
      std::stringstream ms(ip_methods);
      std::string m;
      while (std::getline(ms, m, ',')) inpaint_plan.methods.push_back(m);

      const auto records = run_inpainting(inpaint_plan);
      emit_csv(records, ip_csv);
      if (!ip_summary.empty()) emit_summary(records, ip_summary);
      json meta{{"command", "inpaint"},
                {"weights", ip_weights},
                {"mask_kind", ip_mask_kind},
                {"conceal", inpaint_plan.conceal_fraction},
                {"rows", inpaint_plan.rows_concealed},
                {"height", inpaint_plan.image_height},
                {"trials", inpaint_plan.trials},
                {"methods", inpaint_plan.methods},
                {"sigma", inpaint_plan.sigma},
                {"seed", inpaint_plan.seed},
                {"jobs", inpaint_plan.jobs},
                {"timing", inpaint_plan.timing},
                {"out_csv", ip_csv},
                {"out_summary", ip_summary}};
      write_json(meta, ip_csv + ".meta.json");
      std::cout << "wrote " << ip_csv << " (" << records.size() << " rows)\n";
      return kExitOk;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInputError;
  }
  return kExitInputError;
}
