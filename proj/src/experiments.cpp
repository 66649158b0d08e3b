#include "geninv/experiments.hpp"

#include "geninv/network_io.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <thread>

namespace geninv {

namespace fs = std::filesystem;

double snr_db(const Vec& truth, const Vec& estimate) {
  if (truth.size() != estimate.size()) throw std::invalid_argument("snr_db: length mismatch");
  const double sig = truth.squaredNorm();
  if (sig == 0.0) throw std::invalid_argument("snr_db: zero truth signal");
  const double err = (truth - estimate).squaredNorm();
  if (err == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(sig / err);
}

double rel_err(const Vec& truth, const Vec& estimate) {
  const double t = truth.norm();
  const double e = (truth - estimate).norm();
  if (t == 0.0) return e == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  return e / t;
}

Quantiles compute_quantiles(std::vector<double> values) {
  if (values.empty()) throw std::invalid_argument("compute_quantiles: empty sample");
  std::sort(values.begin(), values.end());
  auto at = [&](double q) {
    const double pos = q * double(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = static_cast<std::size_t>(std::ceil(pos));
    const double frac = pos - double(lo);
    return values[lo] * (1.0 - frac) + values[hi] * frac;
  };
  return {at(0.10), at(0.25), at(0.50), at(0.75), at(0.90)};
}

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

void emit_csv(const std::vector<TrialRecord>& records, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("emit_csv: cannot open " + path.string());
  out << "sweep_var,sweep_value,trial,method,layer,snr_db,rel_err,wall_ms,converged,cert_verdict\n";
  for (const auto& r : records)
    out << r.sweep_var << ',' << fmt(r.sweep_value) << ',' << r.trial << ',' << r.method << ','
        << r.layer << ',' << fmt(r.snr_db) << ',' << fmt(r.rel_err) << ',' << fmt(r.wall_ms) << ','
        << (r.converged ? 1 : 0) << ',' << r.cert_verdict << '\n';
  if (!out) throw std::runtime_error("emit_csv: write failed for " + path.string());
}

std::vector<TrialRecord> parse_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("parse_csv: cannot open " + path.string());
  std::vector<TrialRecord> records;
  std::string line;
  bool header = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (header) {
      header = false;
      continue;
    }
    std::vector<std::string> cells;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (cells.size() != 10)
      throw std::runtime_error("parse_csv: malformed row in " + path.string() + ": " + line);
    TrialRecord r;
    r.sweep_var = cells[0];
    r.sweep_value = std::strtod(cells[1].c_str(), nullptr);
    r.trial = std::atoi(cells[2].c_str());
    r.method = cells[3];
    r.layer = cells[4];
    r.snr_db = std::strtod(cells[5].c_str(), nullptr);
    r.rel_err = std::strtod(cells[6].c_str(), nullptr);
    r.wall_ms = std::strtod(cells[7].c_str(), nullptr);
    r.converged = cells[8] == "1";
    r.cert_verdict = cells[9];
    records.push_back(std::move(r));
  }
  return records;
}

void emit_summary(const std::vector<TrialRecord>& records, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("emit_summary: cannot open " + path.string());
  out << "sweep_var,sweep_value,method,layer,metric,q10,q25,q50,q75,q90,count\n";
  using Key = std::tuple<std::string, double, std::string, std::string, std::string>;
  std::map<Key, std::vector<double>> groups;
  for (const auto& r : records) {
    groups[{r.sweep_var, r.sweep_value, r.method, r.layer, "snr_db"}].push_back(r.snr_db);
    groups[{r.sweep_var, r.sweep_value, r.method, r.layer, "rel_err"}].push_back(r.rel_err);
  }
  for (const auto& [key, vals] : groups) {
    const Quantiles q = compute_quantiles(vals);
    out << std::get<0>(key) << ',' << fmt(std::get<1>(key)) << ',' << std::get<2>(key) << ','
        << std::get<3>(key) << ',' << std::get<4>(key) << ',' << fmt(q.q10) << ',' << fmt(q.q25)
        << ',' << fmt(q.q50) << ',' << fmt(q.q75) << ',' << fmt(q.q90) << ',' << vals.size()
        << '\n';
  }
  if (!out) throw std::runtime_error("emit_summary: write failed for " + path.string());
}

IndexSet random_mask(Index n, double conceal_fraction, Rng& rng) {
  if (!(conceal_fraction >= 0.0 && conceal_fraction < 1.0))
    throw std::invalid_argument("random_mask: conceal_fraction must be in [0, 1)");
  const Index concealed = static_cast<Index>(std::llround(conceal_fraction * double(n)));
  const Index observed = n - concealed;
  if (observed < 1) throw std::invalid_argument("random_mask: nothing observed");
  return rng.sample_without_replacement(n, observed);
}

IndexSet top_rows_mask(Index height, Index width, Index rows_concealed) {
  if (rows_concealed < 0 || rows_concealed >= height)
    throw std::invalid_argument("top_rows_mask: rows_concealed out of range");
  IndexSet observed;
  for (Index i = rows_concealed * width; i < height * width; ++i) observed.push_back(i);
  return observed;
}

namespace {

double masked_data_fit(const GeneratorNetwork& net, const Observation& obs, const Vec& z) {
  const Index n = net.output_dim();
  const ForwardTrace t = forward(net, z);
  const Vec est = obs.mask ? entries_of(t.output, *obs.mask) : t.output;
  return 0.5 * (obs.y_observed(n) - est).squaredNorm();
}

InversionResult invert_once(const GeneratorNetwork& net, const ForwardTrace& truth,
                            const Observation& obs, const std::string& method,
                            const MethodConfigs& cfg, Rng& method_rng) {
  if (method == "gd") return gradient_descent_invert(net, obs, cfg.gd, method_rng);
  if (method == "latent-pursuit") return latent_pursuit(net, obs, cfg.lp);
  if (method == "oracle") return oracle_end_to_end(net, obs, truth.supports, cfg.oracle);
  if (method == "oracle-layered") return oracle_layered(net, obs, truth.supports);
  if (method == "layered-bp") {
    InversionResult best;
    double best_fit = std::numeric_limits<double>::infinity();
    bool have = false;
    const std::vector<double> sweep =
        cfg.lbp_lambda_sweep.empty() ? std::vector<double>{0.0} : cfg.lbp_lambda_sweep;
    for (const double lam : sweep) {
      LbpConfig c = cfg.lbp;
      c.lambda_last = lam == 0.0 ? std::optional<double>() : std::optional<double>(lam);
      try {
        InversionResult r = layered_basis_pursuit(net, obs, c);
        const double fit = masked_data_fit(net, obs, r.z_hat);
        if (!have || fit < best_fit) {
          best = std::move(r);
          best_fit = fit;
          have = true;
        }
      } catch (const EmptySupportError& e) {
        (void)e;  // this lambda killed every coefficient; try the next one
      }
    }
    if (!have) {
      InversionResult r;
      r.z_hat = Vec::Zero(net.latent_dim());
      for (Index i = 1; i <= net.depth(); ++i) {
        r.x_hat.push_back(Vec::Zero(net.hidden_dim(i)));
        r.supports.emplace_back();
      }
      r.flags.push_back("all_lambdas_empty_support");
      SolveReport rep;
      rep.converged = false;
      r.stage_reports.push_back({"layered_bp", rep});
      return r;
    }
    if (cfg.lbp_debias) {
      bool all_nonempty = true;
      for (const auto& s : best.supports) all_nonempty = all_nonempty && !s.empty();
      if (all_nonempty) {
        DebiasResult d = debias(net, obs, best.supports, best.z_hat, cfg.oracle);
        best.stage_reports.push_back({"debias", d.report});
        if (d.kept_init) best.flags.push_back("debias_kept_init");
        best.z_hat = d.z;
      }
    }
    return best;
  }
  throw std::invalid_argument("unknown method: " + method);
}

}  // namespace

std::vector<TrialRecord> run_methods_on_trial(const GeneratorNetwork& net,
                                              const ForwardTrace& truth, const Observation& obs,
                                              const std::vector<std::string>& methods,
                                              const MethodConfigs& cfg, Rng trial_rng,
                                              const std::string& sweep_var, double sweep_value,
                                              int trial, const std::string& cert_verdict,
                                              bool timing) {
  std::vector<TrialRecord> records;
  const Index depth = net.depth();
  for (std::size_t mi = 0; mi < methods.size(); ++mi) {
    Rng method_rng = trial_rng.substream(0x4D00 + mi);
    const auto t0 = std::chrono::steady_clock::now();
    const InversionResult res = invert_once(net, truth, obs, methods[mi], cfg, method_rng);
    const double wall_ms =
        timing ? std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
                     .count()
               : 0.0;
    const bool conv = res.converged();

    const ForwardTrace at_zhat = forward(net, res.z_hat);
    auto add = [&](const std::string& layer, const Vec& t, const Vec& e) {
      TrialRecord r;
      r.sweep_var = sweep_var;
      r.sweep_value = sweep_value;
      r.trial = trial;
      r.method = methods[mi];
      r.layer = layer;
      r.snr_db = t.squaredNorm() > 0.0 ? snr_db(t, e) : 0.0;
      r.rel_err = rel_err(t, e);
      r.wall_ms = wall_ms;
      r.converged = conv;
      r.cert_verdict = cert_verdict;
      records.push_back(std::move(r));
    };
    add("z", truth.z, res.z_hat);
    for (Index i = 1; i <= depth; ++i) {
      const Vec& est = res.x_hat[static_cast<std::size_t>(i - 1)].size()
                           ? res.x_hat[static_cast<std::size_t>(i - 1)]
                           : at_zhat.hidden[static_cast<std::size_t>(i - 1)];
      add("x" + std::to_string(i), truth.hidden[static_cast<std::size_t>(i - 1)], est);
    }
    add("output", truth.output, at_zhat.output);
  }
  return records;
}

namespace {

/// Run tasks 0..count-1 on `jobs` threads; slot-per-task output keeps the
/// record order independent of scheduling.
template <class Task>
std::vector<TrialRecord> run_parallel(std::size_t count, int jobs, Task&& task) {
  std::vector<std::vector<TrialRecord>> slots(count);
  const int workers = std::max(1, jobs);
  if (workers == 1) {
    for (std::size_t i = 0; i < count; ++i) slots[i] = task(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w)
      pool.emplace_back([&, w] {
        try {
          while (true) {
            const std::size_t i = next.fetch_add(1);
            if (i >= count) break;
            slots[i] = task(i);
          }
        } catch (...) {
          errors[static_cast<std::size_t>(w)] = std::current_exception();
        }
      });
    for (auto& t : pool) t.join();
    for (const auto& e : errors)
      if (e) std::rethrow_exception(e);
  }
  std::vector<TrialRecord> merged;
  for (auto& s : slots)
    merged.insert(merged.end(), std::make_move_iterator(s.begin()),
                  std::make_move_iterator(s.end()));
  return merged;
}

}  // namespace

PhasePlan PhasePlan::paper_scale(Index n0) {
  PhasePlan plan;
  plan.n = 625;
  plan.n0 = n0;
  plan.n1_grid.clear();
  for (Index n1 = 50; n1 <= 1000; n1 += 50) plan.n1_grid.push_back(n1);
  plan.trials = 512;
  return plan;
}

std::vector<TrialRecord> run_phase_transition(const PhasePlan& plan) {
  if (plan.trials < 1) throw std::invalid_argument("phase: trials must be >= 1");
  if (plan.n1_grid.empty()) throw std::invalid_argument("phase: empty n1 grid");

  struct TaskId {
    Index n1;
    int trial;
  };
  std::vector<TaskId> tasks;
  for (const Index n1 : plan.n1_grid)
    for (int t = 0; t < plan.trials; ++t) tasks.push_back({n1, t});

  const Rng base(plan.seed);
  return run_parallel(tasks.size(), plan.jobs, [&](std::size_t ti) {
    const auto [n1, trial] = tasks[ti];
    // reproducible from (seed, n0, n1, trial) alone
    Rng rng = base.substream(static_cast<std::uint64_t>(plan.n0))
                  .substream(static_cast<std::uint64_t>(n1))
                  .substream(static_cast<std::uint64_t>(trial));
    std::vector<Mat> weights;
    weights.push_back(rng.gaussian_matrix(n1, plan.n0, 1.0 / std::sqrt(double(n1))));
    weights.push_back(rng.gaussian_matrix(plan.n, n1, 1.0 / std::sqrt(double(plan.n))));
    const GeneratorNetwork net(std::move(weights), plan.activation);
    const Vec z = rng.gaussian_vector(plan.n0);
    const ForwardTrace truth = forward(net, z);

    Observation obs;
    obs.y = truth.output;
    if (plan.sigma > 0.0) {
      obs.y += plan.sigma * rng.gaussian_vector(plan.n);
      obs.sigma = plan.sigma;
    }

    CertifyPolicy policy;
    policy.mode = CertifyPolicy::Mode::generic;
    const UniquenessCertificate cert = certify_uniqueness(net, truth, policy);

    return run_methods_on_trial(net, truth, obs, plan.methods, plan.cfg, rng.substream(0x7472),
                                "n1", double(n1), trial, to_string(cert.verdict), plan.timing);
  });
}

std::vector<TrialRecord> run_inpainting(const InpaintPlan& plan) {
  if (plan.trials < 1) throw std::invalid_argument("inpaint: trials must be >= 1");

  GeneratorNetwork net = [&] {
    if (!plan.manifest.empty()) return load_network(plan.manifest);
    Rng fixture_rng = Rng(plan.fixture_seed).substream(0x46495854ull);
    return random_network(plan.fixture_dims, plan.fixture_activation, fixture_rng);
  }();
  const Index n = net.output_dim();
  if (plan.mask_kind == InpaintPlan::MaskKind::top_rows) {
    if (plan.image_height <= 0 || n % plan.image_height != 0)
      throw std::invalid_argument("inpaint: output dim not divisible by image height");
  }

  const double sweep_value = plan.mask_kind == InpaintPlan::MaskKind::random
                                 ? plan.conceal_fraction
                                 : double(plan.rows_concealed) / double(plan.image_height);
  const std::string sweep_var =
      plan.mask_kind == InpaintPlan::MaskKind::random ? "mask_random" : "mask_top_rows";

  const Rng base(plan.seed);
  return run_parallel(static_cast<std::size_t>(plan.trials), plan.jobs, [&](std::size_t ti) {
    const int trial = static_cast<int>(ti);
    Rng rng = base.substream(static_cast<std::uint64_t>(trial));
    const Vec z = rng.gaussian_vector(net.latent_dim());
    const ForwardTrace truth = forward(net, z);

    Observation obs;
    obs.y = truth.output;
    if (plan.sigma > 0.0) {
      obs.y += plan.sigma * rng.gaussian_vector(n);
      obs.sigma = plan.sigma;
    }
    if (plan.mask_kind == InpaintPlan::MaskKind::random) {
      Rng mask_rng = rng.substream(0x6D61736Bull);
      obs.mask = random_mask(n, plan.conceal_fraction, mask_rng);
    } else {
      obs.mask = top_rows_mask(plan.image_height, n / plan.image_height, plan.rows_concealed);
    }

    CertifyPolicy policy;
    policy.mode = CertifyPolicy::Mode::generic;
    const UniquenessCertificate cert = certify_uniqueness(net, truth, policy);

    return run_methods_on_trial(net, truth, obs, plan.methods, plan.cfg, rng.substream(0x7472),
                                sweep_var, sweep_value, trial, to_string(cert.verdict),
                                plan.timing);
  });
}

}  // namespace geninv
