#include "geninv/inversion.hpp"

#include "geninv/analysis.hpp"

#include <Eigen/QR>
#include <Eigen/SVD>

#include <cmath>

namespace geninv {

namespace {

constexpr double kStabilityCoef = 4.224744871391589;  // 3 + sqrt(1.5)

Vec lstsq(const Mat& a, const Vec& b, bool* rank_deficient) {
  Eigen::ColPivHouseholderQR<Mat> qr(a);
  qr.setThreshold(1e-10);
  if (rank_deficient) *rank_deficient = qr.rank() < a.cols();
  return qr.solve(b);
}

struct DescentOutcome {
  Vec best;
  double best_obj = 0.0;
  double init_obj = 0.0;
  SolveReport report;
  bool line_search_failed = false;
};

/// Monotone backtracking gradient descent: Armijo halving from a spectral
/// (Barzilai-Borwein) initial guess, first iteration starting at
/// cfg.init_step. Never leaves the sublevel set of the init.
DescentOutcome backtracking_descent(const ComposedObjective& obj, Vec z0,
                                    const OracleConfig& cfg) {
  DescentOutcome out;
  Vec z = std::move(z0);
  Vec g(z.size());
  double f = obj.value_and_grad(z, &g);
  out.init_obj = f;
  out.best = z;
  out.best_obj = f;
  double step = cfg.init_step;
  Vec z_prev, g_prev;
  for (int k = 0; k < cfg.max_iters; ++k) {
    const double gnorm = g.norm();
    out.report.iterations = k;
    out.report.opt_residual = gnorm;
    if (gnorm <= cfg.grad_tol) {
      out.report.converged = true;
      break;
    }
    double s = 2.0 * step;
    if (k > 0) {
      const Vec dz = z - z_prev;
      const Vec dg = g - g_prev;
      const double curv = dz.dot(dg);
      if (curv > 0.0) s = dz.squaredNorm() / curv;
    }
    s = std::clamp(s, 1e-12, 1e6);
    z_prev = z;
    g_prev = g;
    bool accepted = false;
    Vec g_try(z.size());
    for (int half = 0; half < 80; ++half) {
      Vec z_try = z - s * g;
      const double f_try = obj.value_and_grad(z_try, &g_try);
      if (std::isfinite(f_try) && f_try <= f - 1e-4 * s * gnorm * gnorm) {
        z = std::move(z_try);
        g = g_try;
        f = f_try;
        accepted = true;
        break;
      }
      s *= 0.5;
    }
    if (!accepted) {
      out.line_search_failed = true;
      break;
    }
    step = s;
    if (f < out.best_obj) {
      out.best_obj = f;
      out.best = z;
    }
  }
  out.report.objective = out.best_obj;
  return out;
}

}  // namespace

IndexSet support_of(const Vec& v, double tau) {
  if (!(tau >= 0.0)) throw std::invalid_argument("support_of: tau must be >= 0");
  IndexSet s;
  for (Index i = 0; i < v.size(); ++i)
    if (v[i] > tau) s.push_back(i);
  return s;
}

Mat composed_effective_matrix(const GeneratorNetwork& net, const std::vector<IndexSet>& supports,
                              const IndexSet& observed) {
  const Index depth = net.depth();
  if (static_cast<Index>(supports.size()) != depth)
    throw std::invalid_argument("composed_effective_matrix: support count mismatch");
  for (const auto& s : supports)
    if (s.empty()) throw std::invalid_argument("composed_effective_matrix: empty support");
  Mat m = rows_of(net.weight(0), supports[0]);  // |S_1| x n_0
  for (Index i = 1; i < depth; ++i) {
    const Mat wi = rows_of(cols_of(net.weight(static_cast<std::size_t>(i)),
                                   supports[static_cast<std::size_t>(i - 1)]),
                           supports[static_cast<std::size_t>(i)]);
    m = wi * m;
  }
  const Mat wl = rows_of(cols_of(net.weights().back(), supports[static_cast<std::size_t>(depth - 1)]),
                         observed);
  return wl * m;
}

ComposedObjective make_composed_objective(const GeneratorNetwork& net, const Observation& obs,
                                          const std::vector<IndexSet>& supports) {
  const Index n = net.output_dim();
  obs.validate(n);
  const IndexSet observed = obs.observed(n);
  return ComposedObjective{composed_effective_matrix(net, supports, observed),
                           obs.y_observed(n), net.activation()};
}

// ---------------------------------------------------------------------------

InversionResult oracle_end_to_end(const GeneratorNetwork& net, const Observation& obs,
                                  const std::vector<IndexSet>& true_supports,
                                  const OracleConfig& cfg) {
  const Index n = net.output_dim();
  obs.validate(n);
  InversionResult res;
  const Index depth = net.depth();
  for (Index i = 0; i < depth; ++i)
    if (true_supports[static_cast<std::size_t>(i)].empty()) {
      res.flags.push_back("degenerate_empty_support");
      res.z_hat = Vec::Zero(net.latent_dim());
      for (Index j = 0; j < depth; ++j) res.x_hat.push_back(Vec::Zero(net.hidden_dim(j + 1)));
      res.supports = true_supports;
      return res;
    }

  const ComposedObjective obj = make_composed_objective(net, obs, true_supports);
  if (numerical_rank(obj.m) < net.latent_dim()) res.flags.push_back("oracle_rank_deficient");

  const DescentOutcome out = backtracking_descent(obj, Vec::Zero(net.latent_dim()), cfg);
  res.z_hat = out.best;
  res.supports = true_supports;
  res.stage_reports.push_back({"oracle_gd", out.report});
  if (out.line_search_failed) res.flags.push_back("oracle_line_search_stalled");

  // hidden estimates: support-masked linear chain at z_hat (the oracle's model)
  Vec x = res.z_hat;
  for (Index i = 0; i < depth; ++i) {
    const Vec full = net.weight(static_cast<std::size_t>(i)) * x;
    const auto& s = true_supports[static_cast<std::size_t>(i)];
    Vec masked = scatter(entries_of(full, s), s, full.size());
    res.x_hat.push_back(masked);
    x = std::move(masked);
  }
  return res;
}

InversionResult oracle_layered(const GeneratorNetwork& net, const Observation& obs,
                               const std::vector<IndexSet>& true_supports) {
  const Index n = net.output_dim();
  obs.validate(n);
  const Index depth = net.depth();
  InversionResult res;
  res.supports = true_supports;
  res.x_hat.assign(static_cast<std::size_t>(depth), Vec());
  for (Index i = 0; i < depth; ++i)
    res.x_hat[static_cast<std::size_t>(i)] = Vec::Zero(net.hidden_dim(i + 1));

  for (Index i = 0; i < depth; ++i)
    if (true_supports[static_cast<std::size_t>(i)].empty()) {
      res.flags.push_back("degenerate_empty_support");
      res.z_hat = Vec::Zero(net.latent_dim());
      return res;
    }

  const IndexSet observed = obs.observed(n);
  const auto& s_last = true_supports[static_cast<std::size_t>(depth - 1)];

  // image layer: project phi^{-1}(y) onto the column-supported last matrix
  {
    const Mat wbar = rows_of(cols_of(net.weights().back(), s_last), observed);
    const Vec target = net.activation().inverse(obs.y_observed(n));
    bool deficient = false;
    const Vec sol = lstsq(wbar, target, &deficient);
    if (deficient) res.flags.push_back("rank_deficient_layer_" + std::to_string(depth));
    res.x_hat[static_cast<std::size_t>(depth - 1)] =
        scatter(sol, s_last, net.hidden_dim(depth));
    SolveReport rep;
    rep.iterations = 1;
    rep.converged = !deficient;
    rep.opt_residual = 0.0;
    rep.objective = 0.5 * (wbar * sol - target).squaredNorm();
    res.stage_reports.push_back({"oracle_layer_" + std::to_string(depth), rep});
  }

  // intermediate layers: row- and column-supported projections
  for (Index i = depth - 1; i >= 1; --i) {
    const auto& s_above = true_supports[static_cast<std::size_t>(i)];
    const auto& s_here = true_supports[static_cast<std::size_t>(i - 1)];
    const Mat wbar = rows_of(cols_of(net.weight(static_cast<std::size_t>(i)), s_here), s_above);
    const Vec rhs = entries_of(res.x_hat[static_cast<std::size_t>(i)], s_above);
    bool deficient = false;
    const Vec sol = lstsq(wbar, rhs, &deficient);
    if (deficient) res.flags.push_back("rank_deficient_layer_" + std::to_string(i));
    res.x_hat[static_cast<std::size_t>(i - 1)] = scatter(sol, s_here, net.hidden_dim(i));
    SolveReport rep;
    rep.iterations = 1;
    rep.converged = !deficient;
    rep.opt_residual = 0.0;
    rep.objective = 0.5 * (wbar * sol - rhs).squaredNorm();
    res.stage_reports.push_back({"oracle_layer_" + std::to_string(i), rep});
  }

  // latent vector
  {
    const auto& s1 = true_supports[0];
    const Mat w0 = rows_of(net.weight(0), s1);
    const Vec rhs = entries_of(res.x_hat[0], s1);
    bool deficient = false;
    res.z_hat = lstsq(w0, rhs, &deficient);
    if (deficient) res.flags.push_back("rank_deficient_latent");
    SolveReport rep;
    rep.iterations = 1;
    rep.converged = !deficient;
    rep.opt_residual = 0.0;
    rep.objective = 0.5 * (w0 * res.z_hat - rhs).squaredNorm();
    res.stage_reports.push_back({"oracle_latent", rep});
  }
  return res;
}

OracleBounds oracle_bounds(const GeneratorNetwork& net, const std::vector<IndexSet>& true_supports,
                           double sigma, const std::optional<IndexSet>& mask) {
  const Index depth = net.depth();
  if (static_cast<Index>(true_supports.size()) != depth)
    throw std::invalid_argument("oracle_bounds: support count mismatch");
  const IndexSet observed = mask ? *mask : all_indices(net.output_dim());

  // eigenvalue range of each supported Gram matrix, j = 0..L
  std::vector<double> lo(static_cast<std::size_t>(depth) + 1), hi(static_cast<std::size_t>(depth) + 1);
  OracleBounds out;
  for (Index j = 0; j <= depth; ++j) {
    Mat wbar;
    if (j == 0) {
      wbar = rows_of(net.weight(0), true_supports[0]);
    } else if (j == depth) {
      wbar = rows_of(cols_of(net.weights().back(), true_supports[static_cast<std::size_t>(depth - 1)]),
                     observed);
    } else {
      wbar = rows_of(cols_of(net.weight(static_cast<std::size_t>(j)),
                             true_supports[static_cast<std::size_t>(j - 1)]),
                     true_supports[static_cast<std::size_t>(j)]);
    }
    const Eigen::VectorXd sv = Eigen::JacobiSVD<Mat>(wbar).singularValues();
    const double smax = sv.size() ? sv[0] : 0.0;
    const double smin = sv.size() ? sv[sv.size() - 1] : 0.0;
    hi[static_cast<std::size_t>(j)] = smax * smax;
    lo[static_cast<std::size_t>(j)] = smin * smin;
    if (wbar.rows() < wbar.cols() || smin <= 1e-10 * std::max(smax, 1.0)) {
      lo[static_cast<std::size_t>(j)] = 0.0;
      out.flags.push_back("singular_supported_matrix_layer_" + std::to_string(j));
    }
  }

  const double s2 = sigma * sigma;
  auto bound_from = [&](Index j_from, double count) {
    BoundPair bp;
    double prod_hi = 1.0, prod_lo = 1.0;
    for (Index j = j_from; j <= depth; ++j) {
      prod_hi *= hi[static_cast<std::size_t>(j)];
      prod_lo *= lo[static_cast<std::size_t>(j)];
    }
    bp.lower = prod_hi > 0.0 ? s2 * count / prod_hi : 0.0;
    bp.upper = prod_lo > 0.0 ? s2 * count / prod_lo
                             : std::numeric_limits<double>::infinity();
    return bp;
  };

  for (Index i = 1; i <= depth; ++i)
    out.layers.push_back(
        bound_from(i, double(true_supports[static_cast<std::size_t>(i - 1)].size())));
  out.latent = bound_from(0, double(net.latent_dim()));
  return out;
}

// ---------------------------------------------------------------------------

InversionResult layered_basis_pursuit(const GeneratorNetwork& net, const Observation& obs,
                                      const LbpConfig& cfg) {
  const Index n = net.output_dim();
  obs.validate(n);
  const Index depth = net.depth();
  if (cfg.sparsity_levels && static_cast<Index>(cfg.sparsity_levels->size()) != depth)
    throw std::invalid_argument("layered_basis_pursuit: sparsity level count mismatch");

  const IndexSet observed = obs.observed(n);
  const Vec y_obs = obs.y_observed(n);
  InversionResult res;
  res.x_hat.assign(static_cast<std::size_t>(depth), Vec());
  res.supports.assign(static_cast<std::size_t>(depth), IndexSet());

  double ell = net.activation().inverse_lipschitz();
  if (!std::isfinite(ell)) {
    ell = net.activation().inverse_lipschitz_on(y_obs);
    res.flags.push_back("surrogate_inverse_lipschitz");
  }
  double eps = obs.eps;
  if (eps == 0.0 && obs.sigma && *obs.sigma > 0.0)
    eps = eps_from_sigma(*obs.sigma, static_cast<Index>(observed.size()));

  double eps_next = ell * eps;  // noise bound seen by the current stage
  res.eps_schedule.push_back(eps_next);

  auto effective_lambda = [&](double lam) {
    if (!std::isfinite(lam))
      throw std::runtime_error("layered_basis_pursuit: eps schedule diverged");
    return lam == 0.0 ? cfg.lambda_floor : lam;
  };
  auto min_col_norm = [](const Mat& m) {
    double v = std::numeric_limits<double>::infinity();
    for (Index j = 0; j < m.cols(); ++j) v = std::min(v, m.col(j).norm());
    return v;
  };
  auto stage_sparsity = [&](Index layer, const IndexSet& recovered) {
    return cfg.sparsity_levels ? (*cfg.sparsity_levels)[static_cast<std::size_t>(layer - 1)]
                               : static_cast<Index>(recovered.size());
  };

  // image layer: basis pursuit on phi^{-1}(y)
  Vec above;  // supported values feeding the next stage down
  IndexSet s_above;
  {
    const Mat wl = rows_of(net.weights().back(), observed);
    const double lam = effective_lambda(cfg.lambda_last ? *cfg.lambda_last : 2.0 * eps_next);
    res.lambda_schedule.push_back(lam);
    auto [x, rep] = lasso(wl, net.activation().inverse(y_obs), lam, false, cfg.solver);
    res.stage_reports.push_back({"bp_layer_" + std::to_string(depth), rep});
    s_above = support_of(x.cwiseAbs(), cfg.support_tol);
    if (s_above.empty()) throw EmptySupportError(depth);
    res.x_hat[static_cast<std::size_t>(depth - 1)] = x;
    res.supports[static_cast<std::size_t>(depth - 1)] = s_above;
    eps_next *= kStabilityCoef * std::sqrt(double(stage_sparsity(depth, s_above))) /
                min_col_norm(wl);
    res.eps_schedule.push_back(eps_next);
    above = x;
  }

  // midlayers, top down
  for (Index i = depth - 1; i >= 1; --i) {
    const Mat wi = rows_of(net.weight(static_cast<std::size_t>(i)), s_above);
    const Vec rhs = entries_of(above, s_above);
    const double lam = effective_lambda(2.0 * eps_next);
    res.lambda_schedule.push_back(lam);
    auto [x, rep] = lasso(wi, rhs, lam, false, cfg.solver);
    res.stage_reports.push_back({"bp_layer_" + std::to_string(i), rep});
    const IndexSet s_here = support_of(x.cwiseAbs(), cfg.support_tol);
    if (s_here.empty()) throw EmptySupportError(i);
    res.x_hat[static_cast<std::size_t>(i - 1)] = x;
    res.supports[static_cast<std::size_t>(i - 1)] = s_here;
    eps_next *= kStabilityCoef * std::sqrt(double(stage_sparsity(i, s_here))) / min_col_norm(wi);
    res.eps_schedule.push_back(eps_next);
    above = x;
    s_above = s_here;
  }

  // latent vector: unregularized least squares on the recovered support
  {
    const Mat w0 = rows_of(net.weight(0), s_above);
    bool deficient = false;
    res.z_hat = lstsq(w0, entries_of(above, s_above), &deficient);
    if (deficient) res.flags.push_back("rank_deficient_latent");
    SolveReport rep;
    rep.iterations = 1;
    rep.converged = !deficient;
    rep.opt_residual = 0.0;
    rep.objective = 0.5 * (w0 * res.z_hat - entries_of(above, s_above)).squaredNorm();
    res.stage_reports.push_back({"bp_latent", rep});
  }
  return res;
}

// ---------------------------------------------------------------------------

InversionResult latent_pursuit(const GeneratorNetwork& net, const Observation& obs,
                               const LatentPursuitConfig& cfg) {
  const Index n = net.output_dim();
  obs.validate(n);
  const Index depth = net.depth();
  const IndexSet observed = obs.observed(n);
  const Vec y_obs = obs.y_observed(n);
  const ActivationSpec& act = net.activation();

  InversionResult res;
  res.x_hat.assign(static_cast<std::size_t>(depth), Vec());
  res.supports.assign(static_cast<std::size_t>(depth), IndexSet());

  // Stages that feed the support threshold run well below it: near-zero
  // iterate junk at the stop tolerance must not cross support_tol.
  SolverConfig stage_cfg = cfg.solver;
  stage_cfg.tol_opt = std::min(stage_cfg.tol_opt, 1e-3 * cfg.support_tol);

  // image layer: FISTA on 0.5||y - phi(W_L x)||^2 + lambda_L 1'x, x >= 0
  {
    const Mat wl = rows_of(net.weights().back(), observed);
    const double lmax = operator_norm_bound(wl, nullptr, 0.0, 1.0).value;
    const double res_bound =
        act.curvature() > 0.0 ? 1.0 + y_obs.cwiseAbs().maxCoeff() : 0.0;
    const double smoothness =
        std::max(lmax * (act.max_deriv() * act.max_deriv() + act.curvature() * res_bound), 1e-12);
    auto f = [&](const Vec& x, Vec* grad) {
      const Vec t = wl * x;
      Vec r(t.size());
      for (Index i = 0; i < t.size(); ++i) r[i] = act.value(t[i]) - y_obs[i];
      if (grad) {
        Vec d(t.size());
        for (Index i = 0; i < t.size(); ++i) d[i] = act.deriv(t[i]) * r[i];
        grad->noalias() = wl.transpose() * d;
        if (cfg.lambda_last != 0.0) grad->array() += cfg.lambda_last;
      }
      return 0.5 * r.squaredNorm() + cfg.lambda_last * x.sum();
    };
    auto proj = [](Vec& x) { x = relu(x); };
    auto [x, rep] = accelerated_projected_descent(f, proj, Vec::Zero(wl.cols()), smoothness,
                                                  cfg.solver);
    res.stage_reports.push_back({"last_layer", rep});
    res.lambda_schedule.push_back(cfg.lambda_last);
    if (!rep.converged) res.flags.push_back("stage_last_layer_not_converged");
    res.x_hat[static_cast<std::size_t>(depth - 1)] = x;
    res.supports[static_cast<std::size_t>(depth - 1)] = support_of(x, cfg.support_tol);
  }

  // midlayers: linearized ADMM with the zero-set inequality constraints
  for (Index i = depth - 1; i >= 1; --i) {
    const auto& s_above = res.supports[static_cast<std::size_t>(i)];
    const Index rows_above = net.hidden_dim(i + 1);
    if (s_above.empty()) {
      res.flags.push_back("empty_support_layer_" + std::to_string(i + 1));
      res.x_hat[static_cast<std::size_t>(i - 1)] = Vec::Zero(net.hidden_dim(i));
      continue;
    }
    const Mat& wi = net.weight(static_cast<std::size_t>(i));
    const Mat a = rows_of(wi, s_above);
    const Mat b = rows_of(wi, complement(s_above, rows_above));
    const Vec rhs = entries_of(res.x_hat[static_cast<std::size_t>(i)], s_above);
    AdmmResult admm = linearized_admm(a, b, rhs, cfg.lambda_mid, cfg.rho, 0.0,
                                      /*nonneg_x=*/true, cfg.solver);
    res.stage_reports.push_back({"midlayer_" + std::to_string(i), admm.report});
    res.lambda_schedule.push_back(cfg.lambda_mid);
    if (!admm.report.converged)
      res.flags.push_back("stage_midlayer_" + std::to_string(i) + "_not_converged");
    if (admm.norm_bound_from_trace) res.flags.push_back("norm_bound_from_trace");
    res.x_hat[static_cast<std::size_t>(i - 1)] = admm.x;
    res.supports[static_cast<std::size_t>(i - 1)] = support_of(admm.x, cfg.support_tol);
  }

  // latent stage: sign-free ridge step with the zero-set constraints
  {
    const auto& s1 = res.supports[0];
    if (s1.empty()) {
      res.flags.push_back("empty_support_layer_1");
      res.z_hat = Vec::Zero(net.latent_dim());
    } else {
      const Mat& w0 = net.weight(0);
      const Mat a = rows_of(w0, s1);
      const Mat b = rows_of(w0, complement(s1, net.hidden_dim(1)));
      const Vec rhs = entries_of(res.x_hat[0], s1);
      AdmmResult admm = linearized_admm(a, b, rhs, 0.0, cfg.rho, cfg.gamma,
                                        /*nonneg_x=*/false, cfg.solver);
      res.stage_reports.push_back({"latent", admm.report});
      if (!admm.report.converged) res.flags.push_back("stage_latent_not_converged");
      if (admm.norm_bound_from_trace) res.flags.push_back("norm_bound_from_trace");
      res.z_hat = admm.x;
    }
  }

  if (cfg.debias) {
    bool all_nonempty = true;
    for (const auto& s : res.supports) all_nonempty = all_nonempty && !s.empty();
    if (all_nonempty && res.z_hat.size() == net.latent_dim()) {
      DebiasResult d = debias(net, obs, res.supports, res.z_hat, cfg.debias_cfg);
      res.stage_reports.push_back({"debias", d.report});
      if (d.kept_init) res.flags.push_back("debias_kept_init");
      res.z_hat = d.z;
    } else {
      res.flags.push_back("debias_skipped_empty_support");
    }
  }
  return res;
}

DebiasResult debias(const GeneratorNetwork& net, const Observation& obs,
                    const std::vector<IndexSet>& supports, const Vec& z_init,
                    const OracleConfig& cfg) {
  const ComposedObjective obj = make_composed_objective(net, obs, supports);
  const DescentOutcome out = backtracking_descent(obj, z_init, cfg);
  DebiasResult d;
  d.report = out.report;
  if (out.best_obj <= out.init_obj) {
    d.z = out.best;
    d.kept_init = out.best_obj == out.init_obj;
  } else {
    d.z = z_init;  // monotone contract: never worse than the init
    d.kept_init = true;
  }
  return d;
}

// ---------------------------------------------------------------------------

InversionResult gradient_descent_invert(const GeneratorNetwork& net, const Observation& obs,
                                        const GdConfig& cfg, Rng rng) {
  const Index n = net.output_dim();
  obs.validate(n);
  const Index depth = net.depth();
  const IndexSet observed = obs.observed(n);
  const Vec y_obs = obs.y_observed(n);
  const Mat wl_obs = rows_of(net.weights().back(), observed);
  const ActivationSpec& act = net.activation();

  auto value_and_grad = [&](const Vec& z, Vec* grad) {
    std::vector<Vec> pre;
    pre.reserve(static_cast<std::size_t>(depth));
    Vec x = z;
    for (Index i = 0; i < depth; ++i) {
      pre.push_back(net.weight(static_cast<std::size_t>(i)) * x);
      x = relu(pre.back());
    }
    const Vec t = wl_obs * x;
    Vec r(t.size());
    for (Index i = 0; i < t.size(); ++i) r[i] = act.value(t[i]) - y_obs[i];
    if (grad) {
      Vec d(t.size());
      for (Index i = 0; i < t.size(); ++i) d[i] = act.deriv(t[i]) * r[i];
      Vec v = wl_obs.transpose() * d;
      for (Index j = depth - 1; j >= 0; --j) {
        const Vec& p = pre[static_cast<std::size_t>(j)];
        // relu subgradient: 0 at 0
        for (Index k = 0; k < v.size(); ++k)
          if (p[k] <= 0.0) v[k] = 0.0;
        v = net.weight(static_cast<std::size_t>(j)).transpose() * v;
      }
      *grad = std::move(v);
    }
    return 0.5 * r.squaredNorm();
  };

  const Vec z0 = rng.gaussian_vector(net.latent_dim());

  struct RunOutcome {
    Vec z;
    double objective = std::numeric_limits<double>::infinity();
    double grad_norm = std::numeric_limits<double>::infinity();
    int iterations = 0;
    bool reached_tol = false;
    double step = 0.0;
  };

  RunOutcome chosen;
  bool have_chosen = false;
  for (const double step0 : cfg.step_sizes) {
    Vec z = z0;
    Vec velocity = Vec::Zero(z.size());
    Vec g(z.size());
    RunOutcome run;
    run.step = step0;
    run.z = z;
    double step = step0;
    for (int k = 0; k < cfg.max_iters; ++k) {
      const double f = value_and_grad(z, &g);
      const double gnorm = g.norm();
      run.iterations = k + 1;
      if (!std::isfinite(f) || !std::isfinite(gnorm)) break;  // diverged
      if (f < run.objective) {
        run.objective = f;
        run.z = z;
        run.grad_norm = gnorm;
      }
      if (gnorm <= cfg.grad_tol) {
        run.reached_tol = true;
        run.z = z;
        run.objective = f;
        run.grad_norm = gnorm;
        break;
      }
      velocity = cfg.momentum * velocity - step * g;
      z += velocity;
      step *= cfg.step_decay;
    }
    if (run.reached_tol) {  // smallest step size reaching the gradient tolerance
      chosen = std::move(run);
      have_chosen = true;
      break;
    }
    if (!have_chosen || run.objective < chosen.objective) {
      chosen = std::move(run);
      have_chosen = true;
      chosen.reached_tol = false;
    }
  }

  InversionResult res;
  res.z_hat = chosen.z;
  if (cfg.debias) {
    const ForwardTrace pre_trace = forward(net, res.z_hat);
    bool all_nonempty = true;
    for (const auto& s : pre_trace.supports) all_nonempty = all_nonempty && !s.empty();
    if (all_nonempty) {
      OracleConfig dcfg;
      DebiasResult d = debias(net, obs, pre_trace.supports, res.z_hat, dcfg);
      res.stage_reports.push_back({"debias", d.report});
      res.z_hat = d.z;
    }
  }
  const ForwardTrace trace = forward(net, res.z_hat);
  res.x_hat = trace.hidden;
  res.supports = trace.supports;

  SolveReport rep;
  rep.iterations = chosen.iterations;
  rep.objective = chosen.objective;
  rep.opt_residual = chosen.grad_norm;
  rep.converged = chosen.reached_tol;
  res.stage_reports.insert(res.stage_reports.begin(), {"gradient_descent", rep});
  res.lambda_schedule.push_back(chosen.step);
  return res;
}

}  // namespace geninv
