#pragma once

#include "geninv/types.hpp"

#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <utility>

namespace geninv {

struct SolverConfig {
  enum class StepRule { power_iteration_lipschitz, fixed };

  int max_iters = 20000;
  double tol_opt = 1e-9;   // optimality residual
  double tol_feas = 1e-8;  // ADMM primal residual
  StepRule step_rule = StepRule::power_iteration_lipschitz;
  double fixed_step = 0.0;  // used by StepRule::fixed; must lie in (0, 2/L)
  double safety = 1.01;     // Lipschitz safety factor, >= 1

  void validate() const {
    if (max_iters < 1) throw std::invalid_argument("solver: max_iters must be >= 1");
    if (!(tol_opt > 0.0) || !(tol_feas > 0.0))
      throw std::invalid_argument("solver: tolerances must be > 0");
    if (!(safety >= 1.0)) throw std::invalid_argument("solver: safety must be >= 1");
  }
};

struct SolveReport {
  int iterations = 0;
  double objective = std::numeric_limits<double>::quiet_NaN();
  double opt_residual = std::numeric_limits<double>::infinity();
  double feas_residual = 0.0;
  bool converged = false;
};

struct NormBound {
  double value = 0.0;
  bool from_trace = false;  // power iteration stagnated; trace upper bound used
};

/// safety * lambda_max(A^T A + rho B^T B), estimated by power iteration with a
/// fixed-seed start; falls back to the trace upper bound on stagnation.
NormBound operator_norm_bound(const Mat& a, const Mat* b, double rho, double safety = 1.01);

/// Momentum scalar update t <- (1 + sqrt(1 + 4 t^2)) / 2.
inline double fista_momentum_next(double t) { return (1.0 + std::sqrt(1.0 + 4.0 * t * t)) / 2.0; }

/// Accelerated projected descent (FISTA). One iteration is:
///   g       = grad f(x)
///   u_next  = project(x - mu g)
///   t_next  = (1 + sqrt(1 + 4 t^2)) / 2
///   x       = u_next + ((t - 1)/t_next) (u_next - u)
/// f must supply the full smooth objective (any linear l1 shift folded in);
/// `smoothness` is a Lipschitz bound on grad f. Returns the best-objective u
/// iterate. Default convergence: projected-gradient fixed-point residual
/// ||u_next - x||/mu <= tol_opt; a custom stop predicate (evaluated on u every
/// `check_every` iterations) replaces it when supplied.
template <class F, class P>
std::pair<Vec, SolveReport> accelerated_projected_descent(
    F&& value_and_grad, P&& project, Vec x0, double smoothness, const SolverConfig& cfg,
    const std::function<bool(const Vec&)>& custom_stop = nullptr, int check_every = 10) {
  cfg.validate();
  if (!(smoothness > 0.0)) throw std::invalid_argument("solver: smoothness bound must be > 0");
  double mu;
  if (cfg.step_rule == SolverConfig::StepRule::fixed) {
    mu = cfg.fixed_step;
    if (!(mu > 0.0) || !(mu < 2.0 / smoothness))
      throw std::invalid_argument("solver: fixed step must lie in (0, 2/L)");
  } else {
    mu = 1.0 / (cfg.safety * smoothness);
  }

  Vec x = x0;
  Vec u = std::move(x0);
  project(u);
  double t = 1.0;

  Vec grad(x.size());
  Vec best = u;
  double best_obj = value_and_grad(u, nullptr);
  SolveReport report;
  report.opt_residual = std::numeric_limits<double>::infinity();

  for (int k = 0; k < cfg.max_iters; ++k) {
    value_and_grad(x, &grad);
    Vec u_next = x - mu * grad;
    project(u_next);
    const double obj = value_and_grad(u_next, nullptr);
    if (obj < best_obj) {
      best_obj = obj;
      best = u_next;
    }
    report.iterations = k + 1;
    report.opt_residual = (u_next - x).norm() / mu;

    bool stop = false;
    if (custom_stop) {
      if ((k + 1) % check_every == 0 || report.opt_residual <= cfg.tol_opt)
        stop = custom_stop(u_next);
    } else {
      stop = report.opt_residual <= cfg.tol_opt;
    }
    if (stop) {
      report.converged = true;
      best = std::move(u_next);  // the iterate that passed the stop test
      best_obj = obj;
      break;
    }

    const double t_next = fista_momentum_next(t);
    x = u_next + ((t - 1.0) / t_next) * (u_next - u);
    u = std::move(u_next);
    t = t_next;
  }
  report.objective = best_obj;
  return {best, report};
}

/// l1-regularized least squares  min 0.5||Wx - y||^2 + lambda ||x||_1,
/// optionally restricted to x >= 0 (then the l1 term is lambda 1^T x).
/// Solved by the accelerated projected scheme; the sign-free problem runs on
/// the positive/negative split. Convergence is declared on the coordinate
/// optimality conditions, which the report's opt_residual measures.
std::pair<Vec, SolveReport> lasso(const Mat& w, const Vec& y, double lambda, bool nonneg,
                                  const SolverConfig& cfg = {},
                                  const std::optional<Vec>& x0 = std::nullopt);

struct AdmmResult {
  Vec x;
  Vec a;  // auxiliary variable for the inequality block, kept <= 0
  Vec u;  // scaled dual
  SolveReport report;
  bool norm_bound_from_trace = false;
};

// Linearized ADMM for
//   min 0.5||A x - b||^2 + lambda 1^T x + (gamma/2)||x||^2
//   s.t. [x >= 0 when nonneg_x]  and  B x <= 0.
// One sweep:
//   x  <- P[ ((ab) x - A^T(Ax - b) - rho B^T(Bx - a - u) - lambda 1) / (ab + gamma) ]
//   a  <- -relu(u - B x)
//   u  <- u + a - B x
// with ab = operator_norm_bound(A, B, rho) and P = relu or identity per
// nonneg_x. Terminates when ||a - Bx|| <= tol_feas and ||x_next - x|| <= tol_opt.
AdmmResult linearized_admm(const Mat& a_block, const Mat& b_block, const Vec& b, double lambda,
                           double rho, double gamma, bool nonneg_x, const SolverConfig& cfg = {},
                           const std::optional<Vec>& x0 = std::nullopt);

}  // namespace geninv
