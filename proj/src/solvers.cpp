#include "geninv/solvers.hpp"

#include "geninv/rng.hpp"

#include <cmath>

namespace geninv {

NormBound operator_norm_bound(const Mat& a, const Mat* b, double rho, double safety) {
  const Index n = a.cols() > 0 ? a.cols() : (b ? b->cols() : 0);
  if (n == 0) throw std::invalid_argument("operator_norm_bound: no columns");
  const bool has_a = a.rows() > 0;
  const bool has_b = b != nullptr && b->rows() > 0;
  if (!has_a && !has_b) return {safety * 1e-12, false};

  auto apply = [&](const Vec& v) -> Vec {
    Vec out = Vec::Zero(n);
    if (has_a) out.noalias() += a.transpose() * (a * v);
    if (has_b) out.noalias() += rho * (b->transpose() * (*b * v));
    return out;
  };

  Rng rng(0x506F7765ull, 0);  // fixed seed: the bound must be reproducible
  Vec v = rng.gaussian_vector(n);
  v.normalize();
  double lambda = 0.0;
  bool converged = false;
  for (int k = 0; k < 500; ++k) {
    Vec w = apply(v);
    const double norm = w.norm();
    if (norm == 0.0) break;  // v in the null space; operator may still be nonzero
    const double lambda_next = v.dot(w);
    w /= norm;
    if (k > 0 && std::abs(lambda_next - lambda) <= 1e-12 * std::max(1.0, lambda_next)) {
      lambda = lambda_next;
      converged = true;
      break;
    }
    lambda = lambda_next;
    v = std::move(w);
  }
  if (!converged || !(lambda > 0.0)) {
    double tr = 0.0;
    if (has_a) tr += a.squaredNorm();
    if (has_b) tr += rho * b->squaredNorm();
    return {safety * std::max(tr, 1e-12), true};
  }
  return {safety * lambda, false};
}

namespace {

/// lambda_max of W^T W via power iteration on the Gram matrix.
double gram_lambda_max(const Mat& gram) {
  Rng rng(0x4C697073ull, 1);
  Vec v = rng.gaussian_vector(gram.cols());
  v.normalize();
  double lambda = 0.0;
  for (int k = 0; k < 500; ++k) {
    Vec w = gram * v;
    const double norm = w.norm();
    if (norm == 0.0) return std::max(gram.trace(), 1e-12);
    const double next = v.dot(w);
    if (k > 0 && std::abs(next - lambda) <= 1e-12 * std::max(1.0, next)) return next;
    lambda = next;
    v = w / norm;
  }
  // stagnation: trace is a safe upper bound for a PSD matrix
  return std::max(gram.trace(), 1e-12);
}

/// max over coordinates of the lasso optimality-condition violation at x,
/// given the smooth-part gradient v = W^T(Wx - y).
double lasso_kkt_residual(const Vec& x, const Vec& v, double lambda, bool nonneg) {
  double r = 0.0;
  for (Index j = 0; j < x.size(); ++j) {
    if (nonneg) {
      if (x[j] > 0.0)
        r = std::max(r, std::abs(v[j] + lambda));
      else
        r = std::max(r, std::max(0.0, -(v[j] + lambda)));
    } else {
      if (x[j] > 0.0)
        r = std::max(r, std::abs(v[j] + lambda));
      else if (x[j] < 0.0)
        r = std::max(r, std::abs(v[j] - lambda));
      else
        r = std::max(r, std::max(0.0, std::abs(v[j]) - lambda));
    }
  }
  return r;
}

}  // namespace

std::pair<Vec, SolveReport> lasso(const Mat& w, const Vec& y, double lambda, bool nonneg,
                                  const SolverConfig& cfg, const std::optional<Vec>& x0) {
  if (w.rows() != y.size()) throw std::invalid_argument("lasso: shape mismatch");
  if (!(lambda >= 0.0)) throw std::invalid_argument("lasso: lambda must be >= 0");
  cfg.validate();
  const Index m = w.cols();
  const Mat gram = w.transpose() * w;
  const Vec wty = w.transpose() * y;
  const double y2 = 0.5 * y.squaredNorm();
  const double lmax = gram_lambda_max(gram);

  auto objective_at = [&](const Vec& x) {
    return 0.5 * x.dot(gram * x) - wty.dot(x) + y2 +
           lambda * (nonneg ? x.sum() : x.lpNorm<1>());
  };
  auto kkt_at = [&](const Vec& x) {
    const Vec v = gram * x - wty;
    return lasso_kkt_residual(x, v, lambda, nonneg);
  };

  Vec x_hat;
  SolveReport report;
  if (nonneg) {
    auto f = [&](const Vec& x, Vec* grad) {
      const Vec gx = gram * x;
      if (grad) *grad = gx - wty + Vec::Constant(m, lambda);
      return 0.5 * x.dot(gx) - wty.dot(x) + y2 + lambda * x.sum();
    };
    auto proj = [](Vec& x) { x = relu(x); };
    std::function<bool(const Vec&)> stop = [&](const Vec& x) {
      return kkt_at(x) <= cfg.tol_opt;
    };
    Vec start = x0 ? *x0 : Vec::Zero(m);
    auto [sol, rep] = accelerated_projected_descent(f, proj, std::move(start), lmax, cfg, stop, 10);
    x_hat = std::move(sol);
    report = rep;
  } else {
    // split x = p - q with p, q >= 0
    auto f = [&](const Vec& pq, Vec* grad) {
      const Vec x = pq.head(m) - pq.tail(m);
      const Vec v = gram * x - wty;
      if (grad) {
        grad->resize(2 * m);
        grad->head(m) = v.array() + lambda;
        grad->tail(m) = -v.array() + lambda;
      }
      return 0.5 * x.dot(gram * x) - wty.dot(x) + y2 + lambda * pq.sum();
    };
    auto proj = [](Vec& x) { x = relu(x); };
    std::function<bool(const Vec&)> stop = [&](const Vec& pq) {
      return kkt_at(pq.head(m) - pq.tail(m)) <= cfg.tol_opt;
    };
    Vec start = Vec::Zero(2 * m);
    if (x0) {
      start.head(m) = relu(*x0);
      start.tail(m) = relu(-*x0);
    }
    auto [sol, rep] =
        accelerated_projected_descent(f, proj, std::move(start), 2.0 * lmax, cfg, stop, 10);
    x_hat = sol.head(m) - sol.tail(m);
    report = rep;
  }

  report.opt_residual = kkt_at(x_hat);
  report.converged = report.opt_residual <= cfg.tol_opt;
  report.objective = objective_at(x_hat);
  return {std::move(x_hat), report};
}

AdmmResult linearized_admm(const Mat& a_block, const Mat& b_block, const Vec& b, double lambda,
                           double rho, double gamma, bool nonneg_x, const SolverConfig& cfg,
                           const std::optional<Vec>& x0) {
  cfg.validate();
  if (!(rho > 0.0)) throw std::invalid_argument("linearized_admm: rho must be > 0");
  if (!(gamma >= 0.0)) throw std::invalid_argument("linearized_admm: gamma must be >= 0");
  if (a_block.rows() != b.size()) throw std::invalid_argument("linearized_admm: shape mismatch");
  const Index n = a_block.cols() > 0 ? a_block.cols() : b_block.cols();
  if (b_block.cols() > 0 && b_block.cols() != n)
    throw std::invalid_argument("linearized_admm: data/inequality column mismatch");

  const bool has_a = a_block.rows() > 0;
  const bool has_b = b_block.rows() > 0;
  const NormBound nb = operator_norm_bound(a_block, has_b ? &b_block : nullptr, rho, cfg.safety);
  const double ab = nb.value;
  const double denom = ab + gamma;

  AdmmResult res;
  res.norm_bound_from_trace = nb.from_trace;
  res.x = x0 ? *x0 : Vec::Zero(n);
  if (nonneg_x) res.x = relu(res.x);
  res.a = Vec::Zero(b_block.rows());
  res.u = Vec::Zero(b_block.rows());

  SolveReport& rep = res.report;
  for (int k = 0; k < cfg.max_iters; ++k) {
    Vec w = ab * res.x;
    if (has_a) w.noalias() -= a_block.transpose() * (a_block * res.x - b);
    if (has_b) w.noalias() -= rho * (b_block.transpose() * (b_block * res.x - res.a - res.u));
    if (lambda != 0.0) w.array() -= lambda;
    Vec x_next = w / denom;
    if (nonneg_x) x_next = relu(x_next);

    double feas = 0.0;
    if (has_b) {
      const Vec bx = b_block * x_next;
      res.a = -relu(res.u - bx);
      res.u += res.a - bx;
      feas = (res.a - bx).norm();
    }
    const double step = (x_next - res.x).norm();
    res.x = std::move(x_next);

    rep.iterations = k + 1;
    rep.opt_residual = step;
    rep.feas_residual = feas;
    if (step <= cfg.tol_opt && feas <= cfg.tol_feas) {
      rep.converged = true;
      break;
    }
  }

  double obj = lambda * res.x.sum() + 0.5 * gamma * res.x.squaredNorm();
  if (has_a) obj += 0.5 * (a_block * res.x - b).squaredNorm();
  rep.objective = obj;
  return res;
}

}  // namespace geninv
