#pragma once

// Test-only reference implementations, kept independent of the library code
// paths they check: integer matrices get exact fraction-free rank, subset
// scans run over bitmasks instead of k-combinations, lasso gets coordinate
// descent, nonnegative least squares gets an active-set solver.

#include "geninv/types.hpp"

#include <cmath>
#include <cstdint>
#include <vector>

namespace test_oracle {

using geninv::Index;
using geninv::Mat;
using geninv::Vec;

using IntMat = std::vector<std::vector<long long>>;

inline int popcount(std::uint32_t m) { return __builtin_popcount(m); }

/// Exact rank of a small integer matrix by fraction-free (Bareiss) elimination.
inline int integer_rank(IntMat a) {
  const std::size_t rows = a.size();
  if (rows == 0) return 0;
  const std::size_t cols = a[0].size();
  long long prev = 1;
  std::size_t r = 0;
  for (std::size_t c = 0; c < cols && r < rows; ++c) {
    std::size_t pivot = r;
    while (pivot < rows && a[pivot][c] == 0) ++pivot;
    if (pivot == rows) continue;
    std::swap(a[pivot], a[r]);
    for (std::size_t i = r + 1; i < rows; ++i) {
      for (std::size_t j = c + 1; j < cols; ++j)
        a[i][j] = (a[r][c] * a[i][j] - a[i][c] * a[r][j]) / prev;
      a[i][c] = 0;
    }
    prev = a[r][c];
    ++r;
  }
  return static_cast<int>(r);
}

inline IntMat submatrix(const IntMat& a, std::uint32_t row_mask, std::uint32_t col_mask) {
  IntMat out;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!(row_mask & (1u << i))) continue;
    std::vector<long long> row;
    for (std::size_t j = 0; j < a[i].size(); ++j)
      if (col_mask & (1u << j)) row.push_back(a[i][j]);
    out.push_back(std::move(row));
  }
  return out;
}

/// Smallest dependent column count, scanning all nonempty column masks.
inline int spark_exhaustive(const IntMat& a, std::uint32_t row_mask) {
  const int cols = static_cast<int>(a[0].size());
  int best = cols + 1;
  for (std::uint32_t cm = 1; cm < (1u << cols); ++cm) {
    const int k = popcount(cm);
    if (k >= best) continue;
    if (integer_rank(submatrix(a, row_mask, cm)) < k) best = k;
  }
  return best;
}

inline int subspark_exhaustive(const IntMat& a, int s) {
  const int rows = static_cast<int>(a.size());
  int best = static_cast<int>(a[0].size()) + 2;
  for (std::uint32_t rm = 0; rm < (1u << rows); ++rm) {
    if (popcount(rm) != s) continue;
    best = std::min(best, spark_exhaustive(a, rm));
  }
  return best;
}

inline int subrank_exhaustive(const IntMat& a, int s) {
  const int rows = static_cast<int>(a.size());
  const std::uint32_t all_cols = (1u << a[0].size()) - 1;
  int best = 1 << 20;
  for (std::uint32_t rm = 0; rm < (1u << rows); ++rm) {
    if (popcount(rm) != s) continue;
    best = std::min(best, integer_rank(submatrix(a, rm, all_cols)));
  }
  return best;
}

/// Coherence of an integer matrix restricted to a row mask; zero columns pin
/// the value to 1, matching the library convention.
inline double coherence_exhaustive(const IntMat& a, std::uint32_t row_mask) {
  const std::size_t cols = a[0].size();
  std::vector<long double> norm2(cols, 0.0L);
  std::vector<std::vector<long double>> dot(cols, std::vector<long double>(cols, 0.0L));
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!(row_mask & (1u << i))) continue;
    for (std::size_t j = 0; j < cols; ++j) {
      norm2[j] += static_cast<long double>(a[i][j]) * a[i][j];
      for (std::size_t k = j + 1; k < cols; ++k)
        dot[j][k] += static_cast<long double>(a[i][j]) * a[i][k];
    }
  }
  for (std::size_t j = 0; j < cols; ++j)
    if (norm2[j] == 0.0L) return 1.0;
  long double best = 0.0L;
  for (std::size_t j = 0; j < cols; ++j)
    for (std::size_t k = j + 1; k < cols; ++k) {
      const long double v = fabsl(dot[j][k]) / sqrtl(norm2[j] * norm2[k]);
      if (v > best) best = v;
    }
  return static_cast<double>(best > 1.0L ? 1.0L : best);
}

inline double mu_s_exhaustive(const IntMat& a, int s) {
  const int rows = static_cast<int>(a.size());
  double best = 0.0;
  for (std::uint32_t rm = 0; rm < (1u << rows); ++rm) {
    if (popcount(rm) != s) continue;
    best = std::max(best, coherence_exhaustive(a, rm));
  }
  return best;
}

/// Sign-free lasso by cyclic coordinate descent, run to a tight tolerance.
inline Vec lasso_coordinate_descent(const Mat& w, const Vec& y, double lambda,
                                    double tol = 1e-12, int max_sweeps = 200000) {
  const Index m = w.cols();
  const Mat gram = w.transpose() * w;
  const Vec wty = w.transpose() * y;
  Vec x = Vec::Zero(m);
  Vec gx = Vec::Zero(m);  // gram * x, maintained incrementally
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double max_change = 0.0;
    for (Index j = 0; j < m; ++j) {
      const double gjj = gram(j, j);
      if (gjj == 0.0) continue;
      const double rho = wty[j] - gx[j] + gjj * x[j];
      double xj = 0.0;
      if (rho > lambda)
        xj = (rho - lambda) / gjj;
      else if (rho < -lambda)
        xj = (rho + lambda) / gjj;
      const double delta = xj - x[j];
      if (delta != 0.0) {
        gx += delta * gram.col(j);
        x[j] = xj;
        max_change = std::max(max_change, std::abs(delta));
      }
    }
    if (max_change <= tol) break;
  }
  return x;
}

inline double lasso_objective(const Mat& w, const Vec& y, double lambda, const Vec& x) {
  return 0.5 * (w * x - y).squaredNorm() + lambda * x.lpNorm<1>();
}

/// Nonnegative least squares by the classic active-set method.
inline Vec nnls_active_set(const Mat& a, const Vec& b, int max_iter = 1000) {
  const Index m = a.cols();
  std::vector<bool> passive(static_cast<std::size_t>(m), false);
  Vec x = Vec::Zero(m);
  for (int it = 0; it < max_iter; ++it) {
    const Vec grad = a.transpose() * (b - a * x);
    Index best = -1;
    double best_val = 1e-12;
    for (Index j = 0; j < m; ++j)
      if (!passive[static_cast<std::size_t>(j)] && grad[j] > best_val) {
        best_val = grad[j];
        best = j;
      }
    if (best < 0) break;
    passive[static_cast<std::size_t>(best)] = true;

    while (true) {
      std::vector<Index> p;
      for (Index j = 0; j < m; ++j)
        if (passive[static_cast<std::size_t>(j)]) p.push_back(j);
      Mat ap(a.rows(), static_cast<Index>(p.size()));
      for (std::size_t k = 0; k < p.size(); ++k) ap.col(static_cast<Index>(k)) = a.col(p[k]);
      const Vec sp = ap.colPivHouseholderQr().solve(b);
      bool all_pos = true;
      for (Index k = 0; k < sp.size(); ++k)
        if (sp[k] <= 0.0) all_pos = false;
      if (all_pos) {
        x.setZero();
        for (std::size_t k = 0; k < p.size(); ++k) x[p[k]] = sp[static_cast<Index>(k)];
        break;
      }
      double alpha = 1.0;
      for (std::size_t k = 0; k < p.size(); ++k)
        if (sp[static_cast<Index>(k)] <= 0.0) {
          const double xi = x[p[k]];
          alpha = std::min(alpha, xi / (xi - sp[static_cast<Index>(k)]));
        }
      for (std::size_t k = 0; k < p.size(); ++k)
        x[p[k]] += alpha * (sp[static_cast<Index>(k)] - x[p[k]]);
      for (Index j = 0; j < m; ++j)
        if (passive[static_cast<std::size_t>(j)] && x[j] <= 1e-14) {
          passive[static_cast<std::size_t>(j)] = false;
          x[j] = 0.0;
        }
    }
  }
  return x;
}

/// Central finite differences of a scalar function of a vector.
template <class F>
Vec finite_difference_gradient(F&& f, const Vec& z, double h = 1e-6) {
  Vec g(z.size());
  for (Index i = 0; i < z.size(); ++i) {
    Vec zp = z, zm = z;
    zp[i] += h;
    zm[i] -= h;
    g[i] = (f(zp) - f(zm)) / (2.0 * h);
  }
  return g;
}

}  // namespace test_oracle
