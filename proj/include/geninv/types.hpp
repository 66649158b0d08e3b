#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

namespace geninv {

using Scalar = double;
using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using Index = Eigen::Index;

/// Sorted, duplicate-free list of coordinate indices (a support or a mask).
using IndexSet = std::vector<Index>;

inline IndexSet all_indices(Index n) {
  IndexSet s(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) s[static_cast<std::size_t>(i)] = i;
  return s;
}

inline IndexSet complement(const IndexSet& s, Index n) {
  IndexSet out;
  out.reserve(static_cast<std::size_t>(n) - s.size());
  std::size_t k = 0;
  for (Index i = 0; i < n; ++i) {
    if (k < s.size() && s[k] == i) {
      ++k;
    } else {
      out.push_back(i);
    }
  }
  return out;
}

inline Mat rows_of(const Mat& m, const IndexSet& rows) {
  Mat out(static_cast<Index>(rows.size()), m.cols());
  for (Index i = 0; i < out.rows(); ++i) out.row(i) = m.row(rows[static_cast<std::size_t>(i)]);
  return out;
}

inline Mat cols_of(const Mat& m, const IndexSet& cols) {
  Mat out(m.rows(), static_cast<Index>(cols.size()));
  for (Index j = 0; j < out.cols(); ++j) out.col(j) = m.col(cols[static_cast<std::size_t>(j)]);
  return out;
}

inline Vec entries_of(const Vec& v, const IndexSet& idx) {
  Vec out(static_cast<Index>(idx.size()));
  for (Index i = 0; i < out.size(); ++i) out[i] = v[idx[static_cast<std::size_t>(i)]];
  return out;
}

/// Scatter `vals` into a zero vector of length n at positions `idx`.
inline Vec scatter(const Vec& vals, const IndexSet& idx, Index n) {
  Vec out = Vec::Zero(n);
  for (Index i = 0; i < vals.size(); ++i) out[idx[static_cast<std::size_t>(i)]] = vals[i];
  return out;
}

template <typename Derived>
auto relu(const Eigen::MatrixBase<Derived>& v) {
  return v.cwiseMax(typename Derived::Scalar(0));
}

template <typename Derived>
auto soft_threshold(const Eigen::MatrixBase<Derived>& v, typename Derived::Scalar t) {
  using S = typename Derived::Scalar;
  return v.unaryExpr([t](S x) { return x > t ? x - t : (x < -t ? x + t : S(0)); });
}

}  // namespace geninv
