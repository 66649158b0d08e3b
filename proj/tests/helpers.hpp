#pragma once

// Shared constructions for inversion tests: networks with prescribed hidden
// supports and low-coherence last-layer matrices, so coherence-based
// hypotheses can be made to hold by design.

#include "geninv/analysis.hpp"
#include "geninv/network.hpp"
#include "geninv/rng.hpp"

#include <Eigen/QR>

#include <optional>

namespace test_helpers {

using namespace geninv;

inline Mat orthonormal_columns(Rng& rng, Index rows, Index cols) {
  const Mat g = rng.gaussian_matrix(rows, cols);
  Eigen::HouseholderQR<Mat> qr(g);
  return qr.householderQ() * Mat::Identity(rows, cols);
}

/// Unit-column matrix Q + perturb*G with coherence roughly proportional to
/// perturb.
inline Mat low_coherence_matrix(Rng& rng, Index rows, Index cols, double perturb) {
  Mat m = orthonormal_columns(rng, rows, cols) + perturb * rng.gaussian_matrix(rows, cols);
  for (Index j = 0; j < cols; ++j) m.col(j).normalize();
  return m;
}

/// First-layer matrix and latent vector such that relu(W0 z) equals a
/// prescribed positive vector x1 exactly: support rows satisfy w_i'z = x1_i by
/// construction, off-support rows are sign-flipped to negative preactivations.
inline Mat first_layer_for(Rng& rng, const Vec& z, const Vec& x1) {
  const Index n1 = x1.size(), n0 = z.size();
  Mat w0(n1, n0);
  const double z2 = z.squaredNorm();
  for (Index i = 0; i < n1; ++i) {
    Vec row = rng.gaussian_vector(n0);
    row -= (row.dot(z) / z2) * z;  // now row.z = 0
    if (x1[i] > 0.0) {
      w0.row(i) = (row + (x1[i] / z2) * z).transpose();
    } else {
      const double margin = 0.5 + rng.uniform();
      w0.row(i) = (row - (margin / z2) * z).transpose();
    }
  }
  return w0;
}

struct ConstructedTwoLayer {
  GeneratorNetwork net;
  Vec z;
  ForwardTrace trace;
  double mu_last = 0.0;
};

/// Two-matrix net (one hidden layer) whose hidden support has exactly s1
/// entries with magnitudes in [0.5, 1.5], and whose last matrix is
/// unit-column with low coherence. Retries substreams until the requested
/// coherence bound holds.
inline std::optional<ConstructedTwoLayer> build_two_layer(Rng base, Index n0, Index n1, Index s1,
                                                          Index n, double perturb,
                                                          double mu_required,
                                                          ActivationKind kind) {
  for (std::uint64_t attempt = 0; attempt < 64; ++attempt) {
    Rng rng = base.substream(attempt);
    const Mat w1 = low_coherence_matrix(rng, n, n1, perturb);
    const double mu = mutual_coherence(w1);
    if (mu >= mu_required) continue;

    const Vec z = rng.gaussian_vector(n0);
    Vec x1 = Vec::Zero(n1);
    const IndexSet support = rng.sample_without_replacement(n1, s1);
    for (const auto i : support) x1[i] = 0.5 + rng.uniform();

    ActivationSpec act;
    act.kind = kind;
    std::vector<Mat> weights{first_layer_for(rng, z, x1), w1};
    GeneratorNetwork net(std::move(weights), act);
    ForwardTrace trace = forward(net, z);
    if (trace.supports[0] != support) continue;  // numerical fluke; retry
    ConstructedTwoLayer out{std::move(net), z, std::move(trace), mu};
    return out;
  }
  return std::nullopt;
}

struct ConstructedThreeLayer {
  GeneratorNetwork net;
  Vec z;
  ForwardTrace trace;
  double mu_mid = 0.0;   // coherence of the midlayer matrix restricted to S_2
  double mu_last = 0.0;  // coherence of the full last matrix
};

/// Three-matrix net (two hidden layers) with prescribed support sizes whose
/// realized coherence conditions s_1 < 1/(3 mu(W_1^{S_2})) and
/// s_2 < 1/(3 mu(W_2)) hold by construction. The S_2-rows of the midlayer
/// matrix form a near-orthonormal block whose rows are sign-flipped for
/// positivity; sign flips leave all column inner products (hence coherence)
/// unchanged. Requires n1 <= s2.
inline std::optional<ConstructedThreeLayer> build_three_layer(Rng base, Index n0, Index n1,
                                                              Index s1, Index n2, Index s2,
                                                              Index n, double perturb_mid,
                                                              double perturb_last) {
  for (std::uint64_t attempt = 0; attempt < 128; ++attempt) {
    Rng rng = base.substream(attempt);
    const Mat w2 = low_coherence_matrix(rng, n, n2, perturb_last);
    const double mu_last = mutual_coherence(w2);
    if (!(double(s2) < 1.0 / (3.0 * mu_last))) continue;

    const Vec z = rng.gaussian_vector(n0);
    Vec x1 = Vec::Zero(n1);
    for (const auto i : rng.sample_without_replacement(n1, s1)) x1[i] = 0.5 + rng.uniform();

    Mat block = low_coherence_matrix(rng, s2, n1, perturb_mid);
    const double mu_mid = mutual_coherence(block);
    if (!(double(s1) < 1.0 / (3.0 * mu_mid))) continue;
    Vec v = block * x1;
    if (v.cwiseAbs().minCoeff() < 0.02) continue;  // margin against noise
    for (Index i = 0; i < s2; ++i)
      if (v[i] < 0.0) block.row(i) = -block.row(i);

    const IndexSet support2 = rng.sample_without_replacement(n2, s2);
    Mat w1(n2, n1);
    const double x1n2 = x1.squaredNorm();
    Index next_in = 0;
    for (Index i = 0; i < n2; ++i) {
      const bool in_support =
          next_in < s2 && support2[static_cast<std::size_t>(next_in)] == i;
      if (in_support) {
        w1.row(i) = block.row(next_in++);
      } else {
        Vec row = rng.gaussian_vector(n1);
        row -= (row.dot(x1) / x1n2) * x1;
        w1.row(i) = (row - ((0.5 + rng.uniform()) / x1n2) * x1).transpose();
      }
    }

    ActivationSpec act;
    act.kind = ActivationKind::identity;
    std::vector<Mat> weights{first_layer_for(rng, z, x1), w1, w2};
    GeneratorNetwork net(std::move(weights), act);
    ForwardTrace trace = forward(net, z);
    if (static_cast<Index>(trace.supports[0].size()) != s1 || trace.supports[1] != support2)
      continue;
    ConstructedThreeLayer out{std::move(net), z, std::move(trace), mu_mid, mu_last};
    return out;
  }
  return std::nullopt;
}

/// Gaussian noise scaled to exactly the requested l2 norm.
inline Vec noise_with_norm(Rng& rng, Index n, double eps) {
  Vec e = rng.gaussian_vector(n);
  e *= eps / e.norm();
  return e;
}

}  // namespace test_helpers
