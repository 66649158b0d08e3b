#pragma once

#include "geninv/activation.hpp"
#include "geninv/types.hpp"

#include <stdexcept>
#include <string>
#include <vector>

namespace geninv {

// Feed-forward generator: x_1 = relu(W_0 z), x_{i+1} = relu(W_i x_i),
// output = phi(W_L x_L). Weights are W_0..W_L with W_i of shape
// n_{i+1} x n_i and W_L of shape n x n_L; no bias terms. Immutable after
// construction and safe to share across threads.
class GeneratorNetwork {
 public:
  GeneratorNetwork(std::vector<Mat> weights, ActivationSpec activation)
      : weights_(std::move(weights)), activation_(activation) {
    validate();
  }

  const std::vector<Mat>& weights() const { return weights_; }
  const Mat& weight(std::size_t i) const { return weights_[i]; }
  const ActivationSpec& activation() const { return activation_; }

  /// Number of hidden layers L (= weight count - 1).
  Index depth() const { return static_cast<Index>(weights_.size()) - 1; }
  Index latent_dim() const { return weights_.front().cols(); }
  Index output_dim() const { return weights_.back().rows(); }
  Index hidden_dim(Index i) const { return weights_[static_cast<std::size_t>(i - 1)].rows(); }

  /// [n_0, n_1, ..., n_L, n]
  std::vector<Index> dims() const {
    std::vector<Index> d;
    d.push_back(latent_dim());
    for (const auto& w : weights_) d.push_back(w.rows());
    return d;
  }

 private:
  void validate() const {
    if (weights_.empty()) throw std::invalid_argument("network: no weight matrices");
    activation_.validate();
    for (std::size_t i = 0; i < weights_.size(); ++i) {
      const Mat& w = weights_[i];
      if (w.rows() == 0 || w.cols() == 0)
        throw std::invalid_argument("network: empty weight matrix at layer " + std::to_string(i));
      if (i > 0 && w.cols() != weights_[i - 1].rows())
        throw std::invalid_argument("network: shape mismatch between layers " +
                                    std::to_string(i - 1) + " and " + std::to_string(i));
      if (!w.allFinite())
        throw std::invalid_argument("network: non-finite entry in layer " + std::to_string(i));
      for (Index j = 0; j < w.cols(); ++j)
        if (w.col(j).isZero(0.0))
          throw std::invalid_argument("network: all-zero column " + std::to_string(j) +
                                      " in layer " + std::to_string(i) +
                                      " (coordinate unrecoverable)");
    }
  }

  std::vector<Mat> weights_;
  ActivationSpec activation_;
};

// One forward evaluation with all intermediate state. hidden[i-1] is x_i;
// supports[i-1] the strictly positive coordinates of x_i.
struct ForwardTrace {
  Vec z;
  std::vector<Vec> hidden;
  Vec output;
  std::vector<IndexSet> supports;

  Index cardinality(std::size_t layer) const {
    return static_cast<Index>(supports[layer].size());
  }
  std::vector<Index> cardinalities() const {
    std::vector<Index> s;
    s.reserve(supports.size());
    for (const auto& sup : supports) s.push_back(static_cast<Index>(sup.size()));
    return s;
  }
};

/// Exact-arithmetic support: strictly positive coordinates.
inline IndexSet positive_support(const Vec& v) {
  IndexSet s;
  for (Index i = 0; i < v.size(); ++i)
    if (v[i] > 0.0) s.push_back(i);
  return s;
}

inline ForwardTrace forward(const GeneratorNetwork& net, const Vec& z) {
  if (z.size() != net.latent_dim())
    throw std::invalid_argument("forward: latent vector has length " + std::to_string(z.size()) +
                                ", expected " + std::to_string(net.latent_dim()));
  ForwardTrace trace;
  trace.z = z;
  Vec x = z;
  const Index depth = net.depth();
  for (Index i = 0; i < depth; ++i) {
    x = relu(net.weight(static_cast<std::size_t>(i)) * x);
    trace.hidden.push_back(x);
    trace.supports.push_back(positive_support(x));
  }
  trace.output = net.activation().value(net.weights().back() * x);
  return trace;
}

}  // namespace geninv
