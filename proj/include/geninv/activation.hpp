#pragma once

#include "geninv/types.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace geninv {

enum class ActivationKind { identity, tanh_fn, sigmoid, piecewise_linear, leaky_relu };

std::string to_string(ActivationKind k);
ActivationKind activation_kind_from_string(const std::string& name);

// Output nonlinearity of the generator. Every supported kind is invertible and
// strictly monotonic increasing; tanh/sigmoid inverses are clamped to their
// open range with delta = 1e-12 before inversion.
struct ActivationSpec {
  ActivationKind kind = ActivationKind::tanh_fn;
  double alpha = 0.1;  // outer slope (piecewise_linear) or negative slope (leaky_relu)
  double knee = 1.0;   // piecewise_linear knee location, > 0

  static constexpr double kClampDelta = 1e-12;

  void validate() const {
    const bool needs_alpha =
        kind == ActivationKind::piecewise_linear || kind == ActivationKind::leaky_relu;
    if (needs_alpha && !(alpha > 0.0 && alpha < 1.0))
      throw std::invalid_argument("activation: alpha must be in (0, 1)");
    if (kind == ActivationKind::piecewise_linear && !(knee > 0.0))
      throw std::invalid_argument("activation: knee must be > 0");
  }

  double value(double x) const {
    switch (kind) {
      case ActivationKind::identity: return x;
      case ActivationKind::tanh_fn: return std::tanh(x);
      case ActivationKind::sigmoid: return 1.0 / (1.0 + std::exp(-x));
      case ActivationKind::piecewise_linear:
        if (x > knee) return alpha * (x - knee) + knee;
        if (x < -knee) return alpha * (x + knee) - knee;
        return x;
      case ActivationKind::leaky_relu: return x >= 0.0 ? x : alpha * x;
    }
    return x;
  }

  double deriv(double x) const {
    switch (kind) {
      case ActivationKind::identity: return 1.0;
      case ActivationKind::tanh_fn: {
        const double t = std::tanh(x);
        return 1.0 - t * t;
      }
      case ActivationKind::sigmoid: {
        const double s = 1.0 / (1.0 + std::exp(-x));
        return s * (1.0 - s);
      }
      case ActivationKind::piecewise_linear:
        return std::abs(x) <= knee ? 1.0 : alpha;
      case ActivationKind::leaky_relu: return x >= 0.0 ? 1.0 : alpha;
    }
    return 1.0;
  }

  double inverse(double y) const {
    switch (kind) {
      case ActivationKind::identity: return y;
      case ActivationKind::tanh_fn:
        return std::atanh(std::clamp(y, -1.0 + kClampDelta, 1.0 - kClampDelta));
      case ActivationKind::sigmoid: {
        const double c = std::clamp(y, kClampDelta, 1.0 - kClampDelta);
        return std::log(c / (1.0 - c));
      }
      case ActivationKind::piecewise_linear:
        if (y > knee) return (y - knee) / alpha + knee;
        if (y < -knee) return (y + knee) / alpha - knee;
        return y;
      case ActivationKind::leaky_relu: return y >= 0.0 ? y : y / alpha;
    }
    return y;
  }

  Vec value(const Vec& v) const { return v.unaryExpr([this](double x) { return value(x); }); }
  Vec deriv(const Vec& v) const { return v.unaryExpr([this](double x) { return deriv(x); }); }
  Vec inverse(const Vec& v) const { return v.unaryExpr([this](double y) { return inverse(y); }); }

  /// sup of phi' over the whole domain.
  double max_deriv() const {
    switch (kind) {
      case ActivationKind::sigmoid: return 0.25;
      default: return 1.0;
    }
  }

  /// Lipschitz constant of phi' (zero for the piecewise-linear kinds, which
  /// have no curvature away from the knees).
  double curvature() const {
    switch (kind) {
      case ActivationKind::tanh_fn: return 4.0 / (3.0 * std::sqrt(3.0));
      case ActivationKind::sigmoid: return 1.0 / (6.0 * std::sqrt(3.0));
      default: return 0.0;
    }
  }

  /// Lipschitz constant of phi^{-1}; +inf where the inverse has unbounded
  /// slope (tanh, sigmoid) unless restricted to an observed range.
  double inverse_lipschitz() const {
    switch (kind) {
      case ActivationKind::identity: return 1.0;
      case ActivationKind::piecewise_linear:
      case ActivationKind::leaky_relu: return 1.0 / alpha;
      default: return std::numeric_limits<double>::infinity();
    }
  }

  /// Domain-restricted surrogate: max over observed entries of 1/phi'(phi^{-1}(y))
  /// after clamping. Finite for every kind; equals inverse_lipschitz() for the
  /// globally Lipschitz kinds when the observed range reaches the outer slopes.
  double inverse_lipschitz_on(const Vec& observed) const {
    double ell = 0.0;
    for (Index i = 0; i < observed.size(); ++i) {
      const double d = deriv(inverse(observed[i]));
      ell = std::max(ell, 1.0 / d);
    }
    return ell == 0.0 ? 1.0 : ell;
  }

  bool smooth() const {
    return kind == ActivationKind::identity || kind == ActivationKind::tanh_fn ||
           kind == ActivationKind::sigmoid;
  }
};

inline std::string to_string(ActivationKind k) {
  switch (k) {
    case ActivationKind::identity: return "identity";
    case ActivationKind::tanh_fn: return "tanh";
    case ActivationKind::sigmoid: return "sigmoid";
    case ActivationKind::piecewise_linear: return "piecewise_linear";
    case ActivationKind::leaky_relu: return "leaky_relu";
  }
  return "identity";
}

inline ActivationKind activation_kind_from_string(const std::string& name) {
  if (name == "identity") return ActivationKind::identity;
  if (name == "tanh") return ActivationKind::tanh_fn;
  if (name == "sigmoid") return ActivationKind::sigmoid;
  if (name == "piecewise_linear") return ActivationKind::piecewise_linear;
  if (name == "leaky_relu") return ActivationKind::leaky_relu;
  throw std::invalid_argument("unknown activation kind: " + name);
}

}  // namespace geninv
