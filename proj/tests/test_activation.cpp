#include "geninv/activation.hpp"

#include <doctest.h>

#include <cmath>

using namespace geninv;

namespace {

ActivationSpec spec_of(ActivationKind k) {
  ActivationSpec s;
  s.kind = k;
  return s;
}

const ActivationKind kAllKinds[] = {ActivationKind::identity, ActivationKind::tanh_fn,
                                    ActivationKind::sigmoid, ActivationKind::piecewise_linear,
                                    ActivationKind::leaky_relu};

}  // namespace

TEST_CASE("tanh inverse of 0 is 0") {
  CHECK(spec_of(ActivationKind::tanh_fn).inverse(0.0) == 0.0);
}

TEST_CASE("tanh inverse of tanh(2) is 2 within 1e-9") {
  const ActivationSpec s = spec_of(ActivationKind::tanh_fn);
  CHECK(std::abs(s.inverse(s.value(2.0)) - 2.0) < 1e-9);
}

TEST_CASE("sigmoid derivative at 0 is 0.25") {
  CHECK(spec_of(ActivationKind::sigmoid).deriv(0.0) == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("inverse composed with eval is identity on the admissible domain") {
  for (const auto kind : kAllKinds) {
    const ActivationSpec s = spec_of(kind);
    for (double x = -6.0; x <= 6.0; x += 0.37) {
      const double back = s.inverse(s.value(x));
      CHECK(std::abs(back - x) <= 1e-10 * std::max(1.0, std::abs(x)));
    }
  }
}

TEST_CASE("derivative is strictly positive everywhere") {
  for (const auto kind : kAllKinds) {
    const ActivationSpec s = spec_of(kind);
    for (double x = -8.0; x <= 8.0; x += 0.61) CHECK(s.deriv(x) > 0.0);
  }
}

TEST_CASE("piecewise linear matches slopes and knees") {
  ActivationSpec s = spec_of(ActivationKind::piecewise_linear);
  s.alpha = 0.1;
  s.knee = 1.0;
  CHECK(s.value(0.5) == 0.5);
  CHECK(s.value(2.0) == doctest::Approx(0.1 * 1.0 + 1.0));
  CHECK(s.value(-2.0) == doctest::Approx(-(0.1 * 1.0 + 1.0)));
  CHECK(s.deriv(0.0) == 1.0);
  CHECK(s.deriv(3.0) == 0.1);
  CHECK(s.inverse_lipschitz() == doctest::Approx(10.0));
}

TEST_CASE("tanh inverse clamps instead of blowing up") {
  const ActivationSpec s = spec_of(ActivationKind::tanh_fn);
  CHECK(std::isfinite(s.inverse(1.0)));
  CHECK(std::isfinite(s.inverse(-1.5)));
}

TEST_CASE("domain-restricted inverse Lipschitz surrogate") {
  const ActivationSpec s = spec_of(ActivationKind::tanh_fn);
  Vec y(2);
  y << 0.0, std::tanh(1.0);
  // max over observed entries of 1/phi'(phi^{-1}(y))
  const double expect = 1.0 / (1.0 - std::tanh(1.0) * std::tanh(1.0));
  CHECK(s.inverse_lipschitz_on(y) == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("parameter validation") {
  ActivationSpec s = spec_of(ActivationKind::piecewise_linear);
  s.alpha = 1.5;
  CHECK_THROWS(s.validate());
  s.alpha = 0.1;
  s.knee = 0.0;
  CHECK_THROWS(s.validate());
  CHECK_THROWS(activation_kind_from_string("softplus"));
}
