#include "geninv/inversion.hpp"

#include "geninv/experiments.hpp"
#include "geninv/network_io.hpp"
#include "helpers.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <cmath>

using namespace geninv;
using test_helpers::build_three_layer;
using test_helpers::build_two_layer;
using test_helpers::noise_with_norm;
using test_helpers::orthonormal_columns;

namespace {

GeneratorNetwork gaussian_net(const std::vector<Index>& dims, ActivationKind kind, Rng& rng) {
  ActivationSpec act;
  act.kind = kind;
  return random_network(dims, act, rng);
}

/// Trace with s_1 >= n_0, resampling z until the latent step is well posed.
ForwardTrace realizable_trace(const GeneratorNetwork& net, Rng& rng) {
  for (int attempt = 0; attempt < 200; ++attempt) {
    const Vec z = rng.gaussian_vector(net.latent_dim());
    const ForwardTrace t = forward(net, z);
    bool ok = t.cardinality(0) >= net.latent_dim();
    for (Index i = 0; i < net.depth(); ++i) ok = ok && t.cardinality(i) > 0;
    if (ok) return t;
  }
  throw std::runtime_error("no realizable trace found");
}

}  // namespace

TEST_CASE("support_of basics") {
  Vec v(3);
  v << 0.0, 1e-12, 0.5;
  CHECK(support_of(v, 1e-8) == IndexSet{2});
  SUBCASE("threshold zero matches forward-trace supports") {
    Rng rng(61);
    GeneratorNetwork net = gaussian_net({4, 12, 9}, ActivationKind::tanh_fn, rng);
    const ForwardTrace t = forward(net, rng.gaussian_vector(4));
    CHECK(support_of(t.hidden[0], 0.0) == t.supports[0]);
  }
  SUBCASE("support shrinks as the threshold grows") {
    Rng rng(62);
    const Vec w = rng.gaussian_vector(40).cwiseAbs();
    std::size_t prev = 41;
    for (const double tau : {0.0, 0.1, 0.5, 1.0, 2.0}) {
      const auto s = support_of(w, tau).size();
      CHECK(s <= prev);
      prev = s;
    }
  }
}

// ---------------------------------------------------------------------------
// Oracles

TEST_CASE("end-to-end oracle is exact on noiseless identity-activation nets") {
  Rng rng(63);
  GeneratorNetwork net = gaussian_net({4, 12, 20}, ActivationKind::identity, rng);
  const ForwardTrace t = realizable_trace(net, rng);
  Observation obs;
  obs.y = t.output;
  const InversionResult res = oracle_end_to_end(net, obs, t.supports);
  CHECK((res.z_hat - t.z).norm() < 1e-9);
}

TEST_CASE("end-to-end oracle stays exact under a generic mask of few rows") {
  Rng rng(64);
  GeneratorNetwork net = gaussian_net({3, 10, 30}, ActivationKind::identity, rng);
  const ForwardTrace t = realizable_trace(net, rng);
  Observation obs;
  obs.y = t.output;
  Rng mask_rng = rng.substream(5);
  obs.mask = mask_rng.sample_without_replacement(30, 6);  // 6 >= n_0 = 3 generic rows
  const InversionResult res = oracle_end_to_end(net, obs, t.supports);
  CHECK((res.z_hat - t.z).norm() < 1e-6);
}

TEST_CASE("oracle error matches sigma^2 n_0 for an orthonormal effective matrix") {
  Rng rng(65);
  const Index m = 6, n = 24;
  const Mat q = orthonormal_columns(rng, n, m);
  ActivationSpec act;
  act.kind = ActivationKind::identity;
  std::vector<Mat> w{Mat::Identity(m, m), q};
  GeneratorNetwork net(std::move(w), act);
  const double sigma = 0.01;
  double total = 0.0;
  const int trials = 1000;
  for (int t = 0; t < trials; ++t) {
    Rng r = rng.substream(t);
    const Vec z = r.gaussian_vector(m).cwiseAbs();  // keep relu inactive
    const ForwardTrace trace = forward(net, z);
    Observation obs;
    obs.y = trace.output + sigma * r.gaussian_vector(n);
    const InversionResult res = oracle_end_to_end(net, obs, trace.supports);
    total += (res.z_hat - z).squaredNorm();
  }
  const double mse = total / trials;
  CHECK(mse > 0.8 * sigma * sigma * m);
  CHECK(mse < 1.2 * sigma * sigma * m);
}

TEST_CASE("layered oracle recovers every layer exactly in the noiseless case") {
  Rng rng(66);
  GeneratorNetwork net = gaussian_net({3, 9, 20, 28}, ActivationKind::tanh_fn, rng);
  const ForwardTrace t = realizable_trace(net, rng);
  Observation obs;
  obs.y = t.output;
  const InversionResult res = oracle_layered(net, obs, t.supports);
  CHECK((res.z_hat - t.z).norm() < 1e-8);
  for (Index i = 0; i < net.depth(); ++i)
    CHECK((res.x_hat[i] - t.hidden[i]).norm() < 1e-8);
}

TEST_CASE("oracle bound pairs are ordered and exact for orthonormal blocks") {
  Rng rng(67);
  SUBCASE("orthonormal: lower = upper = sigma^2 s") {
    const Mat q = orthonormal_columns(rng, 20, 8);
    ActivationSpec act;
    act.kind = ActivationKind::identity;
    std::vector<Mat> w{Mat::Identity(8, 8), q};
    GeneratorNetwork net(std::move(w), act);
    const IndexSet s1 = all_indices(8);
    const OracleBounds b = oracle_bounds(net, {s1}, 0.5);
    CHECK(b.layers[0].lower == doctest::Approx(0.25 * 8).epsilon(1e-9));
    CHECK(b.layers[0].upper == doctest::Approx(0.25 * 8).epsilon(1e-9));
  }
  SUBCASE("diagonal block with eigenvalues 1 and 4") {
    Mat d = Mat::Zero(2, 2);
    d(0, 0) = 1.0;
    d(1, 1) = 2.0;
    ActivationSpec act;
    act.kind = ActivationKind::identity;
    std::vector<Mat> w{Mat::Identity(2, 2), d};
    GeneratorNetwork net(std::move(w), act);
    const OracleBounds b = oracle_bounds(net, {all_indices(2)}, 1.0);
    CHECK(b.layers[0].lower == doctest::Approx(2.0 / 4.0));
    CHECK(b.layers[0].upper == doctest::Approx(2.0 / 1.0));
  }
  SUBCASE("lower never exceeds upper") {
    for (int t = 0; t < 10; ++t) {
      Rng r = rng.substream(t);
      GeneratorNetwork net = gaussian_net({3, 10, 18}, ActivationKind::identity, r);
      const ForwardTrace trace = realizable_trace(net, r);
      const OracleBounds b = oracle_bounds(net, trace.supports, 0.1);
      CHECK(b.latent.lower <= b.latent.upper);
      for (const auto& bp : b.layers) CHECK(bp.lower <= bp.upper);
    }
  }
}

TEST_CASE("layered oracle empirical errors sit inside the bound intervals") {
  Rng rng(68);
  GeneratorNetwork net = gaussian_net({4, 14, 40}, ActivationKind::identity, rng);
  const ForwardTrace t = realizable_trace(net, rng);
  const double sigma = 0.01;
  const OracleBounds bounds = oracle_bounds(net, t.supports, sigma);
  double z_total = 0.0, x_total = 0.0;
  const int trials = 300;
  for (int k = 0; k < trials; ++k) {
    Rng r = rng.substream(k);
    Observation obs;
    obs.y = t.output + sigma * r.gaussian_vector(40);
    const InversionResult res = oracle_layered(net, obs, t.supports);
    z_total += (res.z_hat - t.z).squaredNorm();
    x_total += (res.x_hat[0] - t.hidden[0]).squaredNorm();
  }
  const double z_mse = z_total / trials, x_mse = x_total / trials;
  CHECK(x_mse >= 0.7 * bounds.layers[0].lower);
  CHECK(x_mse <= 1.3 * bounds.layers[0].upper);
  CHECK(z_mse >= 0.7 * bounds.latent.lower);
  CHECK(z_mse <= 1.3 * bounds.latent.upper);
}

// ---------------------------------------------------------------------------
// Layered basis pursuit

TEST_CASE("eps schedule arithmetic on a unit-column last layer") {
  Rng rng(69);
  const Mat q = orthonormal_columns(rng, 12, 6);  // unit columns
  ActivationSpec act;
  act.kind = ActivationKind::identity;
  std::vector<Mat> w{Mat::Identity(6, 6), q};
  GeneratorNetwork net(std::move(w), act);
  Vec z(6);
  z << 2.0, 2.0, 2.0, 2.0, -1.0, -1.0;  // s_1 = 4
  const ForwardTrace t = forward(net, z);
  REQUIRE(t.cardinality(0) == 4);

  Observation obs;
  obs.y = t.output;
  obs.eps = 0.1;
  LbpConfig cfg;
  cfg.sparsity_levels = std::vector<Index>{4};
  const InversionResult res = layered_basis_pursuit(net, obs, cfg);
  CHECK(res.lambda_schedule[0] == doctest::Approx(0.2).epsilon(1e-12));
  REQUIRE(res.eps_schedule.size() == 2);
  CHECK(res.eps_schedule[0] == doctest::Approx(0.1).epsilon(1e-12));
  CHECK(res.eps_schedule[1] == doctest::Approx(0.844948974278318).epsilon(1e-9));
}

TEST_CASE("noiseless lambda floor replaces zero") {
  Rng rng(70);
  GeneratorNetwork net = gaussian_net({3, 9, 24}, ActivationKind::identity, rng);
  const ForwardTrace t = realizable_trace(net, rng);
  Observation obs;
  obs.y = t.output;
  const InversionResult res = layered_basis_pursuit(net, obs, {});
  CHECK(res.lambda_schedule[0] == doctest::Approx(1e-8));
  CHECK((res.z_hat - t.z).norm() / t.z.norm() < 1e-5);
}

TEST_CASE("noiseless Gaussian net under the coherence condition recovers z exactly") {
  // dims chosen so s_1 < 1/(3 mu(W_last)) is satisfiable with Gaussian weights
  ActivationSpec act;
  act.kind = ActivationKind::identity;
  Rng base(71);
  for (std::uint64_t attempt = 0; attempt < 32; ++attempt) {
    Rng rng = base.substream(attempt);
    GeneratorNetwork net = random_network({3, 8, 3000}, act, rng);
    const double mu = mutual_coherence(net.weights().back());
    const Vec z = rng.gaussian_vector(3);
    const ForwardTrace t = forward(net, z);
    const double s1 = double(t.cardinality(0));
    if (!(s1 >= 3 && s1 < 1.0 / (3.0 * mu))) continue;
    Observation obs;
    obs.y = t.output;
    const InversionResult res = layered_basis_pursuit(net, obs, {});
    CHECK((res.z_hat - z).norm() / z.norm() < 1e-6);
    return;
  }
  FAIL("no instance satisfied the coherence condition");
}

TEST_CASE("noisy support nesting on constructed two-layer nets") {
  Rng base(72);
  int built = 0;
  for (int t = 0; t < 20; ++t) {
    auto c = build_two_layer(base.substream(t), 3, 24, 8, 96, 0.006, 1.0 / 24.0,
                             ActivationKind::identity);
    if (!c) continue;
    ++built;
    const double sigma = 1e-4;
    Rng noise_rng = base.substream(1000 + t);
    const double eps = eps_from_sigma(sigma, 96);
    Observation obs;
    obs.y = c->trace.output + noise_with_norm(noise_rng, 96, eps);
    obs.eps = eps;
    LbpConfig cfg;
    cfg.sparsity_levels = std::vector<Index>{8};
    const InversionResult res = layered_basis_pursuit(c->net, obs, cfg);
    // recovered support must nest inside the true support
    for (const auto j : res.supports[0])
      CHECK(std::binary_search(c->trace.supports[0].begin(), c->trace.supports[0].end(), j));
  }
  CHECK(built >= 15);
}

TEST_CASE("deep support nesting with the row-restricted coherence recursion") {
  Rng base(73);
  auto c = build_three_layer(base, 2, 8, 2, 48, 24, 200, 0.02, 0.002);
  REQUIRE(c.has_value());
  CHECK(double(2) < 1.0 / (3.0 * c->mu_mid));
  CHECK(double(24) < 1.0 / (3.0 * c->mu_last));
  const double sigma = 1e-5;
  Rng noise_rng = base.substream(999);
  const double eps = eps_from_sigma(sigma, 200);
  Observation obs;
  obs.y = c->trace.output + noise_with_norm(noise_rng, 200, eps);
  obs.eps = eps;
  LbpConfig cfg;
  cfg.sparsity_levels = std::vector<Index>{2, 24};
  const InversionResult res = layered_basis_pursuit(c->net, obs, cfg);
  for (Index layer = 0; layer < 2; ++layer)
    for (const auto j : res.supports[static_cast<std::size_t>(layer)])
      CHECK(std::binary_search(c->trace.supports[static_cast<std::size_t>(layer)].begin(),
                               c->trace.supports[static_cast<std::size_t>(layer)].end(), j));
}

TEST_CASE("stability property of the basis-pursuit stage with unit columns") {
  // s = floor(1/(3 mu)) >= 1 instances: support nesting and the l-infinity bound
  Rng base(74);
  int done = 0;
  for (std::uint64_t seed_idx = 0; done < 10 && seed_idx < 60; ++seed_idx) {
    Rng rng = base.substream(seed_idx);
    Mat w = rng.gaussian_matrix(128, 64);
    for (Index j = 0; j < w.cols(); ++j) w.col(j).normalize();
    const double mu = mutual_coherence(w);
    const Index s = static_cast<Index>(std::floor(1.0 / (3.0 * mu)));
    if (s < 1) continue;
    Vec xs = Vec::Zero(64);
    for (const auto j : rng.sample_without_replacement(64, s))
      xs[j] = (0.5 + rng.uniform()) * (rng.uniform() < 0.5 ? -1.0 : 1.0);
    const double eps = 0.01;
    const Vec y = w * xs + noise_with_norm(rng, 128, eps);
    auto [x, rep] = lasso(w, y, 2.0 * eps, false, {});
    REQUIRE(rep.converged);
    CHECK((x - xs).cwiseAbs().maxCoeff() < (3.0 + std::sqrt(1.5)) * eps);
    for (Index j = 0; j < 64; ++j)
      if (std::abs(x[j]) > 1e-10) CHECK(xs[j] != 0.0);
    ++done;
  }
  CHECK(done == 10);
}

TEST_CASE("unnormalized columns: scaled error bounds still hold") {
  Rng base(75);
  int done = 0;
  for (std::uint64_t seed_idx = 0; done < 5 && seed_idx < 60; ++seed_idx) {
    Rng rng = base.substream(seed_idx);
    Mat w = rng.gaussian_matrix(128, 64);
    for (Index j = 0; j < w.cols(); ++j) w.col(j).normalize();
    const double mu = mutual_coherence(w);
    const Index s = static_cast<Index>(std::floor(1.0 / (3.0 * mu)));
    if (s < 1) continue;
    // scale columns: coherence is unchanged, bounds pick up the norms
    Vec scales(64);
    for (Index j = 0; j < 64; ++j) scales[j] = 0.5 + 1.5 * rng.uniform();
    Mat wd = w * scales.asDiagonal();
    Vec xs = Vec::Zero(64);
    for (const auto j : rng.sample_without_replacement(64, s)) xs[j] = 0.5 + rng.uniform();
    const double eps = 0.01;
    const Vec y = wd * xs + noise_with_norm(rng, 128, eps);
    auto [x, rep] = lasso(wd, y, 2.0 * eps, false, {});
    REQUIRE(rep.converged);
    const double min_norm = scales.minCoeff();
    const double linf_bound = (3.0 + std::sqrt(1.5)) * eps / min_norm;
    CHECK((x - xs).cwiseAbs().maxCoeff() < linf_bound);
    CHECK((x - xs).norm() < linf_bound * std::sqrt(double(s)));
    ++done;
  }
  CHECK(done == 5);
}

TEST_CASE("empty recovered support aborts with the layer index") {
  Rng rng(76);
  GeneratorNetwork net = gaussian_net({3, 9, 24}, ActivationKind::identity, rng);
  const ForwardTrace t = realizable_trace(net, rng);
  Observation obs;
  obs.y = t.output;
  LbpConfig cfg;
  cfg.lambda_last = 1e9;  // kills every coefficient at the image layer
  CHECK_THROWS_AS(layered_basis_pursuit(net, obs, cfg), EmptySupportError);
  try {
    layered_basis_pursuit(net, obs, cfg);
  } catch (const EmptySupportError& e) {
    CHECK(e.layer == net.depth());
  }
}

// ---------------------------------------------------------------------------
// Latent pursuit

TEST_CASE("latent pursuit inverts a noiseless tanh net in the recoverable regime") {
  Rng rng(77);
  GeneratorNetwork net = gaussian_net({4, 24, 96}, ActivationKind::tanh_fn, rng);
  const ForwardTrace t = realizable_trace(net, rng);
  Observation obs;
  obs.y = t.output;
  const InversionResult res = latent_pursuit(net, obs, {});
  CHECK((res.z_hat - t.z).norm() / t.z.norm() < 1e-4);
  CHECK((res.x_hat[0] - t.hidden[0]).norm() / t.hidden[0].norm() < 1e-4);
}

TEST_CASE("zero observation with positive lambda collapses everything to zero") {
  Rng rng(78);
  GeneratorNetwork net = gaussian_net({3, 10, 20}, ActivationKind::tanh_fn, rng);
  Observation obs;
  obs.y = Vec::Zero(20);  // phi(0) entrywise
  LatentPursuitConfig cfg;
  cfg.lambda_last = 0.1;
  cfg.gamma = 0.1;
  const InversionResult res = latent_pursuit(net, obs, cfg);
  CHECK(res.z_hat.isZero(0.0));
  for (const auto& x : res.x_hat) CHECK(x.isZero(0.0));
}

TEST_CASE("latent pursuit is no worse than layered BP on recoverable instances") {
  Rng base(79);
  int wins = 0, total = 0;
  for (int t = 0; t < 12; ++t) {
    Rng rng = base.substream(t);
    GeneratorNetwork net = gaussian_net({4, 20, 80}, ActivationKind::tanh_fn, rng);
    Vec z;
    ForwardTrace trace;
    try {
      trace = realizable_trace(net, rng);
    } catch (...) {
      continue;
    }
    z = trace.z;
    Observation obs;
    obs.y = trace.output;
    InversionResult bp;
    try {
      bp = layered_basis_pursuit(net, obs, {});
    } catch (const EmptySupportError&) {
      continue;
    }
    DebiasResult bp_debias = debias(net, obs, bp.supports, bp.z_hat);
    const InversionResult lp = latent_pursuit(net, obs, {});
    ++total;
    const double bp_err = (bp_debias.z - z).norm();
    const double lp_err = (lp.z_hat - z).norm();
    if (lp_err <= bp_err + 1e-6) ++wins;
  }
  REQUIRE(total >= 10);
  CHECK(double(wins) / double(total) >= 0.9);
}

TEST_CASE("mask covering all coordinates is bitwise identical to no mask") {
  Rng rng(80);
  GeneratorNetwork net = gaussian_net({3, 12, 30}, ActivationKind::tanh_fn, rng);
  const ForwardTrace t = realizable_trace(net, rng);
  Observation plain;
  plain.y = t.output;
  Observation full = plain;
  full.mask = all_indices(30);

  const InversionResult a = latent_pursuit(net, plain, {});
  const InversionResult b = latent_pursuit(net, full, {});
  REQUIRE(a.z_hat.size() == b.z_hat.size());
  for (Index i = 0; i < a.z_hat.size(); ++i) CHECK(a.z_hat[i] == b.z_hat[i]);

  Rng g1(4242), g2(4242);
  const InversionResult ga = gradient_descent_invert(net, plain, {}, g1);
  const InversionResult gb = gradient_descent_invert(net, full, {}, g2);
  for (Index i = 0; i < ga.z_hat.size(); ++i) CHECK(ga.z_hat[i] == gb.z_hat[i]);
}

TEST_CASE("drivers are deterministic given identical inputs") {
  Rng rng(81);
  GeneratorNetwork net = gaussian_net({3, 12, 30}, ActivationKind::tanh_fn, rng);
  const ForwardTrace t = realizable_trace(net, rng);
  Observation obs;
  obs.y = t.output;
  const InversionResult a = latent_pursuit(net, obs, {});
  const InversionResult b = latent_pursuit(net, obs, {});
  for (Index i = 0; i < a.z_hat.size(); ++i) CHECK(a.z_hat[i] == b.z_hat[i]);
}

// ---------------------------------------------------------------------------
// Debiasing

TEST_CASE("debias with true supports equals the oracle on noiseless data") {
  Rng rng(82);
  GeneratorNetwork net = gaussian_net({4, 14, 28}, ActivationKind::identity, rng);
  const ForwardTrace t = realizable_trace(net, rng);
  Observation obs;
  obs.y = t.output;
  const Vec init = t.z + 0.5 * rng.gaussian_vector(4);
  const DebiasResult d = debias(net, obs, t.supports, init);
  CHECK((d.z - t.z).norm() < 1e-9);
}

TEST_CASE("composed objective gradient matches central finite differences") {
  Rng base(83);
  for (int net_idx = 0; net_idx < 5; ++net_idx) {
    Rng rng = base.substream(net_idx);
    GeneratorNetwork net = gaussian_net({3, 10, 14, 22}, ActivationKind::tanh_fn, rng);
    const ForwardTrace t = realizable_trace(net, rng);
    Observation obs;
    obs.y = t.output + 0.05 * rng.gaussian_vector(22);
    const ComposedObjective obj = make_composed_objective(net, obs, t.supports);
    for (int p = 0; p < 2; ++p) {
      const Vec z = rng.gaussian_vector(3);
      Vec grad(3);
      obj.value_and_grad(z, &grad);
      const Vec fd = test_oracle::finite_difference_gradient(
          [&](const Vec& v) { return obj.value_and_grad(v, nullptr); }, z);
      CHECK((grad - fd).norm() / std::max(1e-12, fd.norm()) < 1e-5);
    }
  }
}

TEST_CASE("debias never increases the data-fit objective") {
  Rng base(84);
  for (int t = 0; t < 8; ++t) {
    Rng rng = base.substream(t);
    GeneratorNetwork net = gaussian_net({3, 12, 18}, ActivationKind::tanh_fn, rng);
    const ForwardTrace trace = realizable_trace(net, rng);
    Observation obs;
    obs.y = trace.output + 0.05 * rng.gaussian_vector(18);
    const Vec init = rng.gaussian_vector(3);
    const ComposedObjective obj = make_composed_objective(net, obs, trace.supports);
    const double f0 = obj.value_and_grad(init, nullptr);
    const DebiasResult d = debias(net, obs, trace.supports, init);
    CHECK(obj.value_and_grad(d.z, nullptr) <= f0 + 1e-12);
  }
}

// ---------------------------------------------------------------------------
// Gradient-descent baseline

TEST_CASE("gradient descent solves the purely linear single-layer problem") {
  Rng rng(85);
  ActivationSpec act;
  act.kind = ActivationKind::identity;
  std::vector<Mat> w{rng.gaussian_matrix(12, 4)};
  GeneratorNetwork net(std::move(w), act);  // no hidden layer, no relu
  const Vec z = rng.gaussian_vector(4);
  Observation obs;
  obs.y = net.weight(0) * z;
  const InversionResult res = gradient_descent_invert(net, obs, {}, Rng(4711));
  CHECK((res.z_hat - z).norm() < 1e-6);
}

TEST_CASE("first-segment regime defeats gradient descent") {
  // s_1 < n_0: the latent layer is not identifiable
  Rng base(86);
  int fails = 0, total = 0;
  for (int t = 0; t < 6; ++t) {
    Rng rng = base.substream(t);
    GeneratorNetwork net = gaussian_net({8, 10, 80}, ActivationKind::tanh_fn, rng);
    const Vec z = rng.gaussian_vector(8);
    const ForwardTrace trace = forward(net, z);
    if (trace.cardinality(0) >= 8 || trace.cardinality(0) == 0) continue;
    Observation obs;
    obs.y = trace.output;
    const InversionResult res = gradient_descent_invert(net, obs, {}, rng.substream(9));
    ++total;
    if ((res.z_hat - z).norm() / z.norm() > 0.5) ++fails;
  }
  REQUIRE(total >= 3);
  CHECK(fails >= total - 1);
}

TEST_CASE("third segment: gradient descent succeeds where layered pursuit cannot") {
  Rng base(87);
  int gd_ok = 0, layered_bad = 0, total = 0;
  for (int t = 0; t < 5; ++t) {
    Rng rng = base.substream(t);
    GeneratorNetwork net = gaussian_net({4, 90, 24}, ActivationKind::tanh_fn, rng);
    const Vec z = rng.gaussian_vector(4);
    const ForwardTrace trace = forward(net, z);
    if (trace.cardinality(0) <= 30) continue;
    Observation obs;
    obs.y = trace.output;
    ++total;
    const InversionResult gd = gradient_descent_invert(net, obs, {}, rng.substream(9));
    if ((gd.z_hat - z).norm() / z.norm() < 1e-3) ++gd_ok;
    try {
      const InversionResult bp = layered_basis_pursuit(net, obs, {});
      if ((bp.z_hat - z).norm() / z.norm() > 0.1) ++layered_bad;
    } catch (const EmptySupportError&) {
      ++layered_bad;
    }
  }
  REQUIRE(total >= 3);
  CHECK(gd_ok >= total - 1);
  CHECK(layered_bad >= total - 1);
}
