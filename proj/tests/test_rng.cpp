#include "geninv/rng.hpp"

#include <doctest.h>

#include <cmath>

using namespace geninv;

TEST_CASE("identical seeds give identical streams") {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("different seeds and substreams diverge") {
  Rng a(1), b(2);
  CHECK(a.next_u64() != b.next_u64());
  Rng base(7);
  Rng s0 = base.substream(0), s1 = base.substream(1);
  CHECK(s0.next_u64() != s1.next_u64());
}

TEST_CASE("substream derivation is independent of parent draw position") {
  Rng a(9);
  a.next_u64();
  a.next_u64();
  Rng b(9);
  CHECK(a.substream(3).next_u64() == b.substream(3).next_u64());
}

TEST_CASE("uniform lies in [0,1) and uniform_open in (0,1]") {
  Rng r(5);
  for (int i = 0; i < 1000; ++i) {
    const double u = r.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    const double v = r.uniform_open();
    CHECK(v > 0.0);
    CHECK(v <= 1.0);
  }
}

TEST_CASE("gaussian moments are sane") {
  Rng r(11);
  const int n = 20000;
  double sum = 0, sum2 = 0;
  for (int i = 0; i < n; ++i) {
    const double g = r.gaussian();
    sum += g;
    sum2 += g * g;
  }
  CHECK(std::abs(sum / n) < 0.03);
  CHECK(std::abs(sum2 / n - 1.0) < 0.05);
}

TEST_CASE("sample_without_replacement gives sorted distinct indices") {
  Rng r(13);
  const IndexSet s = r.sample_without_replacement(20, 8);
  REQUIRE(s.size() == 8);
  for (std::size_t i = 1; i < s.size(); ++i) CHECK(s[i] > s[i - 1]);
  for (const auto v : s) {
    CHECK(v >= 0);
    CHECK(v < 20);
  }
}
