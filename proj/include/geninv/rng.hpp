#pragma once

#include "geninv/types.hpp"

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace geninv {

// Counter-based generator (Philox-style, 4x32 state, 10 rounds). Every random
// quantity in the project flows from one 64-bit seed; independent substreams
// are derived from (stream id, index) pairs so any trial can be replayed in
// isolation. Output is a pure function of (key, stream, counter).
class Rng {
 public:
  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0)
      : key_(seed), stream_(stream) {}

  /// Derive an independent stream; the counter restarts at zero.
  Rng substream(std::uint64_t idx) const {
    return Rng(key_, mix64(stream_ ^ (0x9E3779B97F4A7C15ull * (idx + 1))));
  }

  std::uint64_t next_u64() {
    if (buffered_) {
      buffered_ = false;
      return buffer_;
    }
    const auto b = block(key_, {static_cast<std::uint32_t>(counter_),
                                static_cast<std::uint32_t>(counter_ >> 32),
                                static_cast<std::uint32_t>(stream_),
                                static_cast<std::uint32_t>(stream_ >> 32)});
    ++counter_;
    buffer_ = (static_cast<std::uint64_t>(b[3]) << 32) | b[2];
    buffered_ = true;
    return (static_cast<std::uint64_t>(b[1]) << 32) | b[0];
  }

  /// Uniform in [0, 1), 53-bit resolution.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform in (0, 1]; safe as a log() argument.
  double uniform_open() {
    return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
  }

  /// Standard normal via Box-Muller; consumes exactly two uniforms.
  double gaussian() {
    const double u1 = uniform_open();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * std::numbers::pi * u2);
  }

  /// Uniform integer in [0, bound). Modulo bias is negligible for experiment
  /// subsampling and keeps the draw count fixed.
  std::uint64_t uniform_int(std::uint64_t bound) { return next_u64() % bound; }

  Vec gaussian_vector(Index n) {
    Vec v(n);
    for (Index i = 0; i < n; ++i) v[i] = gaussian();
    return v;
  }

  /// Entries drawn in column-major order.
  Mat gaussian_matrix(Index rows, Index cols, double stddev = 1.0) {
    Mat m(rows, cols);
    for (Index j = 0; j < cols; ++j)
      for (Index i = 0; i < rows; ++i) m(i, j) = stddev * gaussian();
    return m;
  }

  /// k distinct indices from [0, n), sorted ascending (partial Fisher-Yates).
  IndexSet sample_without_replacement(Index n, Index k) {
    IndexSet pool = all_indices(n);
    IndexSet out;
    out.reserve(static_cast<std::size_t>(k));
    for (Index i = 0; i < k; ++i) {
      const auto j = i + static_cast<Index>(uniform_int(
                             static_cast<std::uint64_t>(n - i)));
      std::swap(pool[static_cast<std::size_t>(i)], pool[static_cast<std::size_t>(j)]);
      out.push_back(pool[static_cast<std::size_t>(i)]);
    }
    std::sort(out.begin(), out.end());
    return out;
  }

 private:
  static std::uint64_t mix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
  }

  static std::array<std::uint32_t, 4> block(std::uint64_t key,
                                            std::array<std::uint32_t, 4> ctr) {
    std::uint32_t k0 = static_cast<std::uint32_t>(key);
    std::uint32_t k1 = static_cast<std::uint32_t>(key >> 32);
    for (int round = 0; round < 10; ++round) {
      const std::uint64_t p0 = 0xD2511F53ull * ctr[0];
      const std::uint64_t p1 = 0xCD9E8D57ull * ctr[2];
      ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ k0,
             static_cast<std::uint32_t>(p1),
             static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ k1,
             static_cast<std::uint32_t>(p0)};
      k0 += 0x9E3779B9u;
      k1 += 0xBB67AE85u;
    }
    return ctr;
  }

  std::uint64_t key_;
  std::uint64_t stream_;
  std::uint64_t counter_ = 0;
  std::uint64_t buffer_ = 0;
  bool buffered_ = false;
};

}  // namespace geninv
