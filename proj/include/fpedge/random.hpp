#pragma once

#include <array>
#include <complex>
#include <cstdint>
#include <limits>
#include <random>

namespace fpedge {

/// Philox4x32-10 counter block cipher.
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr, std::array<std::uint32_t, 2> key);

/// Counter-based generator keyed by a master seed; `stream` selects an
/// independent substream (one per Monte Carlo sample). Satisfies
/// UniformRandomBitGenerator.
class Rng {
 public:
  using result_type = std::uint32_t;

  Rng(std::uint64_t seed, std::uint64_t stream);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }
  result_type operator()();

  /// Uniform on (0, 1).
  double uniform();
  double normal();
  /// Standard complex Gaussian, E|z|^2 = 1.
  std::complex<double> complex_normal();

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream() const { return stream_; }

 private:
  void refill();

  std::uint64_t seed_;
  std::uint64_t stream_;
  std::array<std::uint32_t, 2> key_;
  std::array<std::uint32_t, 4> counter_;
  std::array<std::uint32_t, 4> block_{};
  int pos_ = 4;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace fpedge
