#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <utility>

namespace pptlab {

/// Seeded generator with platform-stable draws.
///
/// std::mt19937_64 output is fixed by the standard, but the std
/// distributions are not, so every distribution used by the library is
/// derived here from raw 64-bit words.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);
  /// Independent stream derived from (seed, stream); used to give each
  /// example or shard its own generator.
  Rng(std::uint64_t seed, std::uint64_t stream);

  std::uint64_t next_u64() { return engine_(); }
  /// Uniform in [0, n). n must be positive.
  std::size_t uniform_index(std::size_t n);
  /// Uniform in [lo, hi], inclusive.
  int uniform_int(int lo, int hi);
  /// Uniform in [0, 1).
  double uniform01();
  /// Standard normal via Box-Muller.
  double normal();

  template <typename It>
  void shuffle(It first, It last) {
    const auto n = static_cast<std::size_t>(last - first);
    for (std::size_t i = n; i > 1; --i) {
      const std::size_t j = uniform_index(i);
      using std::swap;
      swap(first[i - 1], first[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

std::uint64_t splitmix64(std::uint64_t x);

}  // namespace pptlab
