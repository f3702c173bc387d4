#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace calfoa {

/// Deterministic random source. Every consumer derives its own generator from
/// the experiment seed and a fixed label, so adding a consumer never shifts the
/// draws of another one. Conversions to real numbers are done by hand because
/// the standard distributions are not bit-reproducible across libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  static Rng derive(std::uint64_t seed, std::string_view label, std::uint64_t index = 0);

  std::uint64_t next_u64() { return engine_(); }
  /// Uniform in [0, 1).
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Uniform integer in [0, n). n must be > 0.
  std::uint64_t below(std::uint64_t n);

 private:
  std::mt19937_64 engine_;
};

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t h = 0xcbf29ce484222325ULL);
std::uint64_t splitmix64(std::uint64_t x);

}  // namespace calfoa
