#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace ppmm {

/// Deterministic random source used by every seeded code path.
///
/// The engine is std::mt19937_64, whose output sequence is fixed by the
/// language standard, so a seed reproduces the identical stream on every
/// standard library. Uniform doubles take the top 53 bits of one engine
/// word; standard normals come from the Marsaglia polar method on top of
/// those uniforms (one rejection loop yields a pair, the spare is cached).
class RngState {
 public:
  explicit RngState(std::uint64_t seed) : seed_(seed), gen_(seed) {}

  std::uint64_t seed() const { return seed_; }

  std::uint64_t next_u64() { return gen_(); }

  /// Uniform on [0, 1) with 53-bit resolution.
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  /// Standard normal draw.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u = 0.0;
    double v = 0.0;
    double s = 0.0;
    do {
      u = 2.0 * uniform() - 1.0;
      v = 2.0 * uniform() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double m = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * m;
    has_spare_ = true;
    return u * m;
  }

 private:
  std::uint64_t seed_;
  std::mt19937_64 gen_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/// SplitMix64 finalizer. Used to derive well-separated child seeds from a
/// cell seed so data sampling and direction sampling never share a stream.
inline std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

}  // namespace ppmm
