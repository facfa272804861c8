#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace cryptofactor {

// Deterministic random source: mt19937_64 for the bit stream (fully specified
// by the standard) with hand-rolled uniform/normal transforms, so the same
// seed reproduces the same values on any platform and standard library.
// normal() always consumes exactly two uniforms (Box-Muller, no cached spare).
class Rng {
 public:
  explicit Rng(uint64_t seed) : gen_(seed) {}

  // Independent substream derived via splitmix64 mixing of (seed, stream).
  static Rng substream(uint64_t seed, uint64_t stream) {
    uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    z = z ^ (z >> 31);
    return Rng(z);
  }

  uint64_t next_u64() { return gen_(); }

  // Uniform in [0, 1) with 53-bit resolution; never returns exactly 0
  // shifted variant keeps log() finite in the normal transform.
  double uniform01() {
    return (static_cast<double>(gen_() >> 11) + 0.5) * 0x1.0p-53;
  }

  double normal(double mu = 0.0, double sigma = 1.0) {
    const double u1 = uniform01();
    const double u2 = uniform01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double z = r * std::cos(2.0 * 3.14159265358979323846 * u2);
    return mu + sigma * z;
  }

  // Uniform integer in [lo, hi] via rejection-free modulo (bias negligible
  // for the small ranges used here, and fully deterministic).
  int64_t uniform_int(int64_t lo, int64_t hi) {
    const uint64_t span = static_cast<uint64_t>(hi - lo) + 1;
    return lo + static_cast<int64_t>(gen_() % span);
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

 private:
  std::mt19937_64 gen_;
};

}  // namespace cryptofactor
