#pragma once

// Deterministic random numbers. All distribution transforms are implemented
// here (not via <random> distributions, whose output is implementation
// defined) so that a given seed yields the same stream on every platform.

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace crnet {

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  // Uniform in [0, 1) with 53-bit resolution.
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Box-Muller; the spare value is cached.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = 0.0;
    do {
      u1 = uniform();
    } while (u1 <= 0.0);
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * M_PI * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

  // Uniform integer in [0, n). Modulo bias is irrelevant at our n << 2^64.
  std::uint64_t below(std::uint64_t n) { return gen_() % n; }

  int sign() { return (gen_() & 1u) ? 1 : -1; }

  // Derive an independent child stream; used to give parallel experiment
  // cells stable per-cell seeds.
  static std::uint64_t derive(std::uint64_t seed, std::uint64_t stream) {
    // SplitMix64 over the combined word.
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

 private:
  std::mt19937_64 gen_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

// Uniform direction on the unit sphere in R^n.
inline std::vector<double> random_unit_vector(Rng& rng, int n) {
  std::vector<double> v(n);
  double s = 0.0;
  do {
    s = 0.0;
    for (int i = 0; i < n; ++i) {
      v[i] = rng.normal();
      s += v[i] * v[i];
    }
  } while (s == 0.0);
  const double inv = 1.0 / std::sqrt(s);
  for (double& x : v) x *= inv;
  return v;
}

}  // namespace crnet
