#pragma once

#include <cstdint>
#include <random>

namespace fdntune {

// Deterministic random source. The mt19937_64 engine is fully specified by the
// standard; the uniform/normal transforms are implemented here so that streams
// are identical across platforms and library versions.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1).
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [lo, hi], inclusive, unbiased via rejection.
  int uniform_int(int lo, int hi);

  // Standard normal via Box-Muller; second value of each pair is cached.
  double normal();

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  // Stable stream derivation: mixes a root seed with a stream index.
  static std::uint64_t derive(std::uint64_t root, std::uint64_t stream);

 private:
  std::mt19937_64 engine_;
  double cached_ = 0.0;
  bool has_cached_ = false;
};

}  // namespace fdntune
