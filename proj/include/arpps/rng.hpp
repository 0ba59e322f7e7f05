#pragma once

#include <cstdint>
#include <random>

namespace arpps {

// Seeded generator with platform-independent distributions. The standard
// <random> distributions are implementation-defined, which would break
// byte-identical outputs across toolchains, so only the engine is reused.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  // Uniform in [0, 1).
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  // Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);
  double normal();
  double normal(double mean, double sigma) { return mean + sigma * normal(); }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace arpps
