#pragma once

#include <cstddef>
#include <cstdint>
#include <random>

namespace revtraj {

// splitmix64 finalizer; used to derive independent streams from a base seed.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) noexcept;

// Seeded generator with distributions implemented here rather than through
// <random>'s distributions, whose outputs differ between standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  // Uniform in [0, 1).
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  // Uniform in [0, n); n must be positive.
  std::size_t index(std::size_t n);

  bool bernoulli(double p) { return uniform() < p; }

  Rng split(std::uint64_t stream) { return Rng(mix_seed(next(), stream)); }

 private:
  std::mt19937_64 engine_;
};

}  // namespace revtraj
