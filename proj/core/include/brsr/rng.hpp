#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace brsr {

// Deterministic random source. The mt19937_64 engine is fully specified by
// the standard; the distributions are implemented here because the standard
// library distribution algorithms are implementation-defined, which would
// break cross-platform reproducibility of generated datasets.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform on [0, 1) with 53-bit resolution.
  double uniform();
  double uniform(double lo, double hi);

  // Inclusive integer range.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);

  // Standard normal via Box-Muller (second variate cached).
  double normal();
  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  // Symmetric Dirichlet(1): uniform over the (n-1)-simplex.
  std::vector<double> dirichlet_uniform(std::size_t n);

  // Derives an independent stream seed from a master seed and a stream id
  // (splitmix64 finalizer mix).
  static std::uint64_t derive(std::uint64_t seed, std::uint64_t stream);

 private:
  std::mt19937_64 engine_;
  bool have_cached_normal_ = false;
  double cached_normal_ = 0.0;
};

}  // namespace brsr
