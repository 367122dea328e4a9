#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace gmmot {

/// splitmix64 step; used to derive independent sub-seeds from (seed, tags).
std::uint64_t splitmix64(std::uint64_t& state);

/// Deterministically combines a base seed with up to three tag values.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0,
                       std::uint64_t c = 0);

/// Seeded random stream with the handful of draws the library needs. The
/// sequence is fully determined by the seed (mt19937_64 is specified by the
/// standard, and the transforms below avoid implementation-defined
/// distributions), so runs are reproducible across platforms.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed) : eng_(seed) {}

  /// Uniform in [0, 1).
  double uniform();

  /// Uniform in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal via Box-Muller (pairs cached).
  double normal();

  /// Index drawn from the given nonnegative weights (need not be normalized).
  int categorical(std::span<const double> weights);

  /// Uniform direction on the unit sphere in the given dimension.
  std::vector<double> unit_vector(int dim);

 private:
  std::mt19937_64 eng_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace gmmot
