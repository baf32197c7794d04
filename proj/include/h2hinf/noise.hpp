#pragma once

#include <cstdint>
#include <random>

#include "h2hinf/types.hpp"

namespace h2hinf {

/// Seeded scalar noise stream with zero mean and unit variance.
class NoiseSource {
 public:
  explicit NoiseSource(std::uint64_t seed,
                       NoiseDistribution dist = NoiseDistribution::kStandardGaussian);

  double next();

  std::uint64_t seed() const { return seed_; }
  NoiseDistribution distribution() const { return dist_; }
  /// Number of draws taken so far.
  std::uint64_t position() const { return position_; }

 private:
  std::uint64_t seed_;
  NoiseDistribution dist_;
  std::uint64_t position_ = 0;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

/// Sub-seed for Monte-Carlo branch `branch` at time index `step`. Depends only
/// on its arguments, so branches may be evaluated in any order.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t step, std::uint64_t branch);

}  // namespace h2hinf
