#include "h2hinf/noise.hpp"

#include <array>

namespace h2hinf {

namespace {

std::mt19937_64 make_engine(std::uint64_t seed) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed),
                    static_cast<std::uint32_t>(seed >> 32)};
  return std::mt19937_64(seq);
}

}  // namespace

NoiseSource::NoiseSource(std::uint64_t seed, NoiseDistribution dist)
    : seed_(seed), dist_(dist), engine_(make_engine(seed)) {}

double NoiseSource::next() {
  ++position_;
  if (dist_ == NoiseDistribution::kRademacher) {
    return (engine_() >> 63) ? 1.0 : -1.0;
  }
  return normal_(engine_);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t step, std::uint64_t branch) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(step), static_cast<std::uint32_t>(step >> 32),
                    static_cast<std::uint32_t>(branch),
                    static_cast<std::uint32_t>(branch >> 32)};
  std::array<std::uint32_t, 2> out{};
  seq.generate(out.begin(), out.end());
  return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

}  // namespace h2hinf
