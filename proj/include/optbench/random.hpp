#pragma once

#include <cstdint>
#include <random>

namespace optbench {

// Portable random helpers. The standard distributions are implementation
// defined, so everything that must be reproducible goes through these.

std::uint64_t splitmix64(std::uint64_t x) noexcept;

// Seed derived from a base seed and a stream tag, e.g. (seed, underlying index).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream,
                          std::uint64_t substream = 0) noexcept;

// Uniform double in [0, 1) with 53 random bits.
double uniform01(std::mt19937_64& rng) noexcept;

// Uniform double in [lo, hi).
double uniform(std::mt19937_64& rng, double lo, double hi) noexcept;

// Unbiased integer in [0, bound). bound must be > 0.
std::uint64_t uniform_index(std::mt19937_64& rng, std::uint64_t bound) noexcept;

// Standard normal via the Marsaglia polar method (one spare value cached).
class NormalSampler {
public:
    double operator()(std::mt19937_64& rng) noexcept;

private:
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace optbench
