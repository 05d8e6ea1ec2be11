#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "optbench/core.hpp"

namespace optbench::sim {

inline constexpr double kTradingDaysPerYear = 252.0;
inline constexpr double kMinNoisyMidpoint = 0.005;

struct VolRegime {
    double sigma = 0.0;
    double weight = 0.0;
    bool operator==(const VolRegime&) const = default;
};

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
    bool operator==(const Interval&) const = default;
};

struct SimConfig {
    std::size_t n_underlyings = 40;
    std::size_t days_per_underlying = 80;
    Interval s0_range{50.0, 5000.0};  // sampled log-uniformly
    std::vector<VolRegime> vol_regimes{{0.15, 0.4}, {0.3, 0.35}, {0.6, 0.25}};
    double drift = 0.05;
    Interval rate_range{0.0, 0.05};
    Interval yield_range{0.0, 0.04};
    std::vector<double> maturities{1.0 / 12.0, 0.25, 0.5, 1.0};
    std::vector<double> moneyness_grid{0.8, 0.9, 0.95, 1.0, 1.05, 1.1, 1.2};
    double half_spread = 0.01;
    // Contracts whose model value is below this are not quoted.
    double min_price = 0.01;
    std::uint64_t seed = 42;

    void validate() const;
    bool operator==(const SimConfig&) const = default;
};

// A simulated underlying: daily closes plus the per-underlying constants.
struct UnderlyingPath {
    std::size_t index = 0;
    double sigma = 0.0;
    double rate = 0.0;
    double dividend_yield = 0.0;
    std::vector<double> closes;
};

// Discrete GBM with dt = 1/252; deterministic in (cfg.seed, underlying_index).
UnderlyingPath simulate_underlying(const SimConfig& cfg, std::size_t underlying_index);

// Quotes for every day with twenty prior closes, every maturity, every
// moneyness and both option types, in that nesting order.
std::vector<OptionQuote> generate_chain(const UnderlyingPath& path, const SimConfig& cfg);

// All underlyings, concatenated in index order.
std::vector<OptionQuote> generate_dataset(const SimConfig& cfg);

// sqrt(252 * sample variance) of the 19 log returns in 20 closes.
double realized_vol(std::span<const double> lags);

}  // namespace optbench::sim
