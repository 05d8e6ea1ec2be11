#include "optbench/simgen.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "optbench/blackscholes.hpp"
#include "optbench/errors.hpp"
#include "optbench/random.hpp"

namespace optbench::sim {

namespace {

constexpr std::uint64_t kPathStream = 1;
constexpr std::uint64_t kNoiseStream = 2;

void require_interval(const Interval& iv, const char* field) {
    if (!std::isfinite(iv.lo) || !std::isfinite(iv.hi) || iv.lo > iv.hi)
        throw ValidationError(field, "lower bound must not exceed upper bound");
}

}  // namespace

void SimConfig::validate() const {
    if (days_per_underlying < kLagCount + 1)
        throw ValidationError("days_per_underlying", "must be at least 21");
    require_interval(s0_range, "s0_range");
    if (!(s0_range.lo > 0.0)) throw ValidationError("s0_range", "must be positive");
    require_interval(rate_range, "rate_range");
    require_interval(yield_range, "yield_range");
    if (vol_regimes.empty()) throw ValidationError("vol_regimes", "must not be empty");
    double total = 0.0;
    for (const auto& r : vol_regimes) {
        if (!(r.sigma >= 0.0 && r.sigma <= kMaxImpliedVol))
            throw ValidationError("vol_regimes", "sigma must lie in [0, 3]");
        if (!(r.weight > 0.0)) throw ValidationError("vol_regimes", "weights must be positive");
        total += r.weight;
    }
    if (std::abs(total - 1.0) > 1e-9) throw ValidationError("vol_regimes", "weights must sum to 1");
    if (maturities.empty()) throw ValidationError("maturities", "must not be empty");
    for (double t : maturities)
        if (!(t > 0.0)) throw ValidationError("maturities", "must be positive");
    if (moneyness_grid.empty()) throw ValidationError("moneyness_grid", "must not be empty");
    for (double m : moneyness_grid)
        if (!(m > 0.0)) throw ValidationError("moneyness_grid", "must be positive");
    if (!(half_spread >= 0.0 && half_spread <= 0.1))
        throw ValidationError("half_spread", "must lie in [0, 0.1]");
    if (!(min_price >= 0.0)) throw ValidationError("min_price", "must be non-negative");
    if (!std::isfinite(drift)) throw ValidationError("drift", "must be finite");
}

UnderlyingPath simulate_underlying(const SimConfig& cfg, std::size_t underlying_index) {
    cfg.validate();
    std::mt19937_64 rng(derive_seed(cfg.seed, kPathStream, underlying_index));

    UnderlyingPath path;
    path.index = underlying_index;
    const double s0 = std::exp(uniform(rng, std::log(cfg.s0_range.lo), std::log(cfg.s0_range.hi)));

    const double pick = uniform01(rng);
    double cumulative = 0.0;
    path.sigma = cfg.vol_regimes.back().sigma;
    for (const auto& regime : cfg.vol_regimes) {
        cumulative += regime.weight;
        if (pick < cumulative) {
            path.sigma = regime.sigma;
            break;
        }
    }
    path.rate = uniform(rng, cfg.rate_range.lo, cfg.rate_range.hi);
    path.dividend_yield = uniform(rng, cfg.yield_range.lo, cfg.yield_range.hi);

    const double dt = 1.0 / kTradingDaysPerYear;
    const double step_drift = (cfg.drift - 0.5 * path.sigma * path.sigma) * dt;
    const double step_vol = path.sigma * std::sqrt(dt);
    NormalSampler normal;
    path.closes.resize(cfg.days_per_underlying);
    path.closes[0] = s0;
    double log_s = std::log(s0);
    for (std::size_t t = 1; t < cfg.days_per_underlying; ++t) {
        log_s += step_drift + step_vol * normal(rng);
        path.closes[t] = std::exp(log_s);
    }
    return path;
}

std::vector<OptionQuote> generate_chain(const UnderlyingPath& path, const SimConfig& cfg) {
    std::vector<OptionQuote> quotes;
    if (path.closes.size() < kLagCount + 1 || !(path.sigma > 0.0)) return quotes;

    std::mt19937_64 rng(derive_seed(cfg.seed, kNoiseStream, path.index));
    for (std::size_t day = kLagCount; day < path.closes.size(); ++day) {
        const double spot = path.closes[day];
        std::vector<double> lags(kLagCount);
        for (std::size_t k = 0; k < kLagCount; ++k) lags[k] = path.closes[day - 1 - k];

        for (double maturity : cfg.maturities) {
            for (double moneyness : cfg.moneyness_grid) {
                for (OptionType type : {OptionType::Call, OptionType::Put}) {
                    // Always consume the noise draw so the stream does not
                    // depend on which contracts are skipped.
                    const double u = cfg.half_spread * (2.0 * uniform01(rng) - 1.0);
                    const bs::BsInputs in{spot, moneyness * spot, maturity, path.rate,
                                          path.dividend_yield, path.sigma, type};
                    const double model = bs::bs_price(in);
                    if (model < cfg.min_price) continue;

                    OptionQuote q;
                    q.underlying_price = spot;
                    q.strike = in.strike;
                    q.maturity_years = maturity;
                    q.rate = path.rate;
                    q.dividend_yield = path.dividend_yield;
                    q.implied_vol = path.sigma;
                    q.option_type = type;
                    q.lags = lags;
                    q.midpoint = cfg.half_spread == 0.0
                                     ? model
                                     : std::max(kMinNoisyMidpoint, model * (1.0 + u));
                    quotes.push_back(std::move(q));
                }
            }
        }
    }
    auto filtered = filter_quotes(quotes);
    return std::move(filtered.kept);
}

std::vector<OptionQuote> generate_dataset(const SimConfig& cfg) {
    cfg.validate();
    std::vector<std::vector<OptionQuote>> per_underlying(cfg.n_underlyings);
    const auto n = static_cast<std::ptrdiff_t>(cfg.n_underlyings);
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        const auto idx = static_cast<std::size_t>(i);
        per_underlying[idx] = generate_chain(simulate_underlying(cfg, idx), cfg);
    }
    std::vector<OptionQuote> all;
    for (auto& chunk : per_underlying) {
        all.insert(all.end(), std::make_move_iterator(chunk.begin()), std::make_move_iterator(chunk.end()));
    }
    return all;
}

double realized_vol(std::span<const double> lags) {
    if (lags.size() != kLagCount)
        throw DomainError("realized_vol: expected 20 closes, got " + std::to_string(lags.size()));
    for (double v : lags)
        if (!(v > 0.0) || !std::isfinite(v)) throw DomainError("realized_vol: closes must be positive");

    constexpr std::size_t n = kLagCount - 1;
    std::array<double, n> returns{};
    double mean = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        returns[k] = std::log(lags[k] / lags[k + 1]);
        mean += returns[k];
    }
    mean /= static_cast<double>(n);
    double ss = 0.0;
    for (double r : returns) ss += (r - mean) * (r - mean);
    return std::sqrt(kTradingDaysPerYear * ss / static_cast<double>(n - 1));
}

}  // namespace optbench::sim
