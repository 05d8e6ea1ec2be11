#include "optbench/blackscholes.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "optbench/errors.hpp"

namespace optbench::bs {

BsInputs BsInputs::from(const BsTerms& t, double volatility) {
    return BsInputs{t.spot, t.strike, t.maturity, t.rate, t.dividend_yield, volatility, t.type};
}

BsTerms BsInputs::terms() const {
    return BsTerms{spot, strike, maturity, rate, dividend_yield, type};
}

namespace {

void validate_terms(const BsTerms& t) {
    if (!(t.spot > 0.0) || !std::isfinite(t.spot)) throw ValidationError("spot", "must be positive");
    if (!(t.strike > 0.0) || !std::isfinite(t.strike)) throw ValidationError("strike", "must be positive");
    if (!(t.maturity > 0.0) || !std::isfinite(t.maturity))
        throw ValidationError("maturity", "must be positive");
    if (!(std::abs(t.rate) < 1.0)) throw ValidationError("rate", "must satisfy |r| < 1");
    if (!(std::abs(t.dividend_yield) < 1.0))
        throw ValidationError("dividend_yield", "must satisfy |q| < 1");
}

}  // namespace

void BsInputs::validate() const {
    validate_terms(terms());
    if (!(volatility > 0.0) || !std::isfinite(volatility))
        throw ValidationError("volatility", "must be positive");
}

double norm_cdf(double x) {
    if (!std::isfinite(x)) throw DomainError("norm_cdf: argument must be finite");
    return 0.5 * std::erfc(-x * std::numbers::sqrt2 * 0.5);
}

double norm_pdf(double x) noexcept {
    return std::exp(-0.5 * x * x) * (0.5 * std::numbers::inv_sqrtpi * std::numbers::sqrt2);
}

BsIntermediates bs_intermediates(const BsInputs& in) {
    in.validate();
    const double vol_sqrt_t = in.volatility * std::sqrt(in.maturity);
    if (vol_sqrt_t < 1e-12)
        throw DegenerateVolatilityError("sigma*sqrt(T) = " + std::to_string(vol_sqrt_t) +
                                        " is below 1e-12");
    const double d1 = (std::log(in.spot / in.strike) +
                       (in.rate - in.dividend_yield + 0.5 * in.volatility * in.volatility) * in.maturity) /
                      vol_sqrt_t;
    return BsIntermediates{d1, d1 - vol_sqrt_t};
}

double bs_price(const BsInputs& in) {
    const auto [d1, d2] = bs_intermediates(in);
    const double fwd_spot = in.spot * std::exp(-in.dividend_yield * in.maturity);
    const double pv_strike = in.strike * std::exp(-in.rate * in.maturity);
    double price = 0.0;
    double cap = 0.0;
    if (in.type == OptionType::Call) {
        price = fwd_spot * norm_cdf(d1) - pv_strike * norm_cdf(d2);
        cap = fwd_spot;
    } else {
        price = pv_strike * norm_cdf(-d2) - fwd_spot * norm_cdf(-d1);
        cap = pv_strike;
    }
    // Rounding can leave the result an ulp outside [0, cap].
    return std::clamp(price, 0.0, cap);
}

double bs_vega(const BsInputs& in) {
    const auto [d1, d2] = bs_intermediates(in);
    (void)d2;
    return in.spot * std::exp(-in.dividend_yield * in.maturity) * norm_pdf(d1) * std::sqrt(in.maturity);
}

double implied_vol(double price, const BsTerms& terms) {
    validate_terms(terms);
    if (!std::isfinite(price)) throw NoSolutionError("implied_vol: price must be finite");

    const double fwd_spot = terms.spot * std::exp(-terms.dividend_yield * terms.maturity);
    const double pv_strike = terms.strike * std::exp(-terms.rate * terms.maturity);
    const bool call = terms.type == OptionType::Call;
    const double lower = call ? std::max(0.0, fwd_spot - pv_strike) : std::max(0.0, pv_strike - fwd_spot);
    const double upper = call ? fwd_spot : pv_strike;
    if (!(price > lower && price < upper))
        throw NoSolutionError("implied_vol: price " + std::to_string(price) +
                              " outside no-arbitrage interval (" + std::to_string(lower) + ", " +
                              std::to_string(upper) + ")");

    auto value_at = [&](double sigma) { return bs_price(BsInputs::from(terms, sigma)); };
    const double tolerance = 1e-8 * std::max(1.0, price);

    double lo = kMinImpliedVol;
    double hi = kMaxImpliedVol;
    const double f_lo = value_at(lo) - price;
    const double f_hi = value_at(hi) - price;
    if (f_lo > tolerance || f_hi < -tolerance)
        throw NoSolutionError("implied_vol: price not attainable for sigma in [1e-6, 3]");

    // Price is increasing in sigma, so [lo, hi] stays a valid bracket.
    double sigma = 0.5 * (lo + hi);
    {
        // Brenner-Subrahmanyam style start for near-the-money quotes.
        const double guess = std::sqrt(2.0 * std::numbers::pi / terms.maturity) * price / terms.spot;
        if (guess > lo && guess < hi) sigma = guess;
    }
    for (int iter = 0; iter < 200; ++iter) {
        const auto in = BsInputs::from(terms, sigma);
        const double diff = bs_price(in) - price;
        const double vega = bs_vega(in);
        const double step = vega > 0.0 ? diff / vega : std::numeric_limits<double>::infinity();
        // The price residual alone can be met while sigma is still loose
        // where vega is small, so also wait for the Newton step to vanish.
        if (std::abs(diff) <= tolerance && std::abs(step) <= 1e-10) return sigma;
        if (diff > 0.0) hi = sigma;
        else if (diff < 0.0) lo = sigma;

        double next = sigma - step;
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        sigma = next;
        if (hi - lo < 1e-15) break;
    }
    const double diff = value_at(sigma) - price;
    if (std::abs(diff) <= tolerance) return sigma;
    throw NoSolutionError("implied_vol: failed to converge");
}

}  // namespace optbench::bs
