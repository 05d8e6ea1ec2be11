#pragma once

#include "optbench/core.hpp"

namespace optbench::bs {

// Contract and market terms without a volatility.
struct BsTerms {
    double spot = 0.0;
    double strike = 0.0;
    double maturity = 0.0;        // years
    double rate = 0.0;            // continuously compounded
    double dividend_yield = 0.0;  // continuously compounded
    OptionType type = OptionType::Call;
};

struct BsInputs {
    double spot = 0.0;
    double strike = 0.0;
    double maturity = 0.0;
    double rate = 0.0;
    double dividend_yield = 0.0;
    double volatility = 0.0;
    OptionType type = OptionType::Call;

    static BsInputs from(const BsTerms& terms, double volatility);
    BsTerms terms() const;

    // S, K, T, sigma > 0 and |r|, |q| < 1.
    void validate() const;
};

struct BsIntermediates {
    double d1 = 0.0;
    double d2 = 0.0;
};

// Standard normal CDF through erfc; absolute error well below 1e-12 and
// exact symmetry N(-x) = 1 - N(x) up to rounding. Throws DomainError on NaN/inf.
double norm_cdf(double x);

double norm_pdf(double x) noexcept;

// Throws DegenerateVolatilityError when sigma * sqrt(T) < 1e-12.
BsIntermediates bs_intermediates(const BsInputs& in);

double bs_price(const BsInputs& in);

// d(price)/d(sigma).
double bs_vega(const BsInputs& in);

inline constexpr double kMinImpliedVol = 1e-6;
inline constexpr double kMaxImpliedVol = 3.0;

// Inverts bs_price for sigma in [1e-6, 3]: safeguarded Newton with a bisection
// bracket. Throws NoSolutionError when the price lies outside the
// no-arbitrage interval or outside the reachable price range.
double implied_vol(double price, const BsTerms& terms);

}  // namespace optbench::bs
