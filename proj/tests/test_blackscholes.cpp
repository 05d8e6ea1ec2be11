#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "optbench/blackscholes.hpp"
#include "optbench/errors.hpp"
#include "optbench/random.hpp"
#include "oracles.hpp"

using namespace optbench;
using namespace optbench::bs;

namespace {

BsInputs atm(OptionType type = OptionType::Call) {
    return BsInputs{100.0, 100.0, 1.0, 0.0, 0.0, 0.2, type};
}

BsInputs random_inputs(std::mt19937_64& rng) {
    BsInputs in;
    in.spot = std::exp(uniform(rng, std::log(1.0), std::log(5000.0)));
    in.strike = in.spot * uniform(rng, 0.5, 1.6);
    in.maturity = uniform(rng, 0.01, 3.0);
    in.rate = uniform(rng, -0.02, 0.1);
    in.dividend_yield = uniform(rng, 0.0, 0.08);
    in.volatility = uniform(rng, 0.02, 1.5);
    in.type = uniform01(rng) < 0.5 ? OptionType::Call : OptionType::Put;
    return in;
}

}  // namespace

TEST(NormCdf, MatchesHighPrecisionValues) {
    for (const auto& p : oracle::kNormCdf) EXPECT_NEAR(norm_cdf(p.x), p.value, 1e-15) << "x = " << p.x;
    EXPECT_EQ(norm_cdf(0.0), 0.5);
}

TEST(NormCdf, RelativeAccuracyInTheLowerTail) {
    EXPECT_NEAR(norm_cdf(-7.0) / 1.279812543885835004383624e-12, 1.0, 1e-13);
}

TEST(NormCdf, SaturatesAndRejectsNonFinite) {
    EXPECT_NEAR(norm_cdf(40.0), 1.0, 1e-15);
    EXPECT_EQ(norm_cdf(-40.0), 0.0);
    EXPECT_THROW(norm_cdf(std::numeric_limits<double>::infinity()), DomainError);
    EXPECT_THROW(norm_cdf(std::nan("")), DomainError);
}

TEST(NormCdf, SymmetryAndMonotonicity) {
    double prev = 0.0;
    for (double x = -10.0; x <= 10.0; x += 0.01) {
        const double v = norm_cdf(x);
        EXPECT_GE(v, prev);
        prev = v;
        EXPECT_NEAR(norm_cdf(-x), 1.0 - v, 1e-15);
    }
}

TEST(Intermediates, AtTheMoney) {
    const auto d = bs_intermediates(atm());
    EXPECT_NEAR(d.d1, 0.1, 1e-15);
    EXPECT_NEAR(d.d2, -0.1, 1e-15);
}

TEST(Intermediates, DirectSubstitution) {
    BsInputs in = atm();
    in.strike = 50.0;
    const auto d = bs_intermediates(in);
    EXPECT_NEAR(d.d1, (std::log(2.0) + 0.02) / 0.2, 1e-14);
    EXPECT_NEAR(d.d1, 3.5657359027997265471, 1e-14);
    EXPECT_EQ(d.d2, d.d1 - 0.2);
}

TEST(Intermediates, DegenerateVolatility) {
    BsInputs in = atm();
    in.volatility = 1e-14;
    EXPECT_THROW(bs_intermediates(in), DegenerateVolatilityError);
    EXPECT_THROW(bs_price(in), DegenerateVolatilityError);
}

TEST(Inputs, Validation) {
    BsInputs in = atm();
    in.rate = 1.0;
    EXPECT_THROW(bs_price(in), ValidationError);
    in = atm();
    in.spot = 0.0;
    EXPECT_THROW(bs_price(in), ValidationError);
    in = atm();
    in.volatility = -0.1;
    EXPECT_THROW(bs_price(in), ValidationError);
    in = atm();
    in.rate = -0.5;
    in.dividend_yield = -0.5;
    EXPECT_NO_THROW(bs_price(in));
}

TEST(Price, AtTheMoneyBenchmark) {
    EXPECT_NEAR(bs_price(atm()), 7.9656, 1e-4);
    EXPECT_NEAR(bs_price(atm()), oracle::kAtmCall, 1e-12);
    EXPECT_NEAR(bs_price(atm(OptionType::Put)), bs_price(atm()), 1e-12);
}

TEST(Price, WithRatesAndDividends) {
    BsInputs in{100.0, 110.0, 0.5, 0.02, 0.01, 0.37, OptionType::Call};
    EXPECT_NEAR(bs_price(in), oracle::kCallSigma37, 1e-11);
    in.type = OptionType::Put;
    EXPECT_NEAR(bs_price(in), oracle::kPutSigma37, 1e-11);
}

TEST(Price, DeepInTheMoneyLimit) {
    const BsInputs in{100.0, 50.0, 0.01, 0.0, 0.0, 0.05, OptionType::Call};
    EXPECT_NEAR(bs_price(in), 50.0, 1e-6);
}

TEST(Price, PutCallParityAndBounds) {
    std::mt19937_64 rng(2024);
    for (int i = 0; i < 20000; ++i) {
        auto in = random_inputs(rng);
        in.type = OptionType::Call;
        const double c = bs_price(in);
        in.type = OptionType::Put;
        const double p = bs_price(in);
        const double fwd = in.spot * std::exp(-in.dividend_yield * in.maturity) -
                           in.strike * std::exp(-in.rate * in.maturity);
        ASSERT_LE(std::abs(c - p - fwd), 1e-10 * std::max({1.0, in.spot, in.strike}));
        ASSERT_GE(c, 0.0);
        ASSERT_GE(p, 0.0);
        ASSERT_LE(c, in.spot * std::exp(-in.dividend_yield * in.maturity));
        ASSERT_LE(p, in.strike * std::exp(-in.rate * in.maturity));
    }
}

TEST(Price, MonotoneLadders) {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 200; ++trial) {
        auto in = random_inputs(rng);
        for (auto type : {OptionType::Call, OptionType::Put}) {
            in.type = type;
            double prev = -1.0;
            for (double sigma = 0.05; sigma <= 2.0; sigma += 0.05) {
                in.volatility = sigma;
                const double v = bs_price(in);
                EXPECT_GE(v, prev - 1e-12);
                prev = v;
            }
        }
        in.volatility = 0.3;
        const double s0 = in.spot;
        double prev_call = -1.0, prev_put = std::numeric_limits<double>::infinity();
        for (double m = 0.5; m <= 1.5; m += 0.05) {
            in.spot = s0 * m;
            in.type = OptionType::Call;
            const double c = bs_price(in);
            in.type = OptionType::Put;
            const double p = bs_price(in);
            EXPECT_GE(c, prev_call - 1e-12);
            EXPECT_LE(p, prev_put + 1e-12);
            prev_call = c;
            prev_put = p;
        }
        in.spot = s0;
    }
}

TEST(Price, VegaMatchesFiniteDifference) {
    std::mt19937_64 rng(13);
    for (int i = 0; i < 200; ++i) {
        auto in = random_inputs(rng);
        const double h = 1e-5;
        auto up = in, dn = in;
        up.volatility += h;
        dn.volatility -= h;
        const double fd = (bs_price(up) - bs_price(dn)) / (2 * h);
        EXPECT_NEAR(bs_vega(in), fd, 1e-5 * std::max(1.0, in.spot));
    }
}

TEST(Price, AgreesWithMonteCarlo) {
    const BsInputs cases[] = {
        {100.0, 100.0, 1.0, 0.0, 0.0, 0.2, OptionType::Call},
        {100.0, 110.0, 0.5, 0.02, 0.01, 0.37, OptionType::Put},
        {2500.0, 2300.0, 0.25, 0.04, 0.02, 0.6, OptionType::Call},
    };
    for (const auto& in : cases) {
        const auto mc = oracle::monte_carlo_price(in.spot, in.strike, in.maturity, in.rate, in.dividend_yield,
                                                  in.volatility, in.type == OptionType::Call, 400000, 99);
        EXPECT_LE(std::abs(bs_price(in) - mc.price), 4.0 * mc.std_error);
    }
}

TEST(ImpliedVol, RoundTrip) {
    const BsTerms terms{100.0, 110.0, 0.5, 0.02, 0.01, OptionType::Call};
    const double price = bs_price(BsInputs::from(terms, 0.37));
    EXPECT_NEAR(implied_vol(price, terms), 0.37, 1e-6);
}

TEST(ImpliedVol, OutsideBoundsHasNoSolution) {
    const BsTerms terms{100.0, 110.0, 0.5, 0.02, 0.01, OptionType::Call};
    EXPECT_THROW(implied_vol(0.0, terms), NoSolutionError);
    EXPECT_THROW(implied_vol(100.0 * std::exp(-0.01 * 0.5), terms), NoSolutionError);
    EXPECT_THROW(implied_vol(-1.0, terms), NoSolutionError);
    EXPECT_THROW(implied_vol(std::nan(""), terms), NoSolutionError);
}

TEST(ImpliedVol, RandomizedRoundTripAndResidual) {
    std::mt19937_64 rng(31);
    int checked = 0;
    for (int i = 0; i < 3000; ++i) {
        auto in = random_inputs(rng);
        in.strike = in.spot * uniform(rng, 0.8, 1.25);
        in.maturity = uniform(rng, 0.05, 2.0);
        in.volatility = uniform(rng, 0.05, 1.2);
        const double price = bs_price(in);
        // Far out of the money the price carries too little information about sigma.
        if (bs_vega(in) < 1e-3 * std::max(1.0, in.spot)) continue;
        const double sigma = implied_vol(price, in.terms());
        EXPECT_NEAR(sigma, in.volatility, 1e-6);
        EXPECT_LE(std::abs(bs_price(BsInputs::from(in.terms(), sigma)) - price), 1e-8 * std::max(1.0, price));
        EXPECT_GE(sigma, kMinImpliedVol);
        EXPECT_LE(sigma, bs::kMaxImpliedVol);
        ++checked;
    }
    EXPECT_GT(checked, 2000);
}

TEST(ImpliedVol, BisectionFallbackNearTheEdges) {
    const BsTerms terms{100.0, 100.0, 2.0, 0.0, 0.0, OptionType::Put};
    for (double sigma : {0.002, 0.01, 2.5, 2.95}) {
        const double price = bs_price(BsInputs::from(terms, sigma));
        const double got = implied_vol(price, terms);
        EXPECT_LE(std::abs(bs_price(BsInputs::from(terms, got)) - price), 1e-8 * std::max(1.0, price));
        EXPECT_NEAR(got, sigma, 1e-6);
    }
}
