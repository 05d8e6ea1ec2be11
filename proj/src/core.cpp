#include "optbench/core.hpp"

#include <cmath>
#include <numeric>
#include <random>
#include <utility>

#include "optbench/errors.hpp"
#include "optbench/random.hpp"

namespace optbench {

const std::array<std::string, kFeatureCount>& feature_names() {
    static const auto names = [] {
        std::array<std::string, kFeatureCount> n{};
        n[feature::kStrike] = "strike";
        n[feature::kUnderlying] = "underlying_price";
        n[feature::kRate] = "rate";
        n[feature::kDividendYield] = "dividend_yield";
        n[feature::kMaturity] = "maturity_years";
        n[feature::kIsCall] = "is_call";
        for (std::size_t i = 0; i < kLagCount; ++i)
            n[feature::kFirstLag + i] = "lag_" + std::to_string(i + 1);
        return n;
    }();
    return names;
}

namespace {

void require_positive(double v, const char* field) {
    if (!std::isfinite(v)) throw ValidationError(field, "must be finite");
    if (!(v > 0.0)) throw ValidationError(field, "must be positive");
}

}  // namespace

void validate_quote(const OptionQuote& q) {
    require_positive(q.underlying_price, "underlying_price");
    require_positive(q.strike, "strike");
    require_positive(q.maturity_years, "maturity_years");
    if (!std::isfinite(q.rate)) throw ValidationError("rate", "must be finite");
    if (!std::isfinite(q.dividend_yield)) throw ValidationError("dividend_yield", "must be finite");
    if (q.implied_vol) {
        const double iv = *q.implied_vol;
        if (!(iv > 0.0 && iv <= kMaxImpliedVol))
            throw ValidationError("implied_vol", "must lie in (0, 3]");
    }
    if (q.lags.size() != kLagCount)
        throw ValidationError("lags", "expected 20, got " + std::to_string(q.lags.size()));
    for (double lag : q.lags) {
        if (!std::isfinite(lag) || !(lag > 0.0)) throw ValidationError("lags", "entries must be positive");
    }
    if (!std::isfinite(q.midpoint) || !(q.midpoint > 0.0 && q.midpoint < kMaxMidpoint))
        throw ValidationError("midpoint", "must lie in (0, 100000)");
}

FeatureRow encode_features(const OptionQuote& q) {
    validate_quote(q);
    FeatureRow row{};
    row[feature::kStrike] = q.strike;
    row[feature::kUnderlying] = q.underlying_price;
    row[feature::kRate] = q.rate;
    row[feature::kDividendYield] = q.dividend_yield;
    row[feature::kMaturity] = q.maturity_years;
    row[feature::kIsCall] = q.option_type == OptionType::Call ? 1.0 : 0.0;
    std::copy(q.lags.begin(), q.lags.end(), row.begin() + feature::kFirstLag);
    return row;
}

std::string to_string(DropReason reason) {
    switch (reason) {
        case DropReason::MidpointRange: return "midpoint_range";
        case DropReason::NonPositiveTerms: return "non_positive_terms";
        case DropReason::BadLags: return "bad_lags";
        case DropReason::ImpliedVolRange: return "implied_vol_range";
        case DropReason::NonFinite: return "non_finite";
    }
    return "unknown";
}

namespace {

std::optional<DropReason> drop_reason(const OptionQuote& q) {
    if (!std::isfinite(q.underlying_price) || !std::isfinite(q.strike) ||
        !std::isfinite(q.maturity_years) || !std::isfinite(q.rate) ||
        !std::isfinite(q.dividend_yield) || !std::isfinite(q.midpoint))
        return DropReason::NonFinite;
    if (!(q.midpoint > 0.0 && q.midpoint < kMaxMidpoint)) return DropReason::MidpointRange;
    if (!(q.underlying_price > 0.0 && q.strike > 0.0 && q.maturity_years > 0.0))
        return DropReason::NonPositiveTerms;
    if (q.lags.size() != kLagCount) return DropReason::BadLags;
    for (double lag : q.lags)
        if (!std::isfinite(lag) || !(lag > 0.0)) return DropReason::BadLags;
    if (q.implied_vol && !(*q.implied_vol > 0.0 && *q.implied_vol <= kMaxImpliedVol))
        return DropReason::ImpliedVolRange;
    return std::nullopt;
}

}  // namespace

FilterResult filter_quotes(std::span<const OptionQuote> quotes) {
    FilterResult result;
    result.kept.reserve(quotes.size());
    for (const auto& q : quotes) {
        if (auto reason = drop_reason(q)) {
            ++result.dropped_count;
            ++result.dropped_by_reason[*reason];
        } else {
            result.kept.push_back(q);
        }
    }
    return result;
}

Dataset::Dataset(Provenance provenance, std::vector<DatasetRow> rows)
    : provenance_(provenance), rows_(std::move(rows)) {
    for (const auto& row : rows_) {
        if (!(row.target > 0.0 && row.target < kMaxMidpoint))
            throw ValidationError("target", "must lie in (0, 100000)");
    }
}

Dataset Dataset::from_quotes(std::span<const OptionQuote> quotes, Provenance provenance) {
    std::vector<DatasetRow> rows;
    rows.reserve(quotes.size());
    for (std::size_t i = 0; i < quotes.size(); ++i) {
        const auto& q = quotes[i];
        rows.push_back(DatasetRow{i, encode_features(q), q.midpoint, q.implied_vol});
    }
    return Dataset(provenance, std::move(rows));
}

std::vector<double> Dataset::targets() const {
    std::vector<double> t;
    t.reserve(rows_.size());
    for (const auto& r : rows_) t.push_back(r.target);
    return t;
}

std::vector<std::uint64_t> Dataset::ids() const {
    std::vector<std::uint64_t> out;
    out.reserve(rows_.size());
    for (const auto& r : rows_) out.push_back(r.id);
    return out;
}

void SplitSpec::validate() const {
    if (!(train_fraction > 0.0)) throw ValidationError("train_fraction", "must be positive");
    if (!(val_fraction > 0.0)) throw ValidationError("val_fraction", "must be positive");
    if (!(test_fraction > 0.0)) throw ValidationError("test_fraction", "must be positive");
    if (std::abs(train_fraction + val_fraction + test_fraction - 1.0) > 1e-12)
        throw ValidationError("fractions", "fractions must sum to 1");
}

SplitSizes split_sizes(std::size_t n, const SplitSpec& spec) {
    spec.validate();
    const auto nd = static_cast<double>(n);
    SplitSizes s;
    s.val = static_cast<std::size_t>(std::llround(nd * spec.val_fraction));
    s.test = static_cast<std::size_t>(std::llround(nd * spec.test_fraction));
    // Tiny datasets: rounding can overshoot; the shortfall comes out of test then val.
    while (s.val + s.test > n) {
        if (s.test > 0) --s.test;
        else --s.val;
    }
    s.train = n - s.val - s.test;
    return s;
}

std::vector<std::size_t> split_permutation(std::size_t n, std::uint64_t seed) {
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    std::mt19937_64 rng(derive_seed(seed, 0x5b17));
    for (std::size_t i = n; i > 1; --i) {
        const auto j = static_cast<std::size_t>(uniform_index(rng, i));
        std::swap(perm[i - 1], perm[j]);
    }
    return perm;
}

DatasetSplit split_dataset(const Dataset& ds, const SplitSpec& spec) {
    spec.validate();
    if (ds.empty()) throw ValidationError("dataset", "cannot split an empty dataset");
    const auto sizes = split_sizes(ds.size(), spec);
    const auto perm = split_permutation(ds.size(), spec.seed);

    auto take = [&](std::size_t begin, std::size_t count) {
        std::vector<DatasetRow> rows;
        rows.reserve(count);
        for (std::size_t i = begin; i < begin + count; ++i) rows.push_back(ds[perm[i]]);
        return Dataset(ds.provenance(), std::move(rows));
    };
    return DatasetSplit{take(0, sizes.train), take(sizes.train, sizes.val),
                        take(sizes.train + sizes.val, sizes.test)};
}

}  // namespace optbench
