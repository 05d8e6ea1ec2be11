#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace optbench {

inline constexpr std::size_t kLagCount = 20;
inline constexpr std::size_t kFeatureCount = 26;
inline constexpr double kMaxMidpoint = 100000.0;
inline constexpr double kMaxImpliedVol = 3.0;

enum class OptionType : std::uint8_t { Put = 0, Call = 1 };

// Column positions inside a FeatureRow. Lags follow is_call, most recent first.
namespace feature {
inline constexpr std::size_t kStrike = 0;
inline constexpr std::size_t kUnderlying = 1;
inline constexpr std::size_t kRate = 2;
inline constexpr std::size_t kDividendYield = 3;
inline constexpr std::size_t kMaturity = 4;
inline constexpr std::size_t kIsCall = 5;
inline constexpr std::size_t kFirstLag = 6;
}  // namespace feature

const std::array<std::string, kFeatureCount>& feature_names();

// One market observation. lags[0] is the previous day's close.
struct OptionQuote {
    double underlying_price = 0.0;
    double strike = 0.0;
    double maturity_years = 0.0;
    double rate = 0.0;
    double dividend_yield = 0.0;
    std::optional<double> implied_vol;
    OptionType option_type = OptionType::Call;
    std::vector<double> lags;
    double midpoint = 0.0;

    bool operator==(const OptionQuote&) const = default;
};

// Throws ValidationError naming the first offending field.
void validate_quote(const OptionQuote& quote);

using FeatureRow = std::array<double, kFeatureCount>;

// [strike, underlying, rate, yield, maturity, is_call, lag_1..lag_20].
// Implied volatility is never part of the model input.
FeatureRow encode_features(const OptionQuote& quote);

enum class DropReason { MidpointRange, NonPositiveTerms, BadLags, ImpliedVolRange, NonFinite };

std::string to_string(DropReason reason);

struct FilterResult {
    std::vector<OptionQuote> kept;
    std::size_t dropped_count = 0;
    std::map<DropReason, std::size_t> dropped_by_reason;
};

// Keeps quotes with 0 < midpoint < 100000, positive S, K and T, and exactly
// twenty positive lags.
FilterResult filter_quotes(std::span<const OptionQuote> quotes);

struct DatasetRow {
    std::uint64_t id = 0;
    FeatureRow features{};
    double target = 0.0;
    // Carried out-of-band for the Black-Scholes baseline only.
    std::optional<double> implied_vol;
};

enum class Provenance { Synthetic, Ingested };

// Immutable after construction.
class Dataset {
public:
    Dataset() = default;
    Dataset(Provenance provenance, std::vector<DatasetRow> rows);

    // Encodes every quote; row ids are the quote positions.
    static Dataset from_quotes(std::span<const OptionQuote> quotes, Provenance provenance);

    const std::vector<DatasetRow>& rows() const noexcept { return rows_; }
    const DatasetRow& operator[](std::size_t i) const { return rows_[i]; }
    std::size_t size() const noexcept { return rows_.size(); }
    bool empty() const noexcept { return rows_.empty(); }
    Provenance provenance() const noexcept { return provenance_; }

    std::vector<double> targets() const;
    std::vector<std::uint64_t> ids() const;

private:
    Provenance provenance_ = Provenance::Synthetic;
    std::vector<DatasetRow> rows_;
};

struct SplitSpec {
    double train_fraction = 0.98;
    double val_fraction = 0.01;
    double test_fraction = 0.01;
    std::uint64_t seed = 0;

    void validate() const;
    bool operator==(const SplitSpec&) const = default;
};

struct DatasetSplit {
    Dataset train;
    Dataset val;
    Dataset test;
};

struct SplitSizes {
    std::size_t train = 0;
    std::size_t val = 0;
    std::size_t test = 0;
};

SplitSizes split_sizes(std::size_t n, const SplitSpec& spec);

// Seeded permutation of row positions; split_dataset cuts it train|val|test.
std::vector<std::size_t> split_permutation(std::size_t n, std::uint64_t seed);

DatasetSplit split_dataset(const Dataset& ds, const SplitSpec& spec);

}  // namespace optbench
