#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "optbench/core.hpp"

namespace optbench::gbdt {

// Per-round shrinkage: eta_min + (eta_base - eta_min) * exp(-(x/8)^2 / max_iter_decay),
// x = iteration + 1.
struct EtaSchedule {
    double eta_base = 0.5;
    double eta_min = 0.2;
    double max_iter_decay = 100000.0;

    void validate() const;
    // The decaying part alone, eta - eta_min. Stays representable (and
    // strictly positive) long after eta itself rounds to eta_min.
    double excess(std::size_t iteration) const;
    bool operator==(const EtaSchedule&) const = default;
};

double eta_decay(std::size_t iteration, const EtaSchedule& schedule = {});

struct GbdtConfig {
    std::size_t max_depth = 5;
    std::size_t num_rounds = 500;
    std::size_t early_stopping_rounds = 500;
    std::size_t n_bins = 256;
    double lambda = 1.0;
    double min_child_weight = 1.0;
    EtaSchedule eta{};
    std::uint64_t seed = 0;

    void validate() const;
    bool operator==(const GbdtConfig&) const = default;
};

// ---------------------------------------------------------------------------
// Histogram quantization
// ---------------------------------------------------------------------------

// Quantile cut points for one feature (at most n_bins - 1, strictly increasing).
// When the feature has no more than n_bins distinct values the cuts are the
// midpoints between consecutive distinct values.
std::vector<double> quantile_edges(std::span<const double> values, std::size_t n_bins);

// Index of the bin for value: the number of edges strictly below it. A value
// equal to an edge falls in the lower bin, so "bin <= b" matches "x <= edges[b]".
std::uint16_t bin_index(std::span<const double> edges, double value) noexcept;

struct BinnedMatrix {
    std::size_t rows = 0;
    std::size_t features = 0;
    std::vector<std::vector<double>> edges;  // per feature
    std::vector<std::uint16_t> bins;         // feature-major: bins[f * rows + r]

    std::uint16_t at(std::size_t row, std::size_t feature) const noexcept {
        return bins[feature * rows + row];
    }
    std::size_t bin_count(std::size_t feature) const noexcept { return edges[feature].size() + 1; }
};

BinnedMatrix quantize_features(const Dataset& train, std::size_t n_bins);

// ---------------------------------------------------------------------------
// Split finding
// ---------------------------------------------------------------------------

struct HistBin {
    double grad = 0.0;
    double hess = 0.0;
    std::uint32_t count = 0;
};

// Per-feature gradient/hessian/count histograms for one node.
class NodeHistogram {
public:
    NodeHistogram() = default;
    explicit NodeHistogram(std::vector<std::size_t> bins_per_feature);

    std::size_t features() const noexcept { return bins_per_feature_.size(); }
    std::size_t bins(std::size_t feature) const noexcept { return bins_per_feature_[feature]; }

    std::span<HistBin> feature(std::size_t f) noexcept {
        return {data_.data() + offsets_[f], bins_per_feature_[f]};
    }
    std::span<const HistBin> feature(std::size_t f) const noexcept {
        return {data_.data() + offsets_[f], bins_per_feature_[f]};
    }

    // this = parent - sibling, bin by bin.
    void set_difference(const NodeHistogram& parent, const NodeHistogram& sibling);

private:
    std::vector<std::size_t> bins_per_feature_;
    std::vector<std::size_t> offsets_;
    std::vector<HistBin> data_;
};

// Accumulates the histogram of the given rows. Each feature is reduced
// sequentially in row order, so the result does not depend on thread count.
NodeHistogram histogram_for_rows(const BinnedMatrix& m, std::span<const std::uint32_t> rows,
                                 std::span<const double> grad, std::span<const double> hess);

struct SplitCandidate {
    std::size_t feature = 0;
    std::size_t bin = 0;  // rows with bin <= this go left
    double gain = 0.0;
};

// Gain of splitting (G, H) into (G_L, H_L) / (G - G_L, H - H_L).
double split_gain(double grad_left, double hess_left, double grad_total, double hess_total,
                  double lambda) noexcept;

// Highest positive-gain split with both children at or above min_child_weight.
// Ties (gains within a relative 1e-12) go to the lowest feature, then the lowest bin.
std::optional<SplitCandidate> best_split(const NodeHistogram& hist, double lambda,
                                         double min_child_weight);

// ---------------------------------------------------------------------------
// Trees
// ---------------------------------------------------------------------------

inline constexpr std::uint32_t kNoChild = std::numeric_limits<std::uint32_t>::max();

// Rows with x[feature] <= threshold go left. The data model admits no missing
// values, so there is no default direction to store.
struct TreeNode {
    std::uint32_t feature = 0;
    double threshold = 0.0;
    std::uint32_t left = kNoChild;
    std::uint32_t right = kNoChild;
    double value = 0.0;  // leaf increment, eta already applied

    bool is_leaf() const noexcept { return left == kNoChild; }
    bool operator==(const TreeNode&) const = default;
};

struct Tree {
    std::vector<TreeNode> nodes;  // nodes[0] is the root

    double predict(std::span<const double> row) const noexcept;
    // Depth of the deepest leaf; a lone root leaf has depth 0.
    std::size_t depth() const;
    bool operator==(const Tree&) const = default;
};

struct RoundMetrics {
    std::size_t round = 0;
    double eta = 0.0;
    double train_mae = 0.0;
    double val_mae = 0.0;  // NaN when no validation rows were given
    bool operator==(const RoundMetrics&) const = default;
};

struct TreeEnsemble {
    double base_score = 0.0;
    std::vector<Tree> trees;
    std::vector<double> etas;            // eta used for each kept tree
    std::vector<RoundMetrics> history;   // every round that was run
    std::size_t best_round = 0;
    GbdtConfig config{};

    double predict(std::span<const double> row) const;
};

double predict_gbdt(const TreeEnsemble& model, std::span<const double> row);

// Squared-error boosting monitored by MAE. Keeps the trees up to the round
// with the best validation MAE.
TreeEnsemble train_gbdt(const Dataset& train, const Dataset& val, const GbdtConfig& cfg);

}  // namespace optbench::gbdt
