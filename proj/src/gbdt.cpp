#include "optbench/gbdt.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "optbench/errors.hpp"

namespace optbench::gbdt {

void EtaSchedule::validate() const {
    if (!(eta_min > 0.0 && eta_min <= eta_base && eta_base <= 1.0))
        throw ValidationError("eta", "requires 0 < eta_min <= eta_base <= 1");
    if (!(max_iter_decay > 0.0)) throw ValidationError("eta.max_iter_decay", "must be positive");
}

double EtaSchedule::excess(std::size_t iteration) const {
    const double x = static_cast<double>(iteration) + 1.0;
    const double scaled = x / 8.0;
    return (eta_base - eta_min) * std::exp(-(scaled * scaled) / max_iter_decay);
}

double eta_decay(std::size_t iteration, const EtaSchedule& schedule) {
    return schedule.eta_min + schedule.excess(iteration);
}

void GbdtConfig::validate() const {
    if (max_depth < 1) throw ValidationError("max_depth", "must be at least 1");
    if (num_rounds < 1) throw ValidationError("num_rounds", "must be at least 1");
    if (early_stopping_rounds < 1) throw ValidationError("early_stopping_rounds", "must be at least 1");
    if (n_bins < 2 || n_bins > 1024) throw ValidationError("n_bins", "must lie in [2, 1024]");
    if (!(lambda >= 0.0)) throw ValidationError("lambda", "must be non-negative");
    if (!(min_child_weight >= 0.0)) throw ValidationError("min_child_weight", "must be non-negative");
    eta.validate();
}

// ---------------------------------------------------------------------------

std::vector<double> quantile_edges(std::span<const double> values, std::size_t n_bins) {
    if (values.empty() || n_bins < 2) return {};
    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());

    std::vector<double> distinct;
    std::unique_copy(sorted.begin(), sorted.end(), std::back_inserter(distinct));
    if (distinct.size() < 2) return {};

    std::vector<double> edges;
    if (distinct.size() <= n_bins) {
        edges.reserve(distinct.size() - 1);
        for (std::size_t i = 0; i + 1 < distinct.size(); ++i)
            edges.push_back(0.5 * (distinct[i] + distinct[i + 1]));
        return edges;
    }

    const double last = static_cast<double>(sorted.size() - 1);
    for (std::size_t k = 1; k < n_bins; ++k) {
        const double pos = last * static_cast<double>(k) / static_cast<double>(n_bins);
        const auto lo = static_cast<std::size_t>(std::floor(pos));
        const double frac = pos - static_cast<double>(lo);
        const double cut = lo + 1 < sorted.size() ? sorted[lo] + frac * (sorted[lo + 1] - sorted[lo])
                                                  : sorted[lo];
        if (cut >= sorted.back()) break;
        if (edges.empty() || cut > edges.back()) edges.push_back(cut);
    }
    return edges;
}

std::uint16_t bin_index(std::span<const double> edges, double value) noexcept {
    return static_cast<std::uint16_t>(std::lower_bound(edges.begin(), edges.end(), value) - edges.begin());
}

BinnedMatrix quantize_features(const Dataset& train, std::size_t n_bins) {
    if (train.empty()) throw ValidationError("train", "cannot quantize an empty dataset");
    if (n_bins < 2 || n_bins > 1024) throw ValidationError("n_bins", "must lie in [2, 1024]");

    BinnedMatrix m;
    m.rows = train.size();
    m.features = kFeatureCount;
    m.edges.resize(kFeatureCount);
    m.bins.resize(m.rows * m.features);

    const auto nf = static_cast<std::ptrdiff_t>(kFeatureCount);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t fi = 0; fi < nf; ++fi) {
        const auto f = static_cast<std::size_t>(fi);
        std::vector<double> column(m.rows);
        for (std::size_t r = 0; r < m.rows; ++r) column[r] = train[r].features[f];
        m.edges[f] = quantile_edges(column, n_bins);
        for (std::size_t r = 0; r < m.rows; ++r) m.bins[f * m.rows + r] = bin_index(m.edges[f], column[r]);
    }
    return m;
}

// ---------------------------------------------------------------------------

NodeHistogram::NodeHistogram(std::vector<std::size_t> bins_per_feature)
    : bins_per_feature_(std::move(bins_per_feature)) {
    offsets_.resize(bins_per_feature_.size());
    std::size_t total = 0;
    for (std::size_t f = 0; f < bins_per_feature_.size(); ++f) {
        offsets_[f] = total;
        total += bins_per_feature_[f];
    }
    data_.assign(total, HistBin{});
}

void NodeHistogram::set_difference(const NodeHistogram& parent, const NodeHistogram& sibling) {
    for (std::size_t i = 0; i < data_.size(); ++i) {
        data_[i].grad = parent.data_[i].grad - sibling.data_[i].grad;
        data_[i].hess = parent.data_[i].hess - sibling.data_[i].hess;
        data_[i].count = parent.data_[i].count - sibling.data_[i].count;
    }
}

double split_gain(double grad_left, double hess_left, double grad_total, double hess_total,
                  double lambda) noexcept {
    const double grad_right = grad_total - grad_left;
    const double hess_right = hess_total - hess_left;
    return 0.5 * (grad_left * grad_left / (hess_left + lambda) +
                  grad_right * grad_right / (hess_right + lambda) -
                  grad_total * grad_total / (hess_total + lambda));
}

namespace {
constexpr double kTieTolerance = 1e-12;
}

std::optional<SplitCandidate> best_split(const NodeHistogram& hist, double lambda,
                                         double min_child_weight) {
    std::optional<SplitCandidate> best;
    double best_gain = 0.0;
    for (std::size_t f = 0; f < hist.features(); ++f) {
        const auto bins = hist.feature(f);
        if (bins.size() < 2) continue;
        double grad_total = 0.0, hess_total = 0.0;
        std::uint64_t count_total = 0;
        for (const auto& b : bins) {
            grad_total += b.grad;
            hess_total += b.hess;
            count_total += b.count;
        }
        double grad_left = 0.0, hess_left = 0.0;
        std::uint64_t count_left = 0;
        for (std::size_t b = 0; b + 1 < bins.size(); ++b) {
            grad_left += bins[b].grad;
            hess_left += bins[b].hess;
            count_left += bins[b].count;
            if (count_left == 0) continue;
            if (count_left == count_total) break;
            if (hess_left < min_child_weight || hess_total - hess_left < min_child_weight) continue;
            const double gain = split_gain(grad_left, hess_left, grad_total, hess_total, lambda);
            // Gains equal up to summation order count as ties and keep the earlier split.
            if (gain > best_gain && gain - best_gain > kTieTolerance * best_gain) {
                best_gain = gain;
                best = SplitCandidate{f, b, gain};
            }
        }
    }
    return best;
}

// ---------------------------------------------------------------------------

double Tree::predict(std::span<const double> row) const noexcept {
    std::uint32_t i = 0;
    while (!nodes[i].is_leaf()) {
        const auto& n = nodes[i];
        i = row[n.feature] <= n.threshold ? n.left : n.right;
    }
    return nodes[i].value;
}

std::size_t Tree::depth() const {
    std::size_t deepest = 0;
    std::vector<std::pair<std::uint32_t, std::size_t>> stack{{0, 0}};
    while (!stack.empty()) {
        auto [i, d] = stack.back();
        stack.pop_back();
        if (nodes[i].is_leaf()) {
            deepest = std::max(deepest, d);
        } else {
            stack.emplace_back(nodes[i].left, d + 1);
            stack.emplace_back(nodes[i].right, d + 1);
        }
    }
    return deepest;
}

double TreeEnsemble::predict(std::span<const double> row) const {
    if (row.size() != kFeatureCount)
        throw ValidationError("row", "expected 26 features, got " + std::to_string(row.size()));
    double sum = base_score;
    for (const auto& t : trees) sum += t.predict(row);
    return sum;
}

double predict_gbdt(const TreeEnsemble& model, std::span<const double> row) {
    return model.predict(row);
}

NodeHistogram histogram_for_rows(const BinnedMatrix& m, std::span<const std::uint32_t> rows,
                                 std::span<const double> grad, std::span<const double> hess) {
    std::vector<std::size_t> sizes(m.features);
    for (std::size_t f = 0; f < m.features; ++f) sizes[f] = m.bin_count(f);
    NodeHistogram hist(std::move(sizes));

    const auto nf = static_cast<std::ptrdiff_t>(m.features);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t fi = 0; fi < nf; ++fi) {
        const auto f = static_cast<std::size_t>(fi);
        auto out = hist.feature(f);
        if (out.size() < 2) continue;
        const std::uint16_t* column = m.bins.data() + f * m.rows;
        for (std::uint32_t r : rows) {
            auto& b = out[column[r]];
            b.grad += grad[r];
            b.hess += hess[r];
            ++b.count;
        }
    }
    return hist;
}

namespace {

struct PendingNode {
    std::uint32_t node = 0;
    std::size_t begin = 0;
    std::size_t end = 0;
    std::size_t depth = 0;
    NodeHistogram hist;
};

struct LeafRange {
    std::size_t begin = 0;
    std::size_t end = 0;
    double value = 0.0;
};

class TreeBuilder {
public:
    TreeBuilder(const BinnedMatrix& binned, const GbdtConfig& cfg)
        : binned_(binned), cfg_(cfg), order_(binned.rows), scratch_(binned.rows) {}

    // Grows one tree on (grad, hess); leaves_ records which rows land where.
    Tree grow(std::span<const double> grad, std::span<const double> hess, double eta) {
        std::iota(order_.begin(), order_.end(), std::uint32_t{0});
        leaves_.clear();
        Tree tree;
        tree.nodes.emplace_back();

        std::vector<PendingNode> level;
        level.push_back(PendingNode{0, 0, order_.size(), 0, {}});
        if (cfg_.max_depth > 0) level[0].hist = histogram_for_rows(binned_, order_, grad, hess);

        while (!level.empty()) {
            std::vector<PendingNode> next;
            for (auto& p : level) {
                std::optional<SplitCandidate> split;
                if (p.depth < cfg_.max_depth && p.end - p.begin >= 2)
                    split = best_split(p.hist, cfg_.lambda, cfg_.min_child_weight);
                if (!split) {
                    make_leaf(tree, p, grad, hess, eta);
                    continue;
                }
                const std::size_t mid = partition(p.begin, p.end, split->feature, split->bin);
                const auto left = static_cast<std::uint32_t>(tree.nodes.size());
                const auto right = left + 1;
                tree.nodes.emplace_back();
                tree.nodes.emplace_back();
                auto& node = tree.nodes[p.node];
                node.feature = static_cast<std::uint32_t>(split->feature);
                node.threshold = binned_.edges[split->feature][split->bin];
                node.left = left;
                node.right = right;

                PendingNode lchild{left, p.begin, mid, p.depth + 1, {}};
                PendingNode rchild{right, mid, p.end, p.depth + 1, {}};
                if (p.depth + 1 < cfg_.max_depth) {
                    // Build the smaller child directly, derive the larger one.
                    const bool left_smaller = (mid - p.begin) <= (p.end - mid);
                    auto& small = left_smaller ? lchild : rchild;
                    auto& large = left_smaller ? rchild : lchild;
                    small.hist = histogram_for_rows(
                        binned_, std::span(order_).subspan(small.begin, small.end - small.begin), grad, hess);
                    large.hist = std::move(p.hist);
                    large.hist.set_difference(large.hist, small.hist);
                }
                next.push_back(std::move(lchild));
                next.push_back(std::move(rchild));
            }
            level = std::move(next);
        }
        return tree;
    }

    void apply_leaves(std::span<double> predictions) const {
        for (const auto& leaf : leaves_)
            for (std::size_t i = leaf.begin; i < leaf.end; ++i) predictions[order_[i]] += leaf.value;
    }

private:
    void make_leaf(Tree& tree, const PendingNode& p, std::span<const double> grad,
                   std::span<const double> hess, double eta) {
        double g = 0.0, h = 0.0;
        for (std::size_t i = p.begin; i < p.end; ++i) {
            g += grad[order_[i]];
            h += hess[order_[i]];
        }
        const double denom = h + cfg_.lambda;
        const double value = denom > 0.0 ? -g / denom * eta : 0.0;
        tree.nodes[p.node].value = value;
        leaves_.push_back(LeafRange{p.begin, p.end, value});
    }

    // Stable: left rows keep their relative order, then the right rows.
    std::size_t partition(std::size_t begin, std::size_t end, std::size_t feature, std::size_t bin) {
        const std::uint16_t* column = binned_.bins.data() + feature * binned_.rows;
        std::size_t left = begin;
        std::size_t right = 0;
        for (std::size_t i = begin; i < end; ++i) {
            const std::uint32_t r = order_[i];
            if (column[r] <= bin) order_[left++] = r;
            else scratch_[right++] = r;
        }
        std::copy_n(scratch_.begin(), right, order_.begin() + static_cast<std::ptrdiff_t>(left));
        return left;
    }

    const BinnedMatrix& binned_;
    const GbdtConfig& cfg_;
    std::vector<std::uint32_t> order_;
    std::vector<std::uint32_t> scratch_;
    std::vector<LeafRange> leaves_;
};

double mean_abs_error(std::span<const double> pred, std::span<const double> target) {
    double sum = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) sum += std::abs(pred[i] - target[i]);
    return sum / static_cast<double>(pred.size());
}

}  // namespace

TreeEnsemble train_gbdt(const Dataset& train, const Dataset& val, const GbdtConfig& cfg) {
    cfg.validate();
    if (train.empty()) throw ValidationError("train", "training data is empty");

    const std::size_t n = train.size();
    const auto targets = train.targets();
    const auto val_targets = val.targets();

    TreeEnsemble model;
    model.config = cfg;
    model.base_score = std::accumulate(targets.begin(), targets.end(), 0.0) / static_cast<double>(n);

    const auto binned = quantize_features(train, cfg.n_bins);
    TreeBuilder builder(binned, cfg);

    std::vector<double> pred(n, model.base_score);
    std::vector<double> val_pred(val.size(), model.base_score);
    std::vector<double> grad(n);
    const std::vector<double> hess(n, 1.0);

    double best_metric = std::numeric_limits<double>::infinity();
    for (std::size_t round = 0; round < cfg.num_rounds; ++round) {
        const double eta = eta_decay(round, cfg.eta);
        for (std::size_t i = 0; i < n; ++i) grad[i] = pred[i] - targets[i];

        Tree tree = builder.grow(grad, hess, eta);
        builder.apply_leaves(pred);
        for (std::size_t i = 0; i < val.size(); ++i) val_pred[i] += tree.predict(val[i].features);

        RoundMetrics m;
        m.round = round;
        m.eta = eta;
        m.train_mae = mean_abs_error(pred, targets);
        m.val_mae = val.empty() ? std::numeric_limits<double>::quiet_NaN()
                                : mean_abs_error(val_pred, val_targets);
        model.history.push_back(m);
        model.trees.push_back(std::move(tree));
        model.etas.push_back(eta);

        // Without validation rows the training MAE is monitored instead.
        const double metric = val.empty() ? m.train_mae : m.val_mae;
        if (metric < best_metric) {
            best_metric = metric;
            model.best_round = round;
        } else if (round - model.best_round >= cfg.early_stopping_rounds) {
            break;
        }
    }
    model.trees.resize(model.best_round + 1);
    model.etas.resize(model.best_round + 1);
    return model;
}

}  // namespace optbench::gbdt
