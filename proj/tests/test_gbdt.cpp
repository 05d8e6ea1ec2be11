#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "optbench/errors.hpp"
#include "optbench/gbdt.hpp"
#include "optbench/ingest.hpp"
#include "oracles.hpp"
#include "split_oracle.hpp"
#include "test_support.hpp"

using namespace optbench;
using namespace optbench::gbdt;

namespace {

// Mixed continuous, few-valued and binary columns with a noisy target.
Dataset small_random_dataset(std::mt19937_64& rng, std::size_t n) {
    std::vector<DatasetRow> rows(n);
    for (std::size_t i = 0; i < n; ++i) {
        auto& r = rows[i];
        r.id = i;
        for (std::size_t f = 0; f < kFeatureCount; ++f) {
            if (f % 3 == 0) r.features[f] = uniform(rng, -5.0, 5.0);
            else if (f % 3 == 1) r.features[f] = static_cast<double>(uniform_index(rng, 4));
            else r.features[f] = std::round(uniform(rng, 0.0, 100.0)) / 10.0;
        }
        r.features[feature::kIsCall] = static_cast<double>(uniform_index(rng, 2));
        r.target = 50.0 + 3.0 * r.features[0] + 5.0 * r.features[1] + uniform(rng, -4.0, 4.0);
    }
    return Dataset(Provenance::Synthetic, std::move(rows));
}

std::vector<FeatureRow> feature_rows(const Dataset& ds) {
    std::vector<FeatureRow> out;
    for (const auto& r : ds.rows()) out.push_back(r.features);
    return out;
}

Dataset dataset_from(const std::vector<std::vector<double>>& cols, const std::vector<double>& y) {
    std::vector<DatasetRow> rows(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) {
        rows[i].id = i;
        for (std::size_t f = 0; f < cols.size(); ++f) rows[i].features[f] = cols[f][i];
        rows[i].target = y[i];
    }
    return Dataset(Provenance::Synthetic, std::move(rows));
}

void expect_same_tree(const Tree& tree, std::uint32_t i, const oracle::BruteNode& ref) {
    const auto& node = tree.nodes[i];
    ASSERT_EQ(node.is_leaf(), !ref.split.has_value());
    if (node.is_leaf()) {
        EXPECT_NEAR(node.value, ref.value, 1e-12 * std::max(1.0, std::abs(ref.value)));
        return;
    }
    EXPECT_EQ(node.feature, ref.split->feature);
    EXPECT_EQ(node.threshold, ref.split->threshold);
    expect_same_tree(tree, node.left, *ref.left);
    expect_same_tree(tree, node.right, *ref.right);
}

}  // namespace

TEST(EtaSchedule, MatchesFormulaAtCheckpoints) {
    for (const auto& p : oracle::kEta) {
        EXPECT_NEAR(eta_decay(p.iteration), p.value, 1e-12) << p.iteration;
        EXPECT_NEAR(eta_decay(p.iteration), oracle::eta_formula(p.iteration), 1e-15);
    }
    EXPECT_NEAR(eta_decay(2529), 0.2 + 0.3 / std::exp(1.0), 1e-4);
}

TEST(EtaSchedule, DecreasingAndBounded) {
    const EtaSchedule s;
    double prev_excess = s.excess(0);
    EXPECT_LE(eta_decay(0), 0.5);
    for (std::size_t it = 1; it < 40000; ++it) {
        const double e = s.excess(it);
        ASSERT_LT(e, prev_excess) << it;
        ASSERT_GT(e, 0.0);
        ASSERT_LE(eta_decay(it), eta_decay(it - 1));
        ASSERT_GE(eta_decay(it), 0.2);
        prev_excess = e;
    }
    EXPECT_EQ(eta_decay(1000000), 0.2);
}

TEST(EtaSchedule, Validation) {
    EXPECT_THROW((EtaSchedule{0.1, 0.2, 100.0}).validate(), ValidationError);
    EXPECT_THROW((EtaSchedule{1.5, 0.2, 100.0}).validate(), ValidationError);
    EXPECT_THROW((EtaSchedule{0.5, 0.0, 100.0}).validate(), ValidationError);
    EXPECT_THROW((EtaSchedule{0.5, 0.2, 0.0}).validate(), ValidationError);
    EXPECT_NO_THROW((EtaSchedule{1.0, 1.0, 1.0}).validate());
}

TEST(Quantize, TwoBinMedian) {
    const std::vector<double> v{1, 2, 3, 4};
    const auto edges = quantile_edges(v, 2);
    ASSERT_EQ(edges.size(), 1u);
    EXPECT_EQ(edges[0], 2.5);
    std::vector<std::uint16_t> bins;
    for (double x : v) bins.push_back(bin_index(edges, x));
    EXPECT_EQ(bins, (std::vector<std::uint16_t>{0, 0, 1, 1}));
}

TEST(Quantize, ConstantFeatureHasNoEdges) {
    const std::vector<double> v(10, 3.0);
    EXPECT_TRUE(quantile_edges(v, 256).empty());
    EXPECT_EQ(bin_index({}, 3.0), 0);
}

TEST(Quantize, FewDistinctValuesUseMidpoints) {
    const std::vector<double> v{5, 1, 1, 3, 5};
    EXPECT_EQ(quantile_edges(v, 256), (std::vector<double>{2.0, 4.0}));
}

TEST(Quantize, EdgesBoundedAndIncreasing) {
    std::mt19937_64 rng(8);
    std::vector<double> v(5000);
    for (auto& x : v) x = std::exp(uniform(rng, 0.0, 8.0));
    for (std::size_t nb : {2u, 16u, 256u, 1024u}) {
        const auto e = quantile_edges(v, nb);
        EXPECT_LE(e.size(), nb - 1);
        EXPECT_TRUE(std::is_sorted(e.begin(), e.end()));
        EXPECT_EQ(std::adjacent_find(e.begin(), e.end()), e.end());
        EXPECT_EQ(bin_index(e, 1e9), e.size());
        for (double x : v) {
            const auto b = bin_index(e, x);
            ASSERT_LE(b, e.size());
            if (b < e.size()) EXPECT_LE(x, e[b]);
            if (b > 0) EXPECT_GT(x, e[b - 1]);
        }
    }
}

TEST(Quantize, MatrixIsDeterministic) {
    const auto ds = support::random_dataset(3000, 12);
    const auto a = quantize_features(ds, 64);
    const auto b = quantize_features(ds, 64);
    EXPECT_EQ(a.bins, b.bins);
    EXPECT_EQ(a.edges, b.edges);
    for (std::size_t r = 0; r < ds.size(); r += 97)
        for (std::size_t f = 0; f < kFeatureCount; ++f) EXPECT_EQ(a.at(r, f), bin_index(a.edges[f], ds[r].features[f]));
    EXPECT_THROW(quantize_features(Dataset{}, 64), ValidationError);
}

TEST(BestSplit, HandEvaluatedGain) {
    NodeHistogram h({2});
    h.feature(0)[0] = {-2.0, 2.0, 2};
    h.feature(0)[1] = {2.0, 2.0, 2};
    const auto s = best_split(h, 1.0, 1.0);
    ASSERT_TRUE(s);
    EXPECT_EQ(s->feature, 0u);
    EXPECT_EQ(s->bin, 0u);
    EXPECT_NEAR(s->gain, 4.0 / 3.0, 1e-15);
}

TEST(BestSplit, ZeroGradientsGiveNothing) {
    NodeHistogram h({3, 3});
    for (std::size_t f = 0; f < 2; ++f)
        for (auto& b : h.feature(f)) b = {0.0, 1.0, 1};
    EXPECT_FALSE(best_split(h, 1.0, 1.0));
}

TEST(BestSplit, MinChildWeightBlocks) {
    NodeHistogram h({2});
    h.feature(0)[0] = {-2.0, 2.0, 2};
    h.feature(0)[1] = {2.0, 2.0, 2};
    EXPECT_FALSE(best_split(h, 1.0, 3.0));
}

TEST(BestSplit, TiesGoToLowestFeatureThenBin) {
    NodeHistogram h({3, 3});
    for (std::size_t f = 0; f < 2; ++f) {
        h.feature(f)[0] = {-1.0, 1.0, 1};
        h.feature(f)[1] = {0.0, 0.0, 0};
        h.feature(f)[2] = {1.0, 1.0, 1};
    }
    const auto s = best_split(h, 1.0, 0.0);
    ASSERT_TRUE(s);
    EXPECT_EQ(s->feature, 0u);
    EXPECT_EQ(s->bin, 0u);
}

TEST(BestSplit, HistogramSubtractionMatchesDirect) {
    std::mt19937_64 rng(3);
    const auto ds = small_random_dataset(rng, 64);
    const auto m = quantize_features(ds, 256);
    std::vector<double> g(64), hs(64);
    for (auto& v : g) v = uniform(rng, -1, 1);
    for (auto& v : hs) v = uniform(rng, 0.5, 2);
    std::vector<std::uint32_t> all(64), left, right;
    std::iota(all.begin(), all.end(), 0u);
    for (auto r : all) (r % 3 == 0 ? left : right).push_back(r);
    const auto parent = histogram_for_rows(m, all, g, hs);
    const auto small = histogram_for_rows(m, left, g, hs);
    const auto direct = histogram_for_rows(m, right, g, hs);
    NodeHistogram derived = parent;
    derived.set_difference(parent, small);
    for (std::size_t f = 0; f < kFeatureCount; ++f)
        for (std::size_t b = 0; b < derived.bins(f); ++b) {
            EXPECT_NEAR(derived.feature(f)[b].grad, direct.feature(f)[b].grad, 1e-12);
            EXPECT_NEAR(derived.feature(f)[b].hess, direct.feature(f)[b].hess, 1e-12);
            EXPECT_EQ(derived.feature(f)[b].count, direct.feature(f)[b].count);
        }
}

TEST(BestSplit, AgreesWithBruteForce) {
    std::mt19937_64 rng(2718);
    for (int trial = 0; trial < 60; ++trial) {
        const std::size_t n = 2 + uniform_index(rng, 63);
        const auto ds = small_random_dataset(rng, n);
        const auto rows = feature_rows(ds);
        std::vector<double> g(n), hs(n);
        for (auto& v : g) v = uniform(rng, -3, 3);
        for (auto& v : hs) v = uniform(rng, 0.2, 2);
        const double lambda = trial % 3 == 0 ? 0.0 : 1.0 + trial % 4;
        const double mcw = (trial % 5) * 0.7;

        const auto m = quantize_features(ds, 256);
        std::vector<std::uint32_t> all(n);
        std::iota(all.begin(), all.end(), 0u);
        const auto got = best_split(histogram_for_rows(m, all, g, hs), lambda, mcw);
        std::vector<std::size_t> subset(n);
        std::iota(subset.begin(), subset.end(), 0u);
        const auto ref = oracle::brute_best_split(rows, subset, g, hs, oracle::candidate_thresholds(rows), lambda, mcw);
        ASSERT_EQ(got.has_value(), ref.has_value()) << "trial " << trial;
        if (!got) continue;
        EXPECT_EQ(got->feature, ref->feature) << "trial " << trial;
        EXPECT_EQ(m.edges[got->feature][got->bin], ref->threshold) << "trial " << trial;
        EXPECT_NEAR(got->gain, ref->gain, 1e-10);
    }
}

TEST(TrainGbdt, FirstTreeMatchesBruteForceGrowth) {
    std::mt19937_64 rng(1618);
    for (int trial = 0; trial < 25; ++trial) {
        const std::size_t n = 8 + uniform_index(rng, 57);
        const auto ds = small_random_dataset(rng, n);
        GbdtConfig cfg;
        cfg.num_rounds = 1;
        cfg.max_depth = 1 + trial % 4;
        cfg.lambda = trial % 2 ? 1.0 : 0.5;
        cfg.min_child_weight = 1.0 + trial % 3;
        const auto model = train_gbdt(ds, Dataset{}, cfg);
        ASSERT_EQ(model.trees.size(), 1u);

        const auto rows = feature_rows(ds);
        const auto y = ds.targets();
        std::vector<double> g(n), hs(n, 1.0);
        for (std::size_t i = 0; i < n; ++i) g[i] = model.base_score - y[i];
        std::vector<std::size_t> subset(n);
        std::iota(subset.begin(), subset.end(), 0u);
        const auto ref = oracle::brute_tree(rows, subset, g, hs, oracle::candidate_thresholds(rows), cfg.lambda,
                                            cfg.min_child_weight, cfg.max_depth, eta_decay(0, cfg.eta));
        expect_same_tree(model.trees[0], 0, *ref);
    }
}

TEST(TrainGbdt, ConstantTarget) {
    std::vector<std::vector<double>> cols(kFeatureCount, std::vector<double>{1, 2, 3, 4, 5});
    const auto ds = dataset_from(cols, {7.5, 7.5, 7.5, 7.5, 7.5});
    GbdtConfig cfg;
    cfg.num_rounds = 1;
    const auto model = train_gbdt(ds, Dataset{}, cfg);
    EXPECT_EQ(model.base_score, 7.5);
    FeatureRow row{};
    EXPECT_NEAR(model.predict(row), 7.5, 1e-12);
    EXPECT_NEAR(model.history.at(0).train_mae, 0.0, 1e-12);
}

TEST(TrainGbdt, HandRunStump) {
    std::vector<std::vector<double>> cols(kFeatureCount, std::vector<double>(4, 0.0));
    cols[0] = {0, 0, 1, 1};
    const auto ds = dataset_from(cols, {2, 2, 4, 4});
    GbdtConfig cfg;
    cfg.num_rounds = 1;
    cfg.max_depth = 1;
    cfg.lambda = 1.0;
    cfg.eta = {1.0, 1.0, 100000.0};
    const auto model = train_gbdt(ds, Dataset{}, cfg);
    EXPECT_EQ(model.base_score, 3.0);
    const auto& root = model.trees.at(0).nodes.at(0);
    EXPECT_EQ(root.feature, 0u);
    EXPECT_EQ(root.threshold, 0.5);
    EXPECT_NEAR(model.trees[0].nodes[root.left].value, -2.0 / 3.0, 1e-15);
    EXPECT_NEAR(model.trees[0].nodes[root.right].value, 2.0 / 3.0, 1e-15);
    EXPECT_NEAR(model.history.at(0).train_mae, 1.0 / 3.0, 1e-15);
    EXPECT_TRUE(std::isnan(model.history.at(0).val_mae));
}

TEST(TrainGbdt, TrainMaeNonIncreasingOnSeparableData) {
    std::vector<std::vector<double>> cols(kFeatureCount, std::vector<double>(40, 0.0));
    std::vector<double> y(40);
    for (std::size_t i = 0; i < 40; ++i) {
        cols[0][i] = static_cast<double>(i % 8);
        cols[1][i] = static_cast<double>(i / 8);
        y[i] = 10.0 + 3.0 * cols[0][i] + 7.0 * cols[1][i];
    }
    const auto ds = dataset_from(cols, y);
    GbdtConfig cfg;
    cfg.num_rounds = 60;
    cfg.max_depth = 3;
    const auto model = train_gbdt(ds, Dataset{}, cfg);
    for (std::size_t t = 1; t < model.history.size(); ++t)
        EXPECT_LE(model.history[t].train_mae, model.history[t - 1].train_mae + 1e-9) << t;
}

TEST(TrainGbdt, DepthBoundAndDeeperFitsBetter) {
    const auto ds = support::random_dataset(2000, 21);
    GbdtConfig cfg;
    cfg.num_rounds = 30;
    cfg.max_depth = 5;
    const auto shallow = train_gbdt(ds, Dataset{}, cfg);
    cfg.max_depth = 10;
    const auto deep = train_gbdt(ds, Dataset{}, cfg);
    for (const auto& t : shallow.trees) EXPECT_LE(t.depth(), 5u);
    for (const auto& t : deep.trees) EXPECT_LE(t.depth(), 10u);
    EXPECT_LE(deep.history.back().train_mae, shallow.history.back().train_mae + 1e-9);
    std::size_t deepest = 0;
    for (const auto& t : deep.trees) deepest = std::max(deepest, t.depth());
    EXPECT_GT(deepest, 5u);
}

TEST(TrainGbdt, PredictionIsBasePlusLeaves) {
    const auto ds = support::random_dataset(500, 4);
    GbdtConfig cfg;
    cfg.num_rounds = 20;
    const auto model = train_gbdt(ds, Dataset{}, cfg);
    ASSERT_EQ(model.etas.size(), model.trees.size());
    for (std::size_t t = 0; t < model.etas.size(); ++t) EXPECT_EQ(model.etas[t], eta_decay(t, cfg.eta));
    double mae = 0.0;
    for (const auto& r : ds.rows()) {
        double sum = model.base_score;
        for (const auto& t : model.trees) sum += t.predict(r.features);
        EXPECT_EQ(model.predict(r.features), sum);
        mae += std::abs(sum - r.target);
    }
    EXPECT_NEAR(mae / ds.size(), model.history[model.best_round].train_mae, 1e-12);
}

TEST(TrainGbdt, EarlyStoppingTruncatesAtBestValidationRound) {
    std::mt19937_64 rng(5);
    const auto train = small_random_dataset(rng, 60);
    const auto val = small_random_dataset(rng, 60);
    GbdtConfig cfg;
    cfg.num_rounds = 300;
    cfg.early_stopping_rounds = 10;
    cfg.max_depth = 6;
    const auto model = train_gbdt(train, val, cfg);
    ASSERT_LT(model.history.size(), 300u);
    EXPECT_EQ(model.history.size(), model.best_round + 1 + 10);
    EXPECT_EQ(model.trees.size(), model.best_round + 1);
    for (const auto& h : model.history) EXPECT_GE(h.val_mae, model.history[model.best_round].val_mae);
    double mae = 0.0;
    for (const auto& r : val.rows()) mae += std::abs(model.predict(r.features) - r.target);
    EXPECT_NEAR(mae / val.size(), model.history[model.best_round].val_mae, 1e-12);
}

TEST(TrainGbdt, DeterministicSerialization) {
    const auto ds = support::random_dataset(1500, 8);
    GbdtConfig cfg;
    cfg.num_rounds = 15;
    support::TempDir dir("gbdt");
    io::save_model(train_gbdt(ds, Dataset{}, cfg), dir / "a.model");
    io::save_model(train_gbdt(ds, Dataset{}, cfg), dir / "b.model");
    EXPECT_EQ(io::read_text_file(dir / "a.model"), io::read_text_file(dir / "b.model"));
}

TEST(TrainGbdt, Errors) {
    EXPECT_THROW(train_gbdt(Dataset{}, Dataset{}, GbdtConfig{}), ValidationError);
    GbdtConfig cfg;
    cfg.n_bins = 1;
    EXPECT_THROW(train_gbdt(support::random_dataset(10, 1), Dataset{}, cfg), ValidationError);
    cfg = GbdtConfig{};
    cfg.max_depth = 0;
    EXPECT_THROW(cfg.validate(), ValidationError);
}

TEST(PredictGbdt, EmptyEnsembleAndStump) {
    TreeEnsemble model;
    model.base_score = 4.25;
    FeatureRow row{};
    EXPECT_EQ(predict_gbdt(model, row), 4.25);

    Tree stump;
    stump.nodes.resize(3);
    stump.nodes[0].feature = 2;
    stump.nodes[0].threshold = 0.5;
    stump.nodes[0].left = 1;
    stump.nodes[0].right = 2;
    stump.nodes[2].value = 1.0;
    model.trees.push_back(stump);
    row[2] = 0.7;
    EXPECT_EQ(predict_gbdt(model, row), 5.25);
    row[2] = 0.5;
    EXPECT_EQ(predict_gbdt(model, row), 4.25);
}

TEST(PredictGbdt, ArityMismatch) {
    TreeEnsemble model;
    const std::vector<double> short_row(25, 0.0);
    EXPECT_THROW(model.predict(short_row), ValidationError);
}
