#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "imblab/dataio.hpp"
#include "imblab/gbdt.hpp"
#include "imblab/metrics.hpp"

using namespace imblab;

namespace {

Dataset random_dataset(std::size_t n, std::size_t d, std::uint64_t seed, double rate = 0.3) {
    GeneratorConfig cfg;
    cfg.d = d;
    cfg.target_positive_rate = rate;
    cfg.seed = seed;
    auto ds = sample_d0(make_ground_truth(cfg), n, seed + 100);
    if (ds.positives() == 0 || ds.negatives() == 0) {
        return random_dataset(n, d, seed + 1000, rate);
    }
    return ds;
}

double oracle_weighted_logloss(const BoostedModel& m, const WeightedDataset& wds) {
    double s = 0.0;
    for (std::size_t i = 0; i < wds.base.rows(); ++i) {
        const double p = sigmoid(m.raw_score(wds.base.row(i)));
        s -= wds.weights[i] * (wds.base.label(i) == 1 ? std::log(p) : std::log1p(-p));
    }
    return s;
}

} // namespace

TEST(GbdtConfig, Validation) {
    GbdtConfig cfg;
    EXPECT_NO_THROW(cfg.validate());
    cfg.learning_rate = 0.0;
    EXPECT_THROW(cfg.validate(), InvalidArgument);
    cfg.learning_rate = 1.5;
    EXPECT_THROW(cfg.validate(), InvalidArgument);
    cfg = {};
    cfg.max_leaves = 1;
    EXPECT_THROW(cfg.validate(), InvalidArgument);
    cfg = {};
    cfg.max_depth = 0;
    EXPECT_THROW(cfg.validate(), InvalidArgument);
}

TEST(FitGbdt, StumpRecoversSeparatingThreshold) {
    const Dataset ds(8, 1, {0.1, 0.5, 0.9, 1.3, 2.2, 2.8, 3.0, 3.9}, {0, 0, 0, 0, 1, 1, 1, 1});
    GbdtConfig cfg;
    cfg.n_estimators = 1;
    cfg.max_depth = 1;
    cfg.min_child_samples = 1;
    cfg.learning_rate = 1.0;
    const auto fit = fit_gbdt(WeightedDataset::uniform(ds), cfg);
    ASSERT_EQ(fit.model.trees.size(), 1u);
    const auto& root = fit.model.trees[0].nodes[0];
    EXPECT_EQ(root.feature, 0);
    EXPECT_DOUBLE_EQ(root.threshold, (1.3 + 2.2) / 2);
    EXPECT_DOUBLE_EQ(*error(confusion(ds.labels(), predict_gbdt(fit.model, ds))), 0.0);
}

TEST(FitGbdt, VanishingLearningRateStaysAtBaseScore) {
    const auto ds = random_dataset(60, 3, 4);
    GbdtConfig cfg;
    cfg.n_estimators = 1;
    cfg.learning_rate = 1e-6;
    const auto fit = fit_gbdt(WeightedDataset::uniform(ds), cfg);
    const double base = sigmoid(std::log(double(ds.positives()) / double(ds.negatives())));
    for (double s : predict_gbdt(fit.model, ds)) {
        EXPECT_NEAR(s, base, 1e-5);
    }
}

TEST(FitGbdt, LossTraceMatchesRecomputedLossAndNeverIncreases) {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const auto ds = random_dataset(50, 4, seed);
        std::vector<double> w(ds.rows());
        std::mt19937_64 rng(seed);
        std::uniform_real_distribution<double> u(0.5, 3.0);
        for (auto& v : w) {
            v = u(rng);
        }
        const WeightedDataset wds(ds, w);
        GbdtConfig cfg;
        cfg.n_estimators = 30;
        cfg.learning_rate = 0.3;
        cfg.min_child_samples = 2;
        const auto fit = fit_gbdt(wds, cfg);
        ASSERT_EQ(fit.loss_trace.size(), cfg.n_estimators + 1);
        BoostedModel partial = fit.model;
        partial.trees.clear();
        for (std::size_t t = 0; t <= cfg.n_estimators; ++t) {
            EXPECT_NEAR(fit.loss_trace[t], oracle_weighted_logloss(partial, wds), 1e-9);
            if (t > 0) {
                EXPECT_LE(fit.loss_trace[t], fit.loss_trace[t - 1] + 1e-12);
            }
            if (t < cfg.n_estimators) {
                partial.trees.push_back(fit.model.trees[t]);
            }
        }
    }
}

TEST(FitGbdt, BaseScoreIsWeightedLogOdds) {
    const auto ds = random_dataset(40, 2, 9);
    const auto wds = apply_weights(ds, {3.0});
    GbdtConfig cfg;
    cfg.n_estimators = 1;
    const auto fit = fit_gbdt(wds, cfg);
    EXPECT_NEAR(fit.model.base_score, std::log(3.0 * ds.positives() / ds.negatives()), 1e-12);
}

TEST(FitGbdt, SingleClassIsRejected) {
    const Dataset ds(3, 1, {1, 2, 3}, {0, 0, 0});
    EXPECT_THROW(fit_gbdt(WeightedDataset::uniform(ds), {}), InvalidArgument);
}

TEST(FitGbdt, StructuralBoundsHold) {
    const auto ds = random_dataset(400, 6, 13);
    struct Shape {
        std::size_t depth, leaves;
    };
    for (Shape s : {Shape{1, 31}, Shape{3, 31}, Shape{5, 8}, Shape{8, 4}, Shape{4, 16}}) {
        GbdtConfig cfg;
        cfg.n_estimators = 10;
        cfg.max_depth = s.depth;
        cfg.max_leaves = s.leaves;
        const auto fit = fit_gbdt(WeightedDataset::uniform(ds), cfg);
        EXPECT_LE(fit.model.trees.size(), cfg.n_estimators);
        for (const auto& t : fit.model.trees) {
            EXPECT_LE(t.leaves(), s.leaves);
            EXPECT_LE(t.depth(), s.depth);
            EXPECT_EQ(t.nodes.size(), 2 * t.leaves() - 1);
        }
    }
}

TEST(FitGbdt, WeightScaleInvariance) {
    const auto ds = random_dataset(300, 5, 17);
    const auto wds = apply_weights(ds, {7.0});
    GbdtConfig cfg;
    cfg.n_estimators = 20;
    const auto base = predict_gbdt(fit_gbdt(wds, cfg).model, ds);
    for (double c : {1e-3, 0.5, 3.7, 1e4}) {
        auto w = wds.weights;
        for (auto& v : w) {
            v *= c;
        }
        const auto scaled = predict_gbdt(fit_gbdt(WeightedDataset(ds, w), cfg).model, ds);
        for (std::size_t i = 0; i < ds.rows(); ++i) {
            EXPECT_NEAR(scaled[i], base[i], 1e-10);
        }
    }
}

TEST(FitGbdt, DeterministicRefit) {
    const auto ds = random_dataset(200, 4, 19);
    const auto a = fit_gbdt(WeightedDataset::uniform(ds), {});
    const auto b = fit_gbdt(WeightedDataset::uniform(ds), {});
    EXPECT_EQ(predict_gbdt(a.model, ds), predict_gbdt(b.model, ds));
}

TEST(FitGbdt, TrainingRecallIsMonotoneInGamma) {
    const std::vector<double> gammas{1, 2, 3, 5, 8, 13, 20, 40, 80, 150};
    int violations = 0;
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
        const auto ds = random_dataset(300, 5, 40 + seed, 0.08);
        for (std::size_t trees : {5, 20}) {
            GbdtConfig cfg;
            cfg.n_estimators = trees;
            cfg.max_depth = 3;
            cfg.max_leaves = 8;
            double prev = -1.0;
            for (double g : gammas) {
                const auto fit = fit_gbdt(apply_weights(ds, {g}), cfg);
                const double r = recall(confusion(ds.labels(), predict_gbdt(fit.model, ds))).value_or(0.0);
                violations += r < prev;
                prev = r;
            }
        }
    }
    EXPECT_EQ(violations, 0);
}

TEST(PredictGbdt, ZeroTreesGiveBaseScore) {
    BoostedModel m;
    m.base_score = -1.25;
    m.n_features = 2;
    const Dataset ds(3, 2, {0, 0, 5, -5, 1e6, 3}, {0, 1, 0});
    for (double s : predict_gbdt(m, ds)) {
        EXPECT_DOUBLE_EQ(s, 1.0 / (1.0 + std::exp(1.25)));
    }
}

TEST(PredictGbdt, HandBuiltStump) {
    BoostedModel m;
    m.base_score = 0.2;
    m.learning_rate = 0.5;
    m.n_features = 2;
    RegressionTree t;
    t.nodes = {TreeNode{1, 0.75, 1, 2, 0.0, 0}, TreeNode{-1, 0, -1, -1, -2.0, 1}, TreeNode{-1, 0, -1, -1, 3.0, 1}};
    m.trees = {t, t};
    // x1 <= 0.75 -> 0.2 + 0.5 * 2 * -2 = -1.8; otherwise 0.2 + 0.5 * 2 * 3 = 3.2
    const Dataset ds(3, 2, {9, 0.75, -9, 0.76, 0, -1}, {0, 1, 0});
    const auto s = predict_gbdt(m, ds);
    EXPECT_DOUBLE_EQ(s[0], 1.0 / (1.0 + std::exp(1.8)));
    EXPECT_DOUBLE_EQ(s[1], 1.0 / (1.0 + std::exp(-3.2)));
    EXPECT_DOUBLE_EQ(s[2], s[0]);
}

TEST(PredictGbdt, DuplicateRowsScoreIdentically) {
    auto base = random_dataset(80, 3, 23);
    std::vector<double> x(base.values().begin(), base.values().end());
    std::vector<std::uint8_t> y(base.labels().begin(), base.labels().end());
    x.insert(x.end(), base.row(0).begin(), base.row(0).end());
    y.push_back(1 - base.label(0));
    const Dataset ds(81, 3, std::move(x), std::move(y));
    const auto fit = fit_gbdt(WeightedDataset::uniform(ds), {});
    const auto s = predict_gbdt(fit.model, ds);
    EXPECT_EQ(s[0], s[80]);
    for (double v : s) {
        EXPECT_GT(v, 0.0);
        EXPECT_LT(v, 1.0);
    }
}

TEST(PredictGbdt, DimensionMismatchThrows) {
    const auto ds = random_dataset(60, 3, 2);
    const auto fit = fit_gbdt(WeightedDataset::uniform(ds), {});
    const Dataset other(1, 2, {0, 0}, {0});
    EXPECT_THROW(predict_gbdt(fit.model, other), InvalidArgument);
}

TEST(GbdtModelIo, RoundTripIsExact) {
    const auto ds = random_dataset(150, 4, 29);
    GbdtConfig cfg;
    cfg.n_estimators = 15;
    const auto fit = fit_gbdt(apply_weights(ds, {5.0}), cfg);
    std::stringstream ss;
    save_model(fit.model, ss);
    const auto loaded = load_model(ss);
    EXPECT_EQ(loaded.trees.size(), fit.model.trees.size());
    EXPECT_EQ(predict_gbdt(loaded, ds), predict_gbdt(fit.model, ds));
    for (std::size_t t = 0; t < loaded.trees.size(); ++t) {
        EXPECT_EQ(loaded.trees[t].depth(), fit.model.trees[t].depth());
    }
    std::istringstream bad("tree 1 2");
    EXPECT_THROW(load_model(bad), InvalidArgument);
}
