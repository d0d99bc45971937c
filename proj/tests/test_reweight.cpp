#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "imblab/dataio.hpp"
#include "imblab/reweight.hpp"

using namespace imblab;

namespace {

Dataset with_labels(const std::vector<std::uint8_t>& y) {
    std::vector<double> x(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) {
        x[i] = static_cast<double>(i);
    }
    return Dataset(y.size(), 1, std::move(x), y);
}

Dataset random_small(std::mt19937_64& rng) {
    std::uniform_int_distribution<int> size(1, 8);
    std::bernoulli_distribution coin(0.4);
    const auto n = static_cast<std::size_t>(size(rng));
    std::vector<std::uint8_t> y(n);
    for (auto& v : y) {
        v = coin(rng);
    }
    return with_labels(y);
}

} // namespace

TEST(ApplyWeights, UnitGammaIsIdentity) {
    const auto ds = with_labels({1, 0, 1, 0});
    const auto w = apply_weights(ds, {1.0});
    for (double v : w.weights) {
        EXPECT_EQ(v, 1.0);
    }
}

TEST(ApplyWeights, LinearRuleMeanWeightAtOnePercent) {
    std::vector<std::uint8_t> y(100, 0);
    y[17] = 1;
    const auto w = apply_weights(with_labels(y), {100.0});
    double mean = 0.0;
    for (double v : w.weights) {
        mean += v;
    }
    EXPECT_NEAR(mean / 100.0, 1.99, 1e-12);
}

TEST(ApplyWeights, GammaOnPositivesInLabelOrder) {
    const auto w = apply_weights(with_labels({1, 1, 1, 0, 0}), {4.0});
    EXPECT_EQ(w.weights, (std::vector<double>{4, 4, 4, 1, 1}));
}

TEST(ApplyWeights, RejectsGammaBelowOne) {
    EXPECT_THROW(apply_weights(with_labels({1, 0}), {0.5}), InvalidArgument);
    EXPECT_THROW(apply_weights(with_labels({1, 0}), {INFINITY}), InvalidArgument);
}

TEST(ApplyWeights, UnitGammaWeightedCostEqualsPlainCostBitwise) {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.0, 3.0);
    const auto ds = with_labels({1, 0, 0, 1, 0, 0, 0});
    std::vector<double> losses(ds.rows());
    double plain = 0.0;
    for (auto& l : losses) {
        l = u(rng);
        plain += l;
    }
    EXPECT_EQ(weighted_cost(ds, 1.0, losses), plain);
}

TEST(Resample, UnitGammaIsUniform) {
    const auto ds = with_labels({1, 0, 0, 1, 0});
    for (double p : resample_probabilities(ds, 1.0)) {
        EXPECT_DOUBLE_EQ(p, 0.2);
    }
}

TEST(Resample, SinglePositiveAtGammaNinetyNineIsHalf) {
    std::vector<std::uint8_t> y(100, 0);
    y[0] = 1;
    const auto probs = resample_probabilities(with_labels(y), 99.0);
    EXPECT_NEAR(probs[0], 99.0 / 198.0, 1e-15);
    EXPECT_NEAR(probs[1], 1.0 / 198.0, 1e-15);
}

TEST(Resample, ProbabilitiesSumToOne) {
    std::mt19937_64 rng(1);
    for (int t = 0; t < 100; ++t) {
        const auto ds = random_small(rng);
        for (double g : {1.0, 2.0, 7.0, 99.0, 1e6}) {
            const double p = resample_base_probability(ds.negatives(), ds.positives(), g);
            EXPECT_NEAR((ds.negatives() + g * ds.positives()) * p, 1.0, 1e-15);
            double s = 0.0;
            for (double q : resample_probabilities(ds, g)) {
                s += q;
            }
            EXPECT_NEAR(s, 1.0, 1e-14);
        }
    }
}

TEST(Resample, HugeGammaCollapsesOntoPositives) {
    std::vector<std::uint8_t> y(200, 0);
    y[3] = 1;
    y[50] = 1;
    const auto out = resample(with_labels(y), {1e9, PwsMode::resample, 4}, 10000);
    EXPECT_GT(static_cast<double>(out.positives()) / out.rows(), 0.999);
}

TEST(Resample, DeterministicGivenSeedAndDefaultSizeIsN) {
    const auto ds = with_labels({1, 0, 0, 0, 1, 0, 0, 0, 0, 0});
    const PwsConfig cfg{3.0, PwsMode::resample, 77};
    EXPECT_EQ(resample_indices(ds, cfg), resample_indices(ds, cfg));
    EXPECT_EQ(resample(ds, cfg).rows(), ds.rows());
}

TEST(Resample, PositiveCountsFollowTheBinomial) {
    std::vector<std::uint8_t> y(50, 0);
    for (int i = 0; i < 5; ++i) {
        y[i * 7] = 1;
    }
    const auto ds = with_labels(y);
    const double gamma = 4.0;
    const double q = gamma * 5 * resample_base_probability(45, 5, gamma); // 20 / 65
    const std::size_t m = 400;
    const double mu = m * q;
    const double sd = std::sqrt(m * q * (1 - q));
    const int seeds = 300;
    double total = 0.0;
    int outside = 0;
    for (int s = 0; s < seeds; ++s) {
        const auto k = static_cast<double>(resample(ds, {gamma, PwsMode::resample, 1000u + s}, m).positives());
        total += k;
        outside += std::abs(k - mu) > 3 * sd;
    }
    EXPECT_NEAR(total / seeds, mu, 3 * sd / std::sqrt(seeds));
    EXPECT_LE(outside, 4); // expect ~0.8 at the 3-sigma rate
}

TEST(Equivalence, ExactForRandomDatasetsAndPredictors) {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0.001, 0.999);
    const auto bce = [](int y, double p) { return -(y * std::log(p) + (1 - y) * std::log(1 - p)); };
    for (int t = 0; t < 200; ++t) {
        const auto ds = random_small(rng);
        std::vector<double> pred(ds.rows());
        for (auto& p : pred) {
            p = u(rng);
        }
        for (double g : {1.0, 2.0, 7.0, 99.0}) {
            EXPECT_LE(expected_loss_equivalence_check(ds, g, pred, bce), 1e-12);
            EXPECT_LE(expected_loss_equivalence_check(ds, g, pred, bce, 37), 1e-12);
        }
    }
}

TEST(Equivalence, UnitGammaBothSidesEqualPlainCost) {
    const auto ds = with_labels({1, 0, 0, 1, 0});
    const std::vector<double> losses{0.3, 1.2, 0.05, 2.0, 0.7};
    const double plain = 0.3 + 1.2 + 0.05 + 2.0 + 0.7;
    EXPECT_NEAR(weighted_cost(ds, 1.0, losses), plain, 1e-15);
    EXPECT_NEAR(expected_resampled_loss(ds, 1.0, losses, ds.rows()), plain, 1e-14);
}

TEST(Equivalence, FourInstancesSquaredLossHandCheck) {
    // labels 1,0,0,1 with constant prediction 0.5: every squared loss is 0.25
    const auto ds = with_labels({1, 0, 0, 1});
    const std::vector<double> losses(4, 0.25);
    // weighted cost: 3 * 2 * 0.25 + 2 * 0.25 = 2
    EXPECT_DOUBLE_EQ(weighted_cost(ds, 3.0, losses), 2.0);
    // p = 1/8; one draw expects 0.25; twelve draws expect 3; rescaled by 8/12 gives 2
    EXPECT_DOUBLE_EQ(expected_resampled_loss(ds, 3.0, losses, 12), 3.0);
    EXPECT_LE(expected_loss_equivalence_check(ds, 3.0, losses, 12), 1e-15);

    // enumerate all 4^3 draw sequences for m = 3 with unequal losses
    const std::vector<double> l2{0.1, 0.2, 0.4, 0.8};
    const double pr[4] = {3.0 / 8, 1.0 / 8, 1.0 / 8, 3.0 / 8};
    double expect = 0.0;
    for (int a = 0; a < 4; ++a) {
        for (int b = 0; b < 4; ++b) {
            for (int c = 0; c < 4; ++c) {
                expect += pr[a] * pr[b] * pr[c] * (l2[a] + l2[b] + l2[c]);
            }
        }
    }
    EXPECT_NEAR(expected_resampled_loss(ds, 3.0, l2, 3), expect, 1e-15);
    EXPECT_NEAR(expect * 8.0 / 3.0, weighted_cost(ds, 3.0, l2), 1e-14);
}
