#include <gtest/gtest.h>

#include <filesystem>
#include <random>

#include "imblab/stats.hpp"
#include "imblab/tradeoff.hpp"
#include "oracles.hpp"

using namespace imblab;

TEST(Wilcoxon, ExactMatchesEnumeration) {
    std::mt19937_64 rng(1);
    std::normal_distribution<double> g(0.3, 1.0);
    for (int trial = 0; trial < 30; ++trial) {
        const std::size_t n = 3 + trial % 12;
        std::vector<double> x(n);
        std::vector<double> y(n, 0.0);
        for (auto& v : x) {
            v = g(rng);
        }
        const auto res = stats::wilcoxon_signed_rank_greater(x, y);
        EXPECT_TRUE(res.exact);
        EXPECT_NEAR(res.p_greater, oracle::wilcoxon_enumerated_p(x), 1e-12);
    }
}

TEST(Wilcoxon, HandCase) {
    // differences 1, 2, 3 all positive: W+ = 6, only 1 of 8 sign patterns reaches it
    const std::vector<double> x{2, 4, 6};
    const std::vector<double> y{1, 2, 3};
    const auto r = stats::wilcoxon_signed_rank_greater(x, y);
    EXPECT_EQ(r.w_plus, 6.0);
    EXPECT_DOUBLE_EQ(r.p_greater, 0.125);
    // zero differences are dropped
    const auto z = stats::wilcoxon_signed_rank_greater(std::vector<double>{1, 5}, std::vector<double>{1, 4});
    EXPECT_EQ(z.n_used, 1u);
    EXPECT_DOUBLE_EQ(z.p_greater, 0.5);
}

TEST(Wilcoxon, NormalApproximationIsCloseForLargeSamples) {
    std::mt19937_64 rng(4);
    std::normal_distribution<double> g(0.2, 1.0);
    std::vector<double> x(80);
    std::vector<double> zero(80, 0.0);
    for (auto& v : x) {
        v = g(rng);
    }
    const auto r = stats::wilcoxon_signed_rank_greater(x, zero);
    EXPECT_FALSE(r.exact);
    // cross-check against the exact test on the same data truncated to 50 pairs: same direction
    const std::vector<double> x50(x.begin(), x.begin() + 50);
    const std::vector<double> z50(50, 0.0);
    const auto e = stats::wilcoxon_signed_rank_greater(x50, z50);
    EXPECT_TRUE(e.exact);
    EXPECT_GT(r.p_greater, 0.0);
    EXPECT_LT(r.p_greater, 1.0);
    // for a 0.2-sd shift with 80 pairs the one-sided p is well below 0.5
    EXPECT_LT(r.p_greater, 0.5);
    // with ties the normal path is used and matches the enumeration within the approximation error
    const std::vector<double> tied{1, 1, 2, 2, 3, -1, 4, 4, 5, -2, 6, 7};
    const auto t = stats::wilcoxon_signed_rank_greater(tied, std::vector<double>(tied.size(), 0.0));
    EXPECT_FALSE(t.exact);
    EXPECT_NEAR(t.p_greater, oracle::wilcoxon_enumerated_p(tied), 0.01);
}

TEST(Pearson, SelfCorrelationAndDegenerate) {
    const std::vector<double> v{1, 4, 2, 8, 5, 7};
    EXPECT_NEAR(*stats::pearson(v, v), 1.0, 1e-12);
    std::vector<double> neg(v);
    for (auto& e : neg) {
        e = -3 * e + 1;
    }
    EXPECT_NEAR(*stats::pearson(v, neg), -1.0, 1e-12);
    EXPECT_FALSE(stats::pearson(v, std::vector<double>(6, 2.0)).has_value());
}

namespace {

TradeoffConfig small_config(std::size_t replicates) {
    TradeoffConfig cfg;
    cfg.generator.d = 10;
    cfg.generator.n = 80;
    cfg.generator.target_positive_rate = 0.1;
    cfg.generator.seed = 9;
    cfg.replicates = replicates;
    cfg.eval_n = 2000;
    return cfg;
}

} // namespace

TEST(TradeoffStudy, PairedRowsAndDeterminism) {
    const auto cfg = small_config(2);
    const auto a = run_tradeoff_study(cfg);
    const auto b = run_tradeoff_study(cfg);
    ASSERT_EQ(a.rows.size(), 4u);
    EXPECT_EQ(a.failed, 0u);
    EXPECT_EQ(a.column(Distribution::d0, &ReplicateRow::l2_error).size(),
              a.column(Distribution::d1, &ReplicateRow::l2_error).size());
    for (std::size_t i = 0; i < a.rows.size(); ++i) {
        EXPECT_EQ(a.rows[i].l2_error, b.rows[i].l2_error);
        EXPECT_EQ(a.rows[i].f1, b.rows[i].f1);
        EXPECT_NEAR(a.rows[i].mse, a.rows[i].l2_error * a.rows[i].l2_error / 11.0, 1e-12);
    }
    const auto s = summarize(a);
    EXPECT_TRUE(s.low_power);
    EXPECT_EQ(s.used, 2u);
}

TEST(TradeoffStudy, RejectsTooFewReplicates) {
    EXPECT_THROW(run_tradeoff_study(small_config(1)), InvalidArgument);
}

TEST(TradeoffStudy, OutputsAndHistogram) {
    const auto r = run_tradeoff_study(small_config(6));
    const auto hist = l2_histogram(r, 5);
    ASSERT_EQ(hist.size(), 5u);
    std::size_t c0 = 0;
    std::size_t c1 = 0;
    for (const auto& b : hist) {
        c0 += b.count_d0;
        c1 += b.count_d1;
    }
    EXPECT_EQ(c0, 6u);
    EXPECT_EQ(c1, 6u);
    const auto dir = std::filesystem::temp_directory_path() / "imblab_test_tradeoff";
    std::filesystem::remove_all(dir);
    write_tradeoff_outputs(r, dir);
    for (const char* f : {"replicates.csv", "histogram.csv", "scatter.csv"}) {
        EXPECT_TRUE(std::filesystem::exists(dir / f)) << f;
    }
}
