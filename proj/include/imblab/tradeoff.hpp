#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "imblab/common.hpp"
#include "imblab/dataio.hpp"
#include "imblab/linear_model.hpp"
#include "imblab/metrics.hpp"
#include "imblab/stats.hpp"

namespace imblab {

enum class Distribution { d0, d1 };

inline std::string_view to_string(Distribution d) { return d == Distribution::d0 ? "D0" : "D1"; }

struct ReplicateRow {
    std::size_t replicate = 0;
    Distribution dist = Distribution::d0;
    double l2_error = 0.0;
    double mse = 0.0;
    Metric f1;
};

struct TradeoffStudyResult {
    LogisticGroundTruth truth;
    std::vector<ReplicateRow> rows; // D0 and D1 row per successful replicate
    std::size_t replicates = 0;
    std::size_t failed = 0;
    std::vector<std::string> failures;

    std::vector<double> column(Distribution d, double ReplicateRow::*field) const {
        std::vector<double> out;
        for (const auto& r : rows) {
            if (r.dist == d) {
                out.push_back(r.*field);
            }
        }
        return out;
    }

    std::vector<double> f1_column(Distribution d) const {
        std::vector<double> out;
        for (const auto& r : rows) {
            if (r.dist == d) {
                // undefined F1 (no predicted or actual positives) scores zero
                out.push_back(r.f1.value_or(0.0));
            }
        }
        return out;
    }
};

struct TradeoffConfig {
    GeneratorConfig generator; // d, n, target rate, seed
    std::size_t replicates = 100;
    std::size_t eval_n = 10000;
    double balance = 0.5;
    LogisticFitConfig fit;
};

/// Paired synthetic study: for each replicate, fit logistic models on an
/// imbalanced D0 sample and a rebalanced D1 sample of the same size, then
/// score coefficient error against the ground truth and F1 on a fresh D0
/// evaluation sample shared by the pair.
inline TradeoffStudyResult run_tradeoff_study(const TradeoffConfig& cfg) {
    if (cfg.replicates < 2) {
        throw InvalidArgument("tradeoff study needs at least 2 replicates");
    }
    if (cfg.eval_n == 0) {
        throw InvalidArgument("eval_n must be positive");
    }
    TradeoffStudyResult res;
    res.replicates = cfg.replicates;
    res.truth = make_ground_truth(cfg.generator);
    const auto seed = cfg.generator.seed;
    for (std::size_t r = 0; r < cfg.replicates; ++r) {
        try {
            const auto d0 = sample_d0(res.truth, cfg.generator.n, combine_seed(seed, 3 * r + 1));
            const auto d1 =
                sample_d1(res.truth, cfg.generator.n, cfg.balance, combine_seed(seed, 3 * r + 2));
            const auto eval = sample_d0(res.truth, cfg.eval_n, combine_seed(seed, 3 * r + 3));
            std::vector<ReplicateRow> pair;
            for (auto [dist, ds] : {std::pair{Distribution::d0, &d0}, std::pair{Distribution::d1, &d1}}) {
                const auto fit = fit_logistic(WeightedDataset::uniform(*ds), cfg.fit);
                const auto rep = evaluate(eval, predict_logistic(fit.params, eval));
                pair.push_back({r, dist, coef_l2_error(fit.params, res.truth),
                                coef_mse(fit.params, res.truth), rep.f1});
            }
            res.rows.insert(res.rows.end(), pair.begin(), pair.end());
        } catch (const std::exception& e) {
            ++res.failed;
            res.failures.push_back("replicate " + std::to_string(r) + ": " + e.what());
        }
    }
    return res;
}

struct TradeoffSummary {
    std::size_t replicates = 0;
    std::size_t used = 0;
    std::size_t failed = 0;
    double mean_l2_d0 = 0.0;
    double mean_l2_d1 = 0.0;
    double mean_mse_d0 = 0.0;
    double mean_mse_d1 = 0.0;
    double mean_f1_d0 = 0.0;
    double mean_f1_d1 = 0.0;
    stats::WilcoxonResult l2_test;
    stats::WilcoxonResult f1_test;
    bool l2_worse_under_d1 = false;
    bool f1_better_under_d1 = false;
    bool low_power = false;
};

inline constexpr double kTradeoffAlpha = 0.01;
inline constexpr std::size_t kLowPowerReplicates = 10;

/// Means and one-sided paired Wilcoxon tests for both directional claims:
/// l2 error is larger under D1, and F1 is larger under D1 (each at p < 0.01).
inline TradeoffSummary summarize(const TradeoffStudyResult& r) {
    TradeoffSummary s;
    s.replicates = r.replicates;
    s.failed = r.failed;
    const auto l2_0 = r.column(Distribution::d0, &ReplicateRow::l2_error);
    const auto l2_1 = r.column(Distribution::d1, &ReplicateRow::l2_error);
    const auto mse_0 = r.column(Distribution::d0, &ReplicateRow::mse);
    const auto mse_1 = r.column(Distribution::d1, &ReplicateRow::mse);
    const auto f1_0 = r.f1_column(Distribution::d0);
    const auto f1_1 = r.f1_column(Distribution::d1);
    s.used = l2_0.size();
    s.mean_l2_d0 = stats::mean(l2_0);
    s.mean_l2_d1 = stats::mean(l2_1);
    s.mean_mse_d0 = stats::mean(mse_0);
    s.mean_mse_d1 = stats::mean(mse_1);
    s.mean_f1_d0 = stats::mean(f1_0);
    s.mean_f1_d1 = stats::mean(f1_1);
    s.l2_test = stats::wilcoxon_signed_rank_greater(l2_1, l2_0);
    s.f1_test = stats::wilcoxon_signed_rank_greater(f1_1, f1_0);
    s.l2_worse_under_d1 = s.mean_l2_d1 > s.mean_l2_d0 && s.l2_test.p_greater < kTradeoffAlpha;
    s.f1_better_under_d1 = s.mean_f1_d1 > s.mean_f1_d0 && s.f1_test.p_greater < kTradeoffAlpha;
    s.low_power = s.used < kLowPowerReplicates;
    return s;
}

struct HistogramBin {
    double lo = 0.0;
    double hi = 0.0;
    std::size_t count_d0 = 0;
    std::size_t count_d1 = 0;
};

/// Equal-width bins spanning both distributions' l2 errors.
inline std::vector<HistogramBin> l2_histogram(const TradeoffStudyResult& r, std::size_t bins = 20) {
    if (r.rows.empty() || bins == 0) {
        return {};
    }
    double lo = r.rows.front().l2_error;
    double hi = lo;
    for (const auto& row : r.rows) {
        lo = std::min(lo, row.l2_error);
        hi = std::max(hi, row.l2_error);
    }
    if (hi == lo) {
        hi = lo + 1.0;
    }
    const double width = (hi - lo) / static_cast<double>(bins);
    std::vector<HistogramBin> out(bins);
    for (std::size_t b = 0; b < bins; ++b) {
        out[b].lo = lo + width * static_cast<double>(b);
        out[b].hi = b + 1 == bins ? hi : lo + width * static_cast<double>(b + 1);
    }
    for (const auto& row : r.rows) {
        auto b = static_cast<std::size_t>((row.l2_error - lo) / width);
        b = std::min(b, bins - 1);
        (row.dist == Distribution::d0 ? out[b].count_d0 : out[b].count_d1)++;
    }
    return out;
}

inline void write_tradeoff_outputs(const TradeoffStudyResult& r, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    auto open = [&](const char* name) {
        std::ofstream f(dir / name, std::ios::binary | std::ios::trunc);
        if (!f) {
            throw std::runtime_error("cannot write " + (dir / name).string());
        }
        return f;
    };
    {
        auto f = open("replicates.csv");
        f << "replicate,distribution,l2_error,mse,f1\n";
        for (const auto& row : r.rows) {
            f << row.replicate << ',' << to_string(row.dist) << ',' << detail::format_double(row.l2_error)
              << ',' << detail::format_double(row.mse) << ','
              << (row.f1 ? detail::format_double(*row.f1) : std::string()) << '\n';
        }
    }
    {
        auto f = open("histogram.csv");
        f << "bin_lo,bin_hi,count_D0,count_D1\n";
        for (const auto& b : l2_histogram(r)) {
            f << detail::format_double(b.lo) << ',' << detail::format_double(b.hi) << ','
              << b.count_d0 << ',' << b.count_d1 << '\n';
        }
    }
    {
        auto f = open("scatter.csv");
        f << "f1,mse,distribution\n";
        for (const auto& row : r.rows) {
            f << detail::format_double(row.f1.value_or(0.0)) << ',' << detail::format_double(row.mse)
              << ',' << to_string(row.dist) << '\n';
        }
    }
}

} // namespace imblab
