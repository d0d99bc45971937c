#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

#include "imblab/common.hpp"

namespace imblab::stats {

inline double mean(std::span<const double> x) {
    if (x.empty()) {
        return 0.0;
    }
    return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

/// Pearson correlation; undefined when either input is constant.
inline std::optional<double> pearson(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) {
        throw InvalidArgument("pearson: length mismatch");
    }
    if (x.size() < 2) {
        return std::nullopt;
    }
    const double mx = mean(x);
    const double my = mean(y);
    double sxy = 0.0;
    double sxx = 0.0;
    double syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = x[i] - mx;
        const double dy = y[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0.0 || syy == 0.0) {
        return std::nullopt;
    }
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

/// Average ranks (1-based), ties sharing the mean rank.
inline std::vector<double> average_ranks(std::span<const double> v) {
    const std::size_t n = v.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> ranks(n);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j < n && v[order[j]] == v[order[i]]) {
            ++j;
        }
        const double r = 0.5 * static_cast<double>(i + 1 + j);
        for (std::size_t k = i; k < j; ++k) {
            ranks[order[k]] = r;
        }
        i = j;
    }
    return ranks;
}

struct WilcoxonResult {
    std::size_t n_used = 0; // pairs with non-zero difference
    double w_plus = 0.0;    // rank sum of positive differences
    double z = 0.0;
    double p_greater = 1.0; // one-sided p for median(after - before) > 0
    bool exact = false;
};

/// Paired one-sided Wilcoxon signed-rank test of H1: x - y tends to be > 0.
/// Zero differences are dropped. Exact null distribution when there are at
/// most 50 pairs and no tied magnitudes; otherwise the normal approximation
/// with tie-corrected variance and continuity correction.
inline WilcoxonResult wilcoxon_signed_rank_greater(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) {
        throw InvalidArgument("wilcoxon: length mismatch");
    }
    std::vector<double> diff;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double d = x[i] - y[i];
        if (d != 0.0) {
            diff.push_back(d);
        }
    }
    WilcoxonResult res;
    res.n_used = diff.size();
    if (diff.empty()) {
        return res;
    }
    std::vector<double> mag(diff.size());
    for (std::size_t i = 0; i < diff.size(); ++i) {
        mag[i] = std::abs(diff[i]);
    }
    const auto ranks = average_ranks(mag);
    for (std::size_t i = 0; i < diff.size(); ++i) {
        if (diff[i] > 0.0) {
            res.w_plus += ranks[i];
        }
    }
    const auto n = static_cast<double>(diff.size());
    const double mu = n * (n + 1.0) / 4.0;
    double var = n * (n + 1.0) * (2.0 * n + 1.0) / 24.0;
    bool ties = false;
    {
        std::vector<double> sorted = mag;
        std::sort(sorted.begin(), sorted.end());
        std::size_t i = 0;
        while (i < sorted.size()) {
            std::size_t j = i;
            while (j < sorted.size() && sorted[j] == sorted[i]) {
                ++j;
            }
            const auto t = static_cast<double>(j - i);
            if (t > 1.0) {
                ties = true;
                var -= (t * t * t - t) / 48.0;
            }
            i = j;
        }
    }
    res.z = var > 0.0 ? (res.w_plus - mu) / std::sqrt(var) : 0.0;

    if (!ties && diff.size() <= 50) {
        // counts[s] = number of sign patterns with positive rank sum s
        const std::size_t m = diff.size();
        const std::size_t max_sum = m * (m + 1) / 2;
        std::vector<double> counts(max_sum + 1, 0.0);
        counts[0] = 1.0;
        for (std::size_t r = 1; r <= m; ++r) {
            for (std::size_t s = max_sum; s >= r; --s) {
                counts[s] += counts[s - r];
            }
        }
        const auto w = static_cast<std::size_t>(std::llround(res.w_plus));
        double tail = 0.0;
        for (std::size_t s = w; s <= max_sum; ++s) {
            tail += counts[s];
        }
        res.p_greater = tail / std::ldexp(1.0, static_cast<int>(m));
        res.exact = true;
    } else if (var > 0.0) {
        res.p_greater = 1.0 - normal_cdf((res.w_plus - mu - 0.5) / std::sqrt(var));
    }
    return res;
}

} // namespace imblab::stats
