#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

#include "imblab/common.hpp"
#include "imblab/dataset.hpp"

namespace imblab {

struct ConfusionCounts {
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t fn = 0;
    std::size_t tn = 0;

    std::size_t total() const { return tp + fp + fn + tn; }
};

/// Undefined metrics are std::nullopt, never NaN.
using Metric = std::optional<double>;

struct MetricsReport {
    Metric f1;
    Metric precision;
    Metric recall;
    Metric auc;
    Metric error;
};

inline constexpr double kDefaultThreshold = 0.5;

/// A score counts as a positive prediction iff score >= threshold.
template <typename Label>
ConfusionCounts confusion(std::span<const Label> labels, std::span<const double> scores,
                          double threshold = kDefaultThreshold) {
    if (labels.size() != scores.size()) {
        throw InvalidArgument("confusion: labels and scores differ in length");
    }
    if (labels.empty()) {
        throw InvalidArgument("confusion: no instances");
    }
    ConfusionCounts c;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const bool pred = scores[i] >= threshold;
        const bool truth = labels[i] != 0;
        if (truth) {
            pred ? ++c.tp : ++c.fn;
        } else {
            pred ? ++c.fp : ++c.tn;
        }
    }
    return c;
}

inline ConfusionCounts confusion(const std::vector<int>& labels, const std::vector<double>& scores,
                                 double threshold = kDefaultThreshold) {
    return confusion(std::span<const int>(labels), std::span<const double>(scores), threshold);
}

inline ConfusionCounts confusion(const std::vector<std::uint8_t>& labels, const std::vector<double>& scores,
                                 double threshold = kDefaultThreshold) {
    return confusion(std::span<const std::uint8_t>(labels), std::span<const double>(scores), threshold);
}

/// tp / (tp + (fp + fn) / 2); undefined when tp + fp + fn = 0.
inline Metric f1(const ConfusionCounts& c) {
    const std::size_t denom = c.tp + c.fp + c.fn;
    if (denom == 0) {
        return std::nullopt;
    }
    return static_cast<double>(c.tp) /
           (static_cast<double>(c.tp) + 0.5 * static_cast<double>(c.fp + c.fn));
}

inline Metric precision(const ConfusionCounts& c) {
    if (c.tp + c.fp == 0) {
        return std::nullopt;
    }
    return static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
}

inline Metric recall(const ConfusionCounts& c) {
    if (c.tp + c.fn == 0) {
        return std::nullopt;
    }
    return static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
}

inline Metric error(const ConfusionCounts& c) {
    if (c.total() == 0) {
        return std::nullopt;
    }
    return static_cast<double>(c.fp + c.fn) / static_cast<double>(c.total());
}

inline Metric accuracy(const ConfusionCounts& c) {
    if (c.total() == 0) {
        return std::nullopt;
    }
    return static_cast<double>(c.tp + c.tn) / static_cast<double>(c.total());
}

/// ROC AUC as the Mann-Whitney statistic: the fraction of (positive, negative)
/// pairs ranked correctly, ties counting one half. Sort-based, O(n log n).
template <typename Label>
Metric auc(std::span<const Label> labels, std::span<const double> scores) {
    if (labels.size() != scores.size()) {
        throw InvalidArgument("auc: labels and scores differ in length");
    }
    const std::size_t n = labels.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
    double n_pos = 0.0;
    double n_neg = 0.0;
    double pos_rank_sum = 0.0;
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j < n && scores[order[j]] == scores[order[i]]) {
            ++j;
        }
        // average 1-based rank of the tie block [i, j)
        const double rank = 0.5 * static_cast<double>(i + 1 + j);
        for (std::size_t k = i; k < j; ++k) {
            if (labels[order[k]] != 0) {
                n_pos += 1.0;
                pos_rank_sum += rank;
            } else {
                n_neg += 1.0;
            }
        }
        i = j;
    }
    if (n_pos == 0.0 || n_neg == 0.0) {
        return std::nullopt;
    }
    return (pos_rank_sum - n_pos * (n_pos + 1.0) / 2.0) / (n_pos * n_neg);
}

inline Metric auc(const std::vector<int>& labels, const std::vector<double>& scores) {
    return auc(std::span<const int>(labels), std::span<const double>(scores));
}

inline MetricsReport evaluate(const Dataset& ds, std::span<const double> scores,
                              double threshold = kDefaultThreshold) {
    const auto& y = ds.labels();
    const std::span<const std::uint8_t> labels(y);
    const auto c = confusion(labels, scores, threshold);
    return {f1(c), precision(c), recall(c), auc(labels, scores), error(c)};
}

inline double coef_l2_error(const LogisticParams& est, const LogisticParams& truth) {
    if (est.dim() != truth.dim()) {
        throw InvalidArgument("coefficient vectors differ in dimension");
    }
    double s = 0.0;
    for (std::size_t j = 0; j < est.dim(); ++j) {
        const double e = est.omega[j] - truth.omega[j];
        s += e * e;
    }
    const double e0 = est.omega0 - truth.omega0;
    s += e0 * e0;
    return std::sqrt(s);
}

/// Squared l2 error averaged over the d + 1 coefficients.
inline double coef_mse(const LogisticParams& est, const LogisticParams& truth) {
    const double l2 = coef_l2_error(est, truth);
    return l2 * l2 / static_cast<double>(est.dim() + 1);
}

} // namespace imblab
