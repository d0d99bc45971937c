#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <string_view>
#include <vector>

#include "imblab/common.hpp"
#include "imblab/dataset.hpp"

namespace imblab {

enum class PwsMode { weighted_cost, resample };

inline std::string_view to_string(PwsMode m) {
    return m == PwsMode::weighted_cost ? "weighted_cost" : "resample";
}

/// Positive weight scalar and the mechanism that applies it.
struct PwsConfig {
    double gamma = 1.0;
    PwsMode mode = PwsMode::weighted_cost;
    std::uint64_t seed = 0;

    void validate() const {
        if (!std::isfinite(gamma) || gamma < 1.0) {
            throw InvalidArgument("PWS gamma must be finite and >= 1");
        }
    }
};

struct WeightedDataset {
    Dataset base;
    std::vector<double> weights;

    WeightedDataset() = default;
    WeightedDataset(Dataset ds, std::vector<double> w) : base(std::move(ds)), weights(std::move(w)) {
        if (weights.size() != base.rows()) {
            throw InvalidArgument("weight count does not match row count");
        }
        for (double v : weights) {
            if (!(v > 0.0) || !std::isfinite(v)) {
                throw InvalidArgument("instance weights must be positive and finite");
            }
        }
    }

    /// Unit weights.
    static WeightedDataset uniform(Dataset ds) {
        std::vector<double> w(ds.rows(), 1.0);
        return {std::move(ds), std::move(w)};
    }

    std::size_t rows() const { return base.rows(); }
};

/// Cost-sensitive weights: gamma for positives, 1 for negatives.
inline WeightedDataset apply_weights(const Dataset& ds, const PwsConfig& cfg) {
    cfg.validate();
    std::vector<double> w(ds.rows());
    for (std::size_t i = 0; i < ds.rows(); ++i) {
        w[i] = ds.label(i) == 1 ? cfg.gamma : 1.0;
    }
    return {ds, std::move(w)};
}

/// Per-draw normalizing constant p = 1 / (n_neg + gamma * n_pos).
inline double resample_base_probability(std::size_t n_neg, std::size_t n_pos, double gamma) {
    return 1.0 / (static_cast<double>(n_neg) + gamma * static_cast<double>(n_pos));
}

/// Per-instance draw probabilities: p for negatives, gamma * p for positives.
inline std::vector<double> resample_probabilities(const Dataset& ds, double gamma) {
    const double p = resample_base_probability(ds.negatives(), ds.positives(), gamma);
    std::vector<double> probs(ds.rows());
    for (std::size_t i = 0; i < ds.rows(); ++i) {
        probs[i] = ds.label(i) == 1 ? gamma * p : p;
    }
    return probs;
}

/// Draws indices i.i.d. from a discrete distribution by cumulative inversion.
class WeightedIndexSampler {
public:
    explicit WeightedIndexSampler(std::span<const double> probs) : cumulative_(probs.size()) {
        double acc = 0.0;
        for (std::size_t i = 0; i < probs.size(); ++i) {
            acc += probs[i];
            cumulative_[i] = acc;
        }
        total_ = acc;
    }

    template <typename Rng>
    std::size_t operator()(Rng& rng) const {
        std::uniform_real_distribution<double> unif(0.0, total_);
        const double u = unif(rng);
        auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
        if (it == cumulative_.end()) {
            --it;
        }
        return static_cast<std::size_t>(it - cumulative_.begin());
    }

private:
    std::vector<double> cumulative_;
    double total_ = 0.0;
};

/// m draws with replacement, positives gamma times as likely per draw.
/// m = 0 selects m = n.
inline std::vector<std::size_t> resample_indices(const Dataset& ds, const PwsConfig& cfg,
                                                 std::size_t m = 0) {
    cfg.validate();
    if (ds.rows() == 0) {
        throw InvalidArgument("resample: empty dataset");
    }
    if (m == 0) {
        m = ds.rows();
    }
    const auto probs = resample_probabilities(ds, cfg.gamma);
    const WeightedIndexSampler sampler(probs);
    std::mt19937_64 rng(cfg.seed);
    std::vector<std::size_t> idx(m);
    for (auto& i : idx) {
        i = sampler(rng);
    }
    return idx;
}

inline Dataset resample(const Dataset& ds, const PwsConfig& cfg, std::size_t m = 0) {
    const auto idx = resample_indices(ds, cfg, m);
    return ds.select(idx);
}

/// Weighted cost: sum of gamma * loss over positives plus loss over negatives.
inline double weighted_cost(const Dataset& ds, double gamma, std::span<const double> losses) {
    double s = 0.0;
    for (std::size_t i = 0; i < ds.rows(); ++i) {
        s += (ds.label(i) == 1 ? gamma : 1.0) * losses[i];
    }
    return s;
}

/// Expected total loss of m resampled draws, computed analytically.
inline double expected_resampled_loss(const Dataset& ds, double gamma, std::span<const double> losses,
                                      std::size_t m) {
    const auto probs = resample_probabilities(ds, gamma);
    double per_draw = 0.0;
    for (std::size_t i = 0; i < ds.rows(); ++i) {
        per_draw += probs[i] * losses[i];
    }
    return static_cast<double>(m) * per_draw;
}

/// Relative gap between the rescaled expected resampled loss and the weighted
/// cost, for per-instance losses of some fixed predictor. Absolute gap when the
/// weighted cost is zero.
inline double expected_loss_equivalence_check(const Dataset& ds, double gamma,
                                              std::span<const double> losses, std::size_t m = 0) {
    if (losses.size() != ds.rows()) {
        throw InvalidArgument("loss vector length does not match dataset");
    }
    if (m == 0) {
        m = ds.rows();
    }
    const double scale =
        (static_cast<double>(ds.negatives()) + gamma * static_cast<double>(ds.positives())) /
        static_cast<double>(m);
    const double resampled = expected_resampled_loss(ds, gamma, losses, m) * scale;
    const double cost = weighted_cost(ds, gamma, losses);
    const double gap = std::abs(resampled - cost);
    return cost != 0.0 ? gap / std::abs(cost) : gap;
}

/// Overload taking a loss l(y, yhat) and predictor outputs.
inline double expected_loss_equivalence_check(const Dataset& ds, double gamma,
                                              std::span<const double> predictions,
                                              const std::function<double(int, double)>& loss,
                                              std::size_t m = 0) {
    std::vector<double> losses(ds.rows());
    for (std::size_t i = 0; i < ds.rows(); ++i) {
        losses[i] = loss(ds.label(i), predictions[i]);
    }
    return expected_loss_equivalence_check(ds, gamma, losses, m);
}

} // namespace imblab
