#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "imblab/common.hpp"
#include "imblab/dataset.hpp"
#include "imblab/reweight.hpp"

namespace imblab {

struct GbdtConfig {
    std::size_t n_estimators = 100;
    std::size_t max_depth = 5;
    std::size_t max_leaves = 31;
    double learning_rate = 0.1;
    std::size_t min_child_samples = 5;

    void validate() const {
        if (n_estimators == 0 || max_depth == 0 || min_child_samples == 0) {
            throw InvalidArgument("gbdt: n_estimators, max_depth, min_child_samples must be positive");
        }
        if (max_leaves < 2) {
            throw InvalidArgument("gbdt: max_leaves must be >= 2");
        }
        if (!(learning_rate > 0.0 && learning_rate <= 1.0)) {
            throw InvalidArgument("gbdt: learning_rate must lie in (0, 1]");
        }
    }
};

struct TreeNode {
    int feature = -1; // -1 marks a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double value = 0.0;
    int depth = 0;

    bool is_leaf() const { return feature < 0; }
};

/// Regression tree stored as a flat node array; node 0 is the root.
/// Rows with x[feature] <= threshold go left.
struct RegressionTree {
    std::vector<TreeNode> nodes;

    double predict(std::span<const double> x) const {
        int id = 0;
        while (!nodes[id].is_leaf()) {
            const auto& n = nodes[id];
            id = x[n.feature] <= n.threshold ? n.left : n.right;
        }
        return nodes[id].value;
    }

    std::size_t leaves() const {
        return static_cast<std::size_t>(
            std::count_if(nodes.begin(), nodes.end(), [](const TreeNode& n) { return n.is_leaf(); }));
    }

    /// Edges on the longest root-to-leaf path.
    std::size_t depth() const {
        int m = 0;
        for (const auto& n : nodes) {
            m = std::max(m, n.depth);
        }
        return static_cast<std::size_t>(m);
    }
};

struct BoostedModel {
    double base_score = 0.0; // log-odds
    double learning_rate = 0.1;
    std::size_t n_features = 0;
    std::vector<RegressionTree> trees;

    double raw_score(std::span<const double> x) const {
        double s = 0.0;
        for (const auto& t : trees) {
            s += t.predict(x);
        }
        return base_score + learning_rate * s;
    }
};

struct GbdtFitResult {
    BoostedModel model;
    // Weighted training logistic loss before the first tree and after each round.
    std::vector<double> loss_trace;
};

inline constexpr double kNewtonFloor = 1e-12;
inline constexpr double kMinRelativeGain = 1e-12;
// Gains within this relative distance are ties and go to the earlier candidate.
inline constexpr double kGainTieTolerance = 1e-9;

namespace detail {

struct SortedEntry {
    double value;
    std::uint32_t row;
};

struct SplitCandidate {
    double gain = 0.0;
    int feature = -1;
    double threshold = 0.0;
    std::size_t left_count = 0;

    bool valid() const { return feature >= 0; }
};

inline bool clearly_greater(double a, double b) {
    return a > b + kGainTieTolerance * std::abs(b);
}

struct GrowingLeaf {
    int node = 0;
    std::size_t begin = 0;
    std::size_t end = 0;
    SplitCandidate split;
};

inline double weighted_logloss(std::span<const double> raw, const WeightedDataset& wds) {
    double s = 0.0;
    for (std::size_t i = 0; i < raw.size(); ++i) {
        s += wds.weights[i] * (softplus(raw[i]) - wds.base.label(i) * raw[i]);
    }
    return s;
}

/// Per-fit split-search workspace. Each feature keeps its rows sorted by
/// value; a node owns the same [begin, end) range in every feature array and
/// a split stably partitions that range, so order within children is kept.
class TreeBuilder {
public:
    TreeBuilder(const WeightedDataset& wds, const GbdtConfig& cfg) : wds_(wds), cfg_(cfg) {
        const auto& ds = wds.base;
        n_ = ds.rows();
        d_ = ds.cols();
        presorted_.resize(d_);
        for (std::size_t f = 0; f < d_; ++f) {
            auto& col = presorted_[f];
            col.resize(n_);
            for (std::size_t i = 0; i < n_; ++i) {
                col[i] = {ds.at(i, f), static_cast<std::uint32_t>(i)};
            }
            std::stable_sort(col.begin(), col.end(), [](const SortedEntry& a, const SortedEntry& b) {
                return a.value < b.value;
            });
        }
        work_.resize(d_);
        scratch_.resize(n_);
        goes_left_.resize(n_);
        wr_.resize(n_);
        w_.resize(n_);
        h_.resize(n_);
    }

    /// Grows one tree on residuals y - sigmoid(raw); leaves hold Newton values.
    /// Each leaf's rows receive `delta = learning_rate * leaf value` in `raw`.
    RegressionTree grow(std::vector<double>& raw) {
        for (std::size_t i = 0; i < n_; ++i) {
            const double p = sigmoid(raw[i]);
            const double w = wds_.weights[i];
            w_[i] = w;
            wr_[i] = w * (wds_.base.label(i) - p);
            h_[i] = w * p * (1.0 - p);
        }
        for (std::size_t f = 0; f < d_; ++f) {
            work_[f] = presorted_[f];
        }

        RegressionTree tree;
        tree.nodes.push_back(TreeNode{});
        std::vector<GrowingLeaf> open;
        std::vector<GrowingLeaf> closed;
        GrowingLeaf root{0, 0, n_, {}};
        root.split = best_split(root.begin, root.end);
        open.push_back(root);
        std::size_t leaves = 1;

        while (leaves < cfg_.max_leaves) {
            // best-first: highest gain, earliest node on ties
            int pick = -1;
            for (std::size_t k = 0; k < open.size(); ++k) {
                const auto& c = open[k];
                if (!c.split.valid() || tree.nodes[c.node].depth >= static_cast<int>(cfg_.max_depth)) {
                    continue;
                }
                if (pick < 0 || clearly_greater(c.split.gain, open[pick].split.gain)) {
                    pick = static_cast<int>(k);
                }
            }
            if (pick < 0) {
                break;
            }
            const GrowingLeaf leaf = open[pick];
            open.erase(open.begin() + pick);

            const std::size_t mid = partition(leaf);
            const int depth = tree.nodes[leaf.node].depth + 1;
            const int left_id = static_cast<int>(tree.nodes.size());
            tree.nodes.push_back(TreeNode{.depth = depth});
            const int right_id = static_cast<int>(tree.nodes.size());
            tree.nodes.push_back(TreeNode{.depth = depth});
            auto& parent = tree.nodes[leaf.node];
            parent.feature = leaf.split.feature;
            parent.threshold = leaf.split.threshold;
            parent.left = left_id;
            parent.right = right_id;

            GrowingLeaf l{left_id, leaf.begin, mid, {}};
            GrowingLeaf r{right_id, mid, leaf.end, {}};
            if (depth < static_cast<int>(cfg_.max_depth)) {
                l.split = best_split(l.begin, l.end);
                r.split = best_split(r.begin, r.end);
            }
            // keep open leaves in node-id order for deterministic tie-breaking
            open.push_back(l);
            open.push_back(r);
            std::sort(open.begin(), open.end(),
                      [](const GrowingLeaf& a, const GrowingLeaf& b) { return a.node < b.node; });
            ++leaves;
        }

        for (const auto& leaf : open) {
            double g = 0.0;
            double h = 0.0;
            const auto& seg = work_[0];
            for (std::size_t k = leaf.begin; k < leaf.end; ++k) {
                const auto row = seg[k].row;
                g += wr_[row];
                h += h_[row];
            }
            const double value = g / std::max(h, kNewtonFloor);
            tree.nodes[leaf.node].value = value;
            const double delta = cfg_.learning_rate * value;
            for (std::size_t k = leaf.begin; k < leaf.end; ++k) {
                raw[seg[k].row] += delta;
            }
        }
        return tree;
    }

private:
    SplitCandidate best_split(std::size_t begin, std::size_t end) const {
        SplitCandidate best;
        const std::size_t count = end - begin;
        const std::size_t min_child = cfg_.min_child_samples;
        if (count < 2 * min_child || count < 2) {
            return best;
        }
        double s_total = 0.0;
        double w_total = 0.0;
        double ss_total = 0.0;
        {
            const auto& seg = work_[0];
            for (std::size_t k = begin; k < end; ++k) {
                const auto row = seg[k].row;
                s_total += wr_[row];
                w_total += w_[row];
                ss_total += wr_[row] * wr_[row] / w_[row];
            }
        }
        const double parent_score = s_total * s_total / w_total;
        // Gains at this scale are rounding noise (e.g. a node whose residuals
        // are all equal); the cutoff scales with the weights, so it is
        // weight-scale invariant.
        best.gain = kMinRelativeGain * ss_total;
        for (std::size_t f = 0; f < d_; ++f) {
            const auto& seg = work_[f];
            if (seg[begin].value == seg[end - 1].value) {
                continue;
            }
            double s_left = 0.0;
            double w_left = 0.0;
            for (std::size_t k = begin; k + 1 < end; ++k) {
                const auto row = seg[k].row;
                s_left += wr_[row];
                w_left += w_[row];
                const std::size_t n_left = k - begin + 1;
                if (seg[k].value == seg[k + 1].value) {
                    continue;
                }
                if (n_left < min_child) {
                    continue;
                }
                if (count - n_left < min_child) {
                    break;
                }
                const double s_right = s_total - s_left;
                const double w_right = w_total - w_left;
                if (!(w_left > 0.0) || !(w_right > 0.0)) {
                    continue;
                }
                const double gain =
                    s_left * s_left / w_left + s_right * s_right / w_right - parent_score;
                // ties keep the lowest feature, then the lowest threshold
                if (clearly_greater(gain, best.gain)) {
                    best.gain = gain;
                    best.feature = static_cast<int>(f);
                    best.threshold = 0.5 * (seg[k].value + seg[k + 1].value);
                    // midpoint may round onto the upper value; fall back to the lower one
                    if (!(best.threshold < seg[k + 1].value)) {
                        best.threshold = seg[k].value;
                    }
                    best.left_count = n_left;
                }
            }
        }
        return best;
    }

    std::size_t partition(const GrowingLeaf& leaf) {
        const int f = leaf.split.feature;
        const double thr = leaf.split.threshold;
        {
            const auto& seg = work_[static_cast<std::size_t>(f)];
            for (std::size_t k = leaf.begin; k < leaf.end; ++k) {
                goes_left_[seg[k].row] = seg[k].value <= thr ? 1 : 0;
            }
        }
        std::size_t mid = leaf.begin;
        for (std::size_t g = 0; g < d_; ++g) {
            auto& seg = work_[g];
            std::size_t out = leaf.begin;
            std::size_t spill = 0;
            for (std::size_t k = leaf.begin; k < leaf.end; ++k) {
                if (goes_left_[seg[k].row]) {
                    seg[out++] = seg[k];
                } else {
                    scratch_[spill++] = seg[k];
                }
            }
            std::copy(scratch_.begin(), scratch_.begin() + static_cast<std::ptrdiff_t>(spill),
                      seg.begin() + static_cast<std::ptrdiff_t>(out));
            mid = out;
        }
        return mid;
    }

    const WeightedDataset& wds_;
    GbdtConfig cfg_;
    std::size_t n_ = 0;
    std::size_t d_ = 0;
    std::vector<std::vector<SortedEntry>> presorted_;
    std::vector<std::vector<SortedEntry>> work_;
    std::vector<SortedEntry> scratch_;
    std::vector<std::uint8_t> goes_left_;
    std::vector<double> wr_;
    std::vector<double> w_;
    std::vector<double> h_;
};

} // namespace detail

/// Gradient-boosted trees on the weighted logistic loss.
///
/// Starts from the log-odds of the weighted positive rate. Each round grows
/// one tree best-first on the residuals y - sigmoid(F) using the weighted
/// variance-reduction gain, sets each leaf to the Newton step
/// sum(w r) / max(sum(w p (1 - p)), 1e-12), and adds learning_rate * tree to F.
inline GbdtFitResult fit_gbdt(const WeightedDataset& wds, const GbdtConfig& cfg) {
    cfg.validate();
    const auto& ds = wds.base;
    double w_pos = 0.0;
    double w_all = 0.0;
    for (std::size_t i = 0; i < ds.rows(); ++i) {
        w_all += wds.weights[i];
        if (ds.label(i) == 1) {
            w_pos += wds.weights[i];
        }
    }
    if (w_pos <= 0.0 || w_pos >= w_all) {
        throw InvalidArgument("fit_gbdt: both classes must be present");
    }
    GbdtFitResult res;
    auto& model = res.model;
    model.base_score = std::log(w_pos / (w_all - w_pos));
    model.learning_rate = cfg.learning_rate;
    model.n_features = ds.cols();

    std::vector<double> raw(ds.rows(), model.base_score);
    res.loss_trace.push_back(detail::weighted_logloss(raw, wds));
    detail::TreeBuilder builder(wds, cfg);
    for (std::size_t t = 0; t < cfg.n_estimators; ++t) {
        model.trees.push_back(builder.grow(raw));
        res.loss_trace.push_back(detail::weighted_logloss(raw, wds));
    }
    return res;
}

inline std::vector<double> predict_gbdt(const BoostedModel& model, const Dataset& ds) {
    if (ds.cols() != model.n_features) {
        throw InvalidArgument("predict_gbdt: model expects " + std::to_string(model.n_features) +
                              " features, data has " + std::to_string(ds.cols()));
    }
    std::vector<double> s(ds.rows());
    for (std::size_t i = 0; i < ds.rows(); ++i) {
        s[i] = sigmoid(model.raw_score(ds.row(i)));
    }
    return s;
}

/// Text format: a `gbdt` header line, then one line per node:
/// `tree node kind feature threshold value left right` with kind `split`/`leaf`.
inline void save_model(const BoostedModel& model, std::ostream& out) {
    out.precision(17);
    out << "gbdt " << model.n_features << ' ' << model.trees.size() << ' ' << model.base_score
        << ' ' << model.learning_rate << '\n';
    for (std::size_t t = 0; t < model.trees.size(); ++t) {
        const auto& nodes = model.trees[t].nodes;
        for (std::size_t id = 0; id < nodes.size(); ++id) {
            const auto& n = nodes[id];
            out << t << ' ' << id << ' ' << (n.is_leaf() ? "leaf" : "split") << ' ' << n.feature
                << ' ' << n.threshold << ' ' << n.value << ' ' << n.left << ' ' << n.right << '\n';
        }
    }
}

inline BoostedModel load_model(std::istream& in) {
    BoostedModel model;
    std::string tag;
    std::size_t n_trees = 0;
    if (!(in >> tag >> model.n_features >> n_trees >> model.base_score >> model.learning_rate) ||
        tag != "gbdt") {
        throw InvalidArgument("load_model: bad header");
    }
    model.trees.resize(n_trees);
    std::string line;
    std::getline(in, line);
    std::vector<std::size_t> depth_of;
    while (std::getline(in, line)) {
        if (line.empty()) {
            continue;
        }
        std::istringstream ls(line);
        std::size_t t = 0;
        std::size_t id = 0;
        std::string kind;
        TreeNode n;
        if (!(ls >> t >> id >> kind >> n.feature >> n.threshold >> n.value >> n.left >> n.right) ||
            t >= n_trees || (kind != "leaf" && kind != "split")) {
            throw InvalidArgument("load_model: bad node line '" + line + "'");
        }
        auto& nodes = model.trees[t].nodes;
        if (id != nodes.size()) {
            throw InvalidArgument("load_model: nodes out of order in tree " + std::to_string(t));
        }
        nodes.push_back(n);
    }
    for (auto& tree : model.trees) {
        for (std::size_t id = 0; id < tree.nodes.size(); ++id) {
            const auto& n = tree.nodes[id];
            if (!n.is_leaf()) {
                tree.nodes[static_cast<std::size_t>(n.left)].depth = n.depth + 1;
                tree.nodes[static_cast<std::size_t>(n.right)].depth = n.depth + 1;
            }
        }
    }
    return model;
}

} // namespace imblab
