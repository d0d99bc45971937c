#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "imblab/common.hpp"
#include "imblab/dataset.hpp"
#include "imblab/reweight.hpp"

namespace imblab {

enum class BatchNormPlacement { none, after_input, every_layer };

inline std::string_view to_string(BatchNormPlacement b) {
    switch (b) {
    case BatchNormPlacement::none:
        return "none";
    case BatchNormPlacement::after_input:
        return "after_input";
    case BatchNormPlacement::every_layer:
        return "every_layer";
    }
    return "none";
}

struct MlpConfig {
    std::size_t hidden_size = 50;
    std::size_t n_layers = 1;
    double init_scale = 1.0;
    BatchNormPlacement batchnorm = BatchNormPlacement::none;
    double learning_rate = 1e-2;
    double momentum = 0.9;
    std::size_t batch_size = 128;
    std::size_t epochs = 30;
    std::uint64_t seed = 0;

    void validate() const {
        if (hidden_size == 0) {
            throw InvalidArgument("mlp: hidden_size must be positive");
        }
        if (n_layers != 1 && n_layers != 2) {
            throw InvalidArgument("mlp: n_layers must be 1 or 2");
        }
        if (!(init_scale > 0.0) || !std::isfinite(init_scale)) {
            throw InvalidArgument("mlp: init_scale must be positive and finite");
        }
        if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
            throw InvalidArgument("mlp: learning_rate must be positive");
        }
        if (!(momentum >= 0.0 && momentum < 1.0)) {
            throw InvalidArgument("mlp: momentum must lie in [0, 1)");
        }
        if (batch_size == 0 || epochs == 0) {
            throw InvalidArgument("mlp: batch_size and epochs must be positive");
        }
    }
};

inline constexpr double kBatchNormEps = 1e-5;
inline constexpr double kBatchNormMomentum = 0.9;

struct DenseLayer {
    Eigen::MatrixXd weight; // out x in
    Eigen::VectorXd bias;
};

struct BatchNormSite {
    Eigen::VectorXd scale;
    Eigen::VectorXd shift;
    Eigen::VectorXd running_mean;
    Eigen::VectorXd running_var;

    explicit BatchNormSite(Eigen::Index width = 0)
        : scale(Eigen::VectorXd::Ones(width)), shift(Eigen::VectorXd::Zero(width)),
          running_mean(Eigen::VectorXd::Zero(width)), running_var(Eigen::VectorXd::Ones(width)) {}
};

/// ReLU network with one or two hidden layers and a single output logit.
///
/// Batch-norm sites sit on the input (`after_input`) or after every hidden
/// linear-ReLU block (`every_layer`). Activations are stored column-wise:
/// one column per instance.
struct MlpModel {
    std::size_t n_features = 0;
    BatchNormPlacement batchnorm = BatchNormPlacement::none;
    std::vector<DenseLayer> layers; // hidden layers then the output layer
    std::vector<BatchNormSite> norms;
    bool training = true;

    std::size_t hidden_layers() const { return layers.size() - 1; }

    /// Number of scalars across all trainable parameters.
    std::size_t parameter_count() const {
        std::size_t n = 0;
        for (const auto& l : layers) {
            n += static_cast<std::size_t>(l.weight.size() + l.bias.size());
        }
        for (const auto& s : norms) {
            n += static_cast<std::size_t>(s.scale.size() + s.shift.size());
        }
        return n;
    }

    /// Visits every trainable parameter block in a fixed order.
    template <typename F>
    void for_each_parameter(F&& f) {
        for (auto& l : layers) {
            f(l.weight.data(), static_cast<std::size_t>(l.weight.size()));
            f(l.bias.data(), static_cast<std::size_t>(l.bias.size()));
        }
        for (auto& s : norms) {
            f(s.scale.data(), static_cast<std::size_t>(s.scale.size()));
            f(s.shift.data(), static_cast<std::size_t>(s.shift.size()));
        }
    }

    std::vector<double> flat_parameters() const {
        std::vector<double> out;
        out.reserve(parameter_count());
        const_cast<MlpModel*>(this)->for_each_parameter([&](double* p, std::size_t n) {
            out.insert(out.end(), p, p + n);
        });
        return out;
    }

    void set_flat_parameters(const std::vector<double>& v) {
        if (v.size() != parameter_count()) {
            throw InvalidArgument("parameter vector has the wrong length");
        }
        std::size_t k = 0;
        for_each_parameter([&](double* p, std::size_t n) {
            std::copy(v.begin() + static_cast<std::ptrdiff_t>(k),
                      v.begin() + static_cast<std::ptrdiff_t>(k + n), p);
            k += n;
        });
    }
};

/// Glorot-uniform weights times `init_scale`, zero biases, identity batch norm.
inline MlpModel init_mlp(std::size_t n_features, const MlpConfig& cfg) {
    cfg.validate();
    if (n_features == 0) {
        throw InvalidArgument("mlp: need at least one feature");
    }
    MlpModel m;
    m.n_features = n_features;
    m.batchnorm = cfg.batchnorm;
    std::mt19937_64 rng(combine_seed(cfg.seed, 0x1417));
    std::vector<std::size_t> widths{n_features};
    for (std::size_t l = 0; l < cfg.n_layers; ++l) {
        widths.push_back(cfg.hidden_size);
    }
    widths.push_back(1);
    for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
        const auto in = static_cast<Eigen::Index>(widths[l]);
        const auto out = static_cast<Eigen::Index>(widths[l + 1]);
        const double limit = std::sqrt(6.0 / static_cast<double>(in + out)) * cfg.init_scale;
        std::uniform_real_distribution<double> unif(-limit, limit);
        DenseLayer layer{Eigen::MatrixXd(out, in), Eigen::VectorXd::Zero(out)};
        // row-major fill order so the draw sequence does not depend on storage
        for (Eigen::Index r = 0; r < out; ++r) {
            for (Eigen::Index c = 0; c < in; ++c) {
                layer.weight(r, c) = limit > 0.0 ? unif(rng) : 0.0;
            }
        }
        m.layers.push_back(std::move(layer));
    }
    if (cfg.batchnorm == BatchNormPlacement::after_input) {
        m.norms.emplace_back(static_cast<Eigen::Index>(n_features));
    } else if (cfg.batchnorm == BatchNormPlacement::every_layer) {
        for (std::size_t l = 0; l < cfg.n_layers; ++l) {
            m.norms.emplace_back(static_cast<Eigen::Index>(cfg.hidden_size));
        }
    }
    return m;
}

namespace detail {

struct NormCache {
    Eigen::MatrixXd normalized; // before scale/shift
    Eigen::VectorXd inv_std;
    Eigen::VectorXd batch_mean;
    Eigen::VectorXd batch_var; // biased
    bool used_batch_stats = false;
};

struct ForwardCache {
    std::vector<Eigen::MatrixXd> inputs;      // input to each dense layer
    std::vector<Eigen::MatrixXd> pre_relu;    // hidden pre-activations
    std::vector<NormCache> norms;
    Eigen::RowVectorXd logits;
};

inline Eigen::MatrixXd batch_norm_forward(const BatchNormSite& site, const Eigen::MatrixXd& x,
                                          bool use_batch, NormCache& cache) {
    cache.used_batch_stats = use_batch;
    if (use_batch) {
        const double b = static_cast<double>(x.cols());
        cache.batch_mean = x.rowwise().mean();
        const Eigen::MatrixXd centered = x.colwise() - cache.batch_mean;
        cache.batch_var = centered.array().square().rowwise().sum() / b;
        cache.inv_std = (cache.batch_var.array() + kBatchNormEps).rsqrt();
        cache.normalized = centered.array().colwise() * cache.inv_std.array();
    } else {
        cache.inv_std = (site.running_var.array() + kBatchNormEps).rsqrt();
        cache.normalized =
            (x.colwise() - site.running_mean).array().colwise() * cache.inv_std.array();
    }
    Eigen::MatrixXd y = cache.normalized.array().colwise() * site.scale.array();
    y.colwise() += site.shift;
    return y;
}

/// Backward through one batch-norm site; accumulates scale/shift gradients.
inline Eigen::MatrixXd batch_norm_backward(const BatchNormSite& site, const NormCache& cache,
                                           const Eigen::MatrixXd& dy, Eigen::VectorXd& d_scale,
                                           Eigen::VectorXd& d_shift) {
    d_shift = dy.rowwise().sum();
    d_scale = (dy.array() * cache.normalized.array()).rowwise().sum();
    const Eigen::MatrixXd dxhat = dy.array().colwise() * site.scale.array();
    if (!cache.used_batch_stats) {
        return dxhat.array().colwise() * cache.inv_std.array();
    }
    const double b = static_cast<double>(dy.cols());
    const Eigen::VectorXd sum_dxhat = dxhat.rowwise().sum();
    const Eigen::VectorXd sum_dxhat_xhat = (dxhat.array() * cache.normalized.array()).rowwise().sum();
    Eigen::MatrixXd dx = (b * dxhat.array()).matrix();
    dx.colwise() -= sum_dxhat;
    dx.array() -= cache.normalized.array().colwise() * sum_dxhat_xhat.array();
    dx.array().colwise() *= cache.inv_std.array() / b;
    return dx;
}

} // namespace detail

/// Forward pass over the columns of `x` (features x batch). Batch statistics
/// are used when the model is training and the batch has more than one column.
inline Eigen::RowVectorXd mlp_forward(const MlpModel& m, const Eigen::MatrixXd& x,
                                      detail::ForwardCache* cache = nullptr) {
    detail::ForwardCache local;
    auto& c = cache != nullptr ? *cache : local;
    c.inputs.clear();
    c.pre_relu.clear();
    c.norms.clear();
    const bool use_batch = m.training && x.cols() > 1;
    std::size_t norm_idx = 0;
    Eigen::MatrixXd a = x;
    if (m.batchnorm == BatchNormPlacement::after_input) {
        c.norms.emplace_back();
        a = detail::batch_norm_forward(m.norms[norm_idx++], a, use_batch, c.norms.back());
    }
    const std::size_t hidden = m.hidden_layers();
    for (std::size_t l = 0; l < hidden; ++l) {
        c.inputs.push_back(a);
        Eigen::MatrixXd z = m.layers[l].weight * a;
        z.colwise() += m.layers[l].bias;
        c.pre_relu.push_back(z);
        a = z.cwiseMax(0.0);
        if (m.batchnorm == BatchNormPlacement::every_layer) {
            c.norms.emplace_back();
            a = detail::batch_norm_forward(m.norms[norm_idx++], a, use_batch, c.norms.back());
        }
    }
    c.inputs.push_back(a);
    const auto& out = m.layers.back();
    c.logits = (out.weight * a).row(0);
    c.logits.array() += out.bias(0);
    return c.logits;
}

/// Parameter gradients laid out like MlpModel::flat_parameters.
struct MlpGradient {
    std::vector<Eigen::MatrixXd> weight;
    std::vector<Eigen::VectorXd> bias;
    std::vector<Eigen::VectorXd> scale;
    std::vector<Eigen::VectorXd> shift;

    std::vector<double> flat() const {
        std::vector<double> out;
        for (std::size_t l = 0; l < weight.size(); ++l) {
            out.insert(out.end(), weight[l].data(), weight[l].data() + weight[l].size());
            out.insert(out.end(), bias[l].data(), bias[l].data() + bias[l].size());
        }
        for (std::size_t s = 0; s < scale.size(); ++s) {
            out.insert(out.end(), scale[s].data(), scale[s].data() + scale[s].size());
            out.insert(out.end(), shift[s].data(), shift[s].data() + shift[s].size());
        }
        return out;
    }
};

struct BatchLoss {
    double loss = 0.0;
    MlpGradient grad;
    detail::ForwardCache cache;
};

/// Mean over the batch of weight_i * BCE(y_i, sigmoid(logit_i)), with gradients.
/// `x` is features x batch.
inline BatchLoss mlp_loss_and_gradient(const MlpModel& m, const Eigen::MatrixXd& x,
                                       std::span<const std::uint8_t> y,
                                       std::span<const double> weights) {
    BatchLoss out;
    const auto logits = mlp_forward(m, x, &out.cache);
    const auto b = static_cast<Eigen::Index>(y.size());
    const double inv_b = 1.0 / static_cast<double>(b);
    Eigen::RowVectorXd dlogit(b);
    double loss = 0.0;
    for (Eigen::Index i = 0; i < b; ++i) {
        const double z = logits(i);
        const double w = weights[static_cast<std::size_t>(i)];
        const double yi = y[static_cast<std::size_t>(i)];
        loss += w * (softplus(z) - yi * z);
        dlogit(i) = w * (sigmoid(z) - yi) * inv_b;
    }
    out.loss = loss * inv_b;

    const std::size_t n_dense = m.layers.size();
    auto& g = out.grad;
    g.weight.resize(n_dense);
    g.bias.resize(n_dense);
    g.scale.resize(m.norms.size());
    g.shift.resize(m.norms.size());

    const auto& cache = out.cache;
    // output layer
    g.weight[n_dense - 1] = dlogit * cache.inputs.back().transpose();
    g.bias[n_dense - 1] = Eigen::VectorXd::Constant(1, dlogit.sum());
    Eigen::MatrixXd da = m.layers.back().weight.transpose() * dlogit;

    const bool every = m.batchnorm == BatchNormPlacement::every_layer;
    for (std::size_t l = n_dense - 1; l-- > 0;) {
        if (every) {
            da = detail::batch_norm_backward(m.norms[l], cache.norms[l], da, g.scale[l], g.shift[l]);
        }
        const Eigen::MatrixXd dz =
            (cache.pre_relu[l].array() > 0.0).select(da, Eigen::MatrixXd::Zero(da.rows(), da.cols()));
        g.weight[l] = dz * cache.inputs[l].transpose();
        g.bias[l] = dz.rowwise().sum();
        if (l > 0 || m.batchnorm == BatchNormPlacement::after_input) {
            da = m.layers[l].weight.transpose() * dz;
        }
    }
    if (m.batchnorm == BatchNormPlacement::after_input) {
        detail::batch_norm_backward(m.norms[0], cache.norms[0], da, g.scale[0], g.shift[0]);
    }
    return out;
}

/// Blends batch statistics from a training forward pass into the running
/// estimates: running = 0.9 * running + 0.1 * batch (variance unbiased).
inline void update_running_stats(MlpModel& m, const detail::ForwardCache& cache) {
    for (std::size_t s = 0; s < m.norms.size(); ++s) {
        const auto& nc = cache.norms[s];
        if (!nc.used_batch_stats) {
            continue;
        }
        const double b = static_cast<double>(nc.normalized.cols());
        auto& site = m.norms[s];
        site.running_mean = kBatchNormMomentum * site.running_mean + (1.0 - kBatchNormMomentum) * nc.batch_mean;
        site.running_var = kBatchNormMomentum * site.running_var +
                           (1.0 - kBatchNormMomentum) * nc.batch_var * (b / (b - 1.0));
    }
}

/// Classical momentum: v <- momentum * v - lr * g; theta <- theta + v.
class MomentumSgd {
public:
    MomentumSgd(const MlpModel& m, double lr, double momentum)
        : lr_(lr), momentum_(momentum), velocity_(m.parameter_count(), 0.0) {}

    void step(MlpModel& m, const MlpGradient& g) {
        const auto flat = g.flat();
        std::size_t k = 0;
        m.for_each_parameter([&](double* p, std::size_t n) {
            for (std::size_t i = 0; i < n; ++i, ++k) {
                velocity_[k] = momentum_ * velocity_[k] - lr_ * flat[k];
                p[i] += velocity_[k];
            }
        });
    }

private:
    double lr_;
    double momentum_;
    std::vector<double> velocity_;
};

struct MlpFitResult {
    MlpModel model;
    // Mean batch loss per epoch (the objective being optimized).
    std::vector<double> epoch_loss;
};

namespace detail {

inline Eigen::MatrixXd gather_columns(const Dataset& ds, std::span<const std::size_t> idx) {
    Eigen::MatrixXd x(static_cast<Eigen::Index>(ds.cols()), static_cast<Eigen::Index>(idx.size()));
    for (std::size_t c = 0; c < idx.size(); ++c) {
        const auto r = ds.row(idx[c]);
        for (std::size_t j = 0; j < ds.cols(); ++j) {
            x(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(c)) = r[j];
        }
    }
    return x;
}

} // namespace detail

/// Minibatch SGD with momentum on binary cross-entropy.
///
/// weighted_cost: each epoch visits a seeded shuffle in batches (the last short
/// batch is kept) and positives carry weight gamma. resample: each epoch draws
/// ceil(n / batch_size) batches i.i.d. with positives gamma times as likely,
/// all weights 1.
inline MlpFitResult fit_mlp(const Dataset& ds, const MlpConfig& cfg, const PwsConfig& pws) {
    cfg.validate();
    pws.validate();
    if (ds.positives() == 0 || ds.negatives() == 0) {
        throw InvalidArgument("fit_mlp: both classes must be present");
    }
    MlpFitResult res;
    res.model = init_mlp(ds.cols(), cfg);
    auto& m = res.model;
    m.training = true;
    MomentumSgd opt(m, cfg.learning_rate, cfg.momentum);

    const std::size_t n = ds.rows();
    const std::size_t bs = std::min(cfg.batch_size, n);
    const std::size_t n_batches = (n + bs - 1) / bs;
    // weighted_cost shares the shuffle stream across gammas; resample draws
    // from its own seed
    std::mt19937_64 rng(combine_seed(cfg.seed, pws.mode == PwsMode::resample ? pws.seed : 0xba7c4));
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    const auto probs = resample_probabilities(ds, pws.gamma);
    const WeightedIndexSampler sampler(probs);

    std::vector<std::size_t> idx;
    std::vector<std::uint8_t> yb;
    std::vector<double> wb;
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        if (pws.mode == PwsMode::weighted_cost) {
            std::shuffle(order.begin(), order.end(), rng);
        }
        double epoch_sum = 0.0;
        for (std::size_t b = 0; b < n_batches; ++b) {
            const std::size_t lo = b * bs;
            const std::size_t len = std::min(bs, n - lo);
            idx.resize(len);
            yb.resize(len);
            wb.resize(len);
            for (std::size_t k = 0; k < len; ++k) {
                idx[k] = pws.mode == PwsMode::weighted_cost ? order[lo + k] : sampler(rng);
                yb[k] = static_cast<std::uint8_t>(ds.label(idx[k]));
                wb[k] = pws.mode == PwsMode::weighted_cost && yb[k] == 1 ? pws.gamma : 1.0;
            }
            const auto x = detail::gather_columns(ds, idx);
            const auto bl = mlp_loss_and_gradient(m, x, yb, wb);
            if (!std::isfinite(bl.loss)) {
                throw NumericalError("fit_mlp: non-finite loss at epoch " + std::to_string(epoch) +
                                     ", batch " + std::to_string(b));
            }
            update_running_stats(m, bl.cache);
            opt.step(m, bl.grad);
            epoch_sum += bl.loss;
        }
        res.epoch_loss.push_back(epoch_sum / static_cast<double>(n_batches));
    }
    m.training = false;
    return res;
}

inline std::vector<double> predict_mlp(const MlpModel& m, const Dataset& ds) {
    if (m.training) {
        throw InvalidArgument("predict_mlp: model is in training mode");
    }
    if (ds.cols() != m.n_features) {
        throw InvalidArgument("predict_mlp: model expects " + std::to_string(m.n_features) +
                              " features, data has " + std::to_string(ds.cols()));
    }
    std::vector<double> scores(ds.rows());
    constexpr std::size_t kChunk = 4096;
    std::vector<std::size_t> idx;
    for (std::size_t lo = 0; lo < ds.rows(); lo += kChunk) {
        const std::size_t len = std::min(kChunk, ds.rows() - lo);
        idx.resize(len);
        std::iota(idx.begin(), idx.end(), lo);
        const auto logits = mlp_forward(m, detail::gather_columns(ds, idx));
        for (std::size_t k = 0; k < len; ++k) {
            scores[lo + k] = sigmoid(logits(static_cast<Eigen::Index>(k)));
        }
    }
    return scores;
}

} // namespace imblab
