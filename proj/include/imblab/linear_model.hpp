#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "imblab/common.hpp"
#include "imblab/dataset.hpp"
#include "imblab/reweight.hpp"

namespace imblab {

struct LogisticFitConfig {
    double ridge = 1e-2;
    std::size_t max_iters = 5000;
    double grad_tol = 1e-6;
    double step_size = 1.0;

    void validate() const {
        if (!(ridge >= 0.0) || !std::isfinite(ridge)) {
            throw InvalidArgument("ridge must be finite and non-negative");
        }
        if (max_iters == 0) {
            throw InvalidArgument("max_iters must be positive");
        }
        if (!(grad_tol > 0.0)) {
            throw InvalidArgument("grad_tol must be positive");
        }
        if (!(step_size > 0.0) || !std::isfinite(step_size)) {
            throw InvalidArgument("step_size must be positive and finite");
        }
    }
};

struct LogisticFitResult {
    LogisticParams params;
    std::size_t iterations = 0;
    double objective = 0.0;
    double grad_inf = 0.0;
    bool converged = false;
    // Objective after each accepted step, starting with the initial point.
    std::vector<double> objective_trace;
};

/// Weighted negative log-likelihood plus ridge / 2 * |omega|^2 (intercept unpenalized).
inline double logistic_objective(const WeightedDataset& wds, const LogisticParams& p, double ridge) {
    const auto& ds = wds.base;
    double s = 0.0;
    for (std::size_t i = 0; i < ds.rows(); ++i) {
        const double z = p.logit(ds.row(i));
        s += wds.weights[i] * (softplus(z) - ds.label(i) * z);
    }
    double r = 0.0;
    for (double w : p.omega) {
        r += w * w;
    }
    return s + 0.5 * ridge * r;
}

/// Gradient of logistic_objective; the intercept component is stored in omega0.
inline LogisticParams logistic_gradient(const WeightedDataset& wds, const LogisticParams& p,
                                        double ridge) {
    const auto& ds = wds.base;
    const std::size_t d = ds.cols();
    LogisticParams g;
    g.omega.assign(d, 0.0);
    for (std::size_t i = 0; i < ds.rows(); ++i) {
        const auto x = ds.row(i);
        const double r = wds.weights[i] * (sigmoid(p.logit(x)) - ds.label(i));
        for (std::size_t j = 0; j < d; ++j) {
            g.omega[j] += r * x[j];
        }
        g.omega0 += r;
    }
    for (std::size_t j = 0; j < d; ++j) {
        g.omega[j] += ridge * p.omega[j];
    }
    return g;
}

inline double inf_norm(const LogisticParams& g) {
    double m = std::abs(g.omega0);
    for (double v : g.omega) {
        m = std::max(m, std::abs(v));
    }
    return m;
}

/// Full-batch gradient descent from zero. A trial step that raises the
/// objective (or makes it non-finite) is halved and retried; an accepted step
/// lets the next trial double, capped at the configured step size.
inline LogisticFitResult fit_logistic(const WeightedDataset& wds, const LogisticFitConfig& cfg) {
    cfg.validate();
    if (wds.rows() == 0) {
        throw InvalidArgument("fit_logistic: empty dataset");
    }
    const std::size_t d = wds.base.cols();
    LogisticFitResult res;
    res.params.omega.assign(d, 0.0);
    res.params.omega0 = 0.0;
    double obj = logistic_objective(wds, res.params, cfg.ridge);
    if (!std::isfinite(obj)) {
        throw NumericalError("fit_logistic: non-finite objective at initialization");
    }
    res.objective_trace.push_back(obj);
    double step = cfg.step_size;
    LogisticParams trial;
    trial.omega.resize(d);
    constexpr int kMaxHalvings = 200;
    for (std::size_t it = 0; it < cfg.max_iters; ++it) {
        const auto g = logistic_gradient(wds, res.params, cfg.ridge);
        res.grad_inf = inf_norm(g);
        if (res.grad_inf <= cfg.grad_tol) {
            res.converged = true;
            break;
        }
        int halvings = 0;
        double trial_obj = 0.0;
        while (true) {
            for (std::size_t j = 0; j < d; ++j) {
                trial.omega[j] = res.params.omega[j] - step * g.omega[j];
            }
            trial.omega0 = res.params.omega0 - step * g.omega0;
            trial_obj = logistic_objective(wds, trial, cfg.ridge);
            if (std::isfinite(trial_obj) && trial_obj <= obj) {
                break;
            }
            if (++halvings > kMaxHalvings) {
                if (!std::isfinite(trial_obj)) {
                    throw NumericalError("fit_logistic: non-finite loss at iteration " +
                                         std::to_string(it));
                }
                // no descent possible at machine precision
                res.converged = res.grad_inf <= cfg.grad_tol;
                res.objective = obj;
                return res;
            }
            step *= 0.5;
        }
        std::swap(res.params, trial);
        obj = trial_obj;
        res.objective_trace.push_back(obj);
        res.iterations = it + 1;
        step = std::min(step * 2.0, cfg.step_size);
    }
    if (!res.converged) {
        res.grad_inf = inf_norm(logistic_gradient(wds, res.params, cfg.ridge));
        res.converged = res.grad_inf <= cfg.grad_tol;
    }
    res.objective = obj;
    return res;
}

inline std::vector<double> predict_logistic(const LogisticParams& p, const Dataset& ds) {
    if (p.dim() != ds.cols()) {
        throw InvalidArgument("predict_logistic: model has " + std::to_string(p.dim()) +
                              " coefficients, data has " + std::to_string(ds.cols()) + " columns");
    }
    std::vector<double> s(ds.rows());
    for (std::size_t i = 0; i < ds.rows(); ++i) {
        s[i] = sigmoid(p.logit(ds.row(i)));
    }
    return s;
}

} // namespace imblab
