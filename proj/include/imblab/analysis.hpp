#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <vector>

#include "imblab/common.hpp"
#include "imblab/stats.hpp"
#include "imblab/sweep.hpp"

namespace imblab {

inline constexpr double kMaxConditionNumber = 1e12;

struct OlsResult {
    std::vector<double> betas;      // intercept first
    std::vector<double> std_errors;
    std::vector<double> t_stats;    // +-inf on an exact fit
    double rss = 0.0;
    double sigma2 = 0.0;
    double condition = 0.0;         // of X'X after scaling columns to unit norm
    std::size_t n = 0;
    bool exact_fit = false;
};

/// Least squares with classical standard errors.
///
/// `x` must carry its own intercept column. Conditioning is judged on X'X
/// with columns scaled to unit norm, so raw covariate units (trees in the
/// thousands, learning rates in the hundredths) do not trip the check.
inline OlsResult ols(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
    const auto n = x.rows();
    const auto p = x.cols();
    if (y.size() != n) {
        throw InvalidArgument("ols: response length does not match design rows");
    }
    if (p == 0 || n <= p) {
        throw InvalidArgument("ols: need more observations (" + std::to_string(n) +
                              ") than design columns (" + std::to_string(p) + ")");
    }
    Eigen::VectorXd col_norm = x.colwise().norm().transpose();
    for (Eigen::Index j = 0; j < p; ++j) {
        if (col_norm(j) == 0.0) {
            throw NumericalError("ols: design column " + std::to_string(j) + " is all zeros");
        }
    }
    const Eigen::MatrixXd xs = x * col_norm.cwiseInverse().asDiagonal();
    const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(xs);
    const Eigen::JacobiSVD<Eigen::MatrixXd> svd(xs);
    const auto& sv = svd.singularValues();
    const double smin = sv(sv.size() - 1);
    OlsResult res;
    res.n = static_cast<std::size_t>(n);
    res.condition = smin > 0.0 ? (sv(0) / smin) * (sv(0) / smin) : std::numeric_limits<double>::infinity();
    if (!(res.condition <= kMaxConditionNumber)) {
        const auto worst = qr.colsPermutation().indices()(p - 1);
        throw NumericalError("ols: design is rank deficient (condition " + std::to_string(res.condition) +
                             "); offending column " + std::to_string(worst));
    }
    const Eigen::VectorXd beta_s = qr.solve(y);
    const Eigen::VectorXd beta = beta_s.cwiseQuotient(col_norm);
    const Eigen::VectorXd resid = y - x * beta;
    res.rss = resid.squaredNorm();
    res.sigma2 = res.rss / static_cast<double>(n - p);
    // (X'X)^-1 = D (Xs'Xs)^-1 D with D = diag(1 / |x_j|)
    const Eigen::MatrixXd inv_s = (xs.transpose() * xs).ldlt().solve(Eigen::MatrixXd::Identity(p, p));
    res.exact_fit = res.rss <= 1e-20 * std::max(1.0, y.squaredNorm());
    for (Eigen::Index j = 0; j < p; ++j) {
        const double b = beta(j);
        const double var = inv_s(j, j) / (col_norm(j) * col_norm(j));
        const double se = res.exact_fit ? 0.0 : std::sqrt(res.sigma2 * var);
        res.betas.push_back(b);
        res.std_errors.push_back(se);
        if (se == 0.0) {
            res.t_stats.push_back(b > 0.0 ? std::numeric_limits<double>::infinity()
                                  : b < 0.0 ? -std::numeric_limits<double>::infinity()
                                            : 0.0);
        } else {
            res.t_stats.push_back(b / se);
        }
    }
    return res;
}

/// Formats a t statistic; infinities become `inf` / `-inf`.
inline std::string format_t(double t) {
    if (std::isinf(t)) {
        return t > 0 ? "inf" : "-inf";
    }
    return format_number(t);
}

struct DesignOptions {
    // Keep only models with at least this many trees (gbdt families).
    std::optional<std::size_t> min_estimators;
    // Add each selected model's training F1 as an extra covariate.
    bool with_ensemble_covariate = false;

    static DesignOptions defaults_for(Family f) {
        DesignOptions o;
        if (f == Family::gbdt_catboost_like) {
            o.min_estimators = 2000;
        }
        return o;
    }
};

inline std::vector<std::string> design_covariates(Family f, const DesignOptions& opts) {
    std::vector<std::string> c;
    switch (f) {
    case Family::gbdt_lightgbm_like:
        c = {"n_estimators", "learning_rate", "max_depth", "num_leaves"};
        break;
    case Family::gbdt_catboost_like:
        c = {"n_estimators", "learning_rate", "max_depth"};
        break;
    case Family::mlp_weighted_cost:
    case Family::mlp_resample:
        c = {"hidden_size", "n_layers"};
        break;
    case Family::logistic:
        throw InvalidArgument("no complexity regression is defined for the logistic family");
    }
    if (opts.with_ensemble_covariate) {
        c.push_back("f1_train");
    }
    return c;
}

struct Design {
    std::vector<std::string> covariates; // excludes the intercept
    Eigen::MatrixXd x;                   // intercept column first
    Eigen::VectorXd y;
};

/// One observation per (hyperparameter group, rank <= k): the group's
/// complexity hyperparameters as covariates and its rank-r best gamma as the
/// response. Failed records and records with undefined F1 are skipped.
inline Design build_design(std::span<const SweepRecord> records, Family family, std::size_t k,
                           RankMode mode, const DesignOptions& opts) {
    if (k == 0) {
        throw InvalidArgument("build_design: k must be positive");
    }
    Design d;
    d.covariates = design_covariates(family, opts);
    std::vector<SweepRecord> kept;
    for (const auto& r : records) {
        if (r.family != family || !r.error_msg.empty()) {
            continue;
        }
        if (opts.min_estimators && is_gbdt(family) &&
            r.numeric("n_estimators") < static_cast<double>(*opts.min_estimators)) {
            continue;
        }
        kept.push_back(r);
    }
    std::map<std::string, std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < kept.size(); ++i) {
        groups[kept[i].group_key()].push_back(i);
    }
    std::vector<std::vector<double>> rows;
    std::vector<double> response;
    std::vector<SweepRecord> members;
    for (const auto& [key, idx] : groups) {
        members.clear();
        for (auto i : idx) {
            members.push_back(kept[i]);
        }
        for (const auto& ranked : best_pws(members, key, k, mode)) {
            if (!ranked.score) {
                continue;
            }
            const auto& rec = members[ranked.record];
            std::vector<double> row;
            for (const auto& c : d.covariates) {
                if (c == "f1_train") {
                    row.push_back(rec.f1_train.value_or(std::numeric_limits<double>::quiet_NaN()));
                } else {
                    row.push_back(rec.numeric(c));
                }
            }
            if (opts.with_ensemble_covariate && std::isnan(row.back())) {
                continue;
            }
            rows.push_back(std::move(row));
            response.push_back(ranked.gamma);
        }
    }
    const auto n = static_cast<Eigen::Index>(rows.size());
    const auto p = static_cast<Eigen::Index>(d.covariates.size());
    for (Eigen::Index j = 0; j < p; ++j) {
        std::set<double> distinct;
        for (const auto& row : rows) {
            distinct.insert(row[static_cast<std::size_t>(j)]);
        }
        if (distinct.size() < 2) {
            throw InvalidArgument("build_design: covariate '" + d.covariates[static_cast<std::size_t>(j)] +
                                  "' has fewer than 2 distinct values");
        }
    }
    d.x.resize(n, p + 1);
    d.y.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        d.x(i, 0) = 1.0;
        for (Eigen::Index j = 0; j < p; ++j) {
            d.x(i, j + 1) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
        }
        d.y(i) = response[static_cast<std::size_t>(i)];
    }
    return d;
}

struct RegressionResult {
    Family family = Family::gbdt_lightgbm_like;
    std::size_t k = 1;
    RankMode mode = RankMode::train;
    std::size_t n = 0;
    std::vector<std::string> covariates; // "intercept" first
    std::vector<double> betas;
    std::vector<double> t_stats;
    std::vector<std::optional<double>> correlations; // none for the intercept

    double beta(std::string_view name) const {
        for (std::size_t j = 0; j < covariates.size(); ++j) {
            if (covariates[j] == name) {
                return betas[j];
            }
        }
        throw InvalidArgument("no covariate '" + std::string(name) + "'");
    }
};

inline RegressionResult regress(const Design& d, Family family, std::size_t k, RankMode mode) {
    const auto fit = ols(d.x, d.y);
    RegressionResult r;
    r.family = family;
    r.k = k;
    r.mode = mode;
    r.n = static_cast<std::size_t>(d.x.rows());
    r.covariates.push_back("intercept");
    r.covariates.insert(r.covariates.end(), d.covariates.begin(), d.covariates.end());
    r.betas = fit.betas;
    r.t_stats = fit.t_stats;
    r.correlations.push_back(std::nullopt);
    const std::vector<double> y(d.y.data(), d.y.data() + d.y.size());
    for (Eigen::Index j = 1; j < d.x.cols(); ++j) {
        const Eigen::VectorXd col = d.x.col(j);
        const std::vector<double> xj(col.data(), col.data() + col.size());
        r.correlations.push_back(stats::pearson(xj, y));
    }
    return r;
}

/// One regression per (k, mode), k outermost.
inline std::vector<RegressionResult> analyze_family(std::span<const SweepRecord> records, Family family,
                                                    const std::vector<std::size_t>& k_list,
                                                    const std::vector<RankMode>& modes,
                                                    const DesignOptions& opts) {
    std::vector<RegressionResult> out;
    for (auto k : k_list) {
        for (auto mode : modes) {
            out.push_back(regress(build_design(records, family, k, mode, opts), family, k, mode));
        }
    }
    return out;
}

inline constexpr std::string_view kRegressionCsvHeader = "family,k,mode,n,covariate,beta,t_stat,corr";

inline void write_regression_csv(std::ostream& out, const std::vector<RegressionResult>& results) {
    out << kRegressionCsvHeader << '\n';
    for (const auto& r : results) {
        for (std::size_t j = 0; j < r.covariates.size(); ++j) {
            out << to_string(r.family) << ',' << r.k << ',' << to_string(r.mode) << ',' << r.n << ','
                << r.covariates[j] << ',' << format_number(r.betas[j]) << ',' << format_t(r.t_stats[j])
                << ',' << (r.correlations[j] ? format_number(*r.correlations[j]) : std::string()) << '\n';
        }
    }
}

/// Aligned table: one line per (k, mode), beta / t-stat / corr per covariate.
inline void write_regression_table(std::ostream& out, const std::vector<RegressionResult>& results) {
    if (results.empty()) {
        return;
    }
    const auto& cov = results.front().covariates;
    char buf[64];
    std::string line = "     k  mode       n";
    for (std::size_t j = 1; j < cov.size(); ++j) {
        std::snprintf(buf, sizeof(buf), " | %-34s", cov[j].c_str());
        line += buf;
    }
    out << line << '\n';
    line = "                     ";
    for (std::size_t j = 1; j < cov.size(); ++j) {
        std::snprintf(buf, sizeof(buf), " | %12s %10s %10s", "beta", "t-stat", "corr");
        line += buf;
    }
    out << line << '\n';
    for (const auto& r : results) {
        std::snprintf(buf, sizeof(buf), "%6zu  %-5s %7zu", r.k, std::string(to_string(r.mode)).c_str(), r.n);
        line = buf;
        for (std::size_t j = 1; j < r.covariates.size(); ++j) {
            const std::string t = std::isinf(r.t_stats[j]) ? format_t(r.t_stats[j]) : [&] {
                char tb[32];
                std::snprintf(tb, sizeof(tb), "%.4f", r.t_stats[j]);
                return std::string(tb);
            }();
            const std::string c = r.correlations[j] ? [&] {
                char cb[32];
                std::snprintf(cb, sizeof(cb), "%.4f", *r.correlations[j]);
                return std::string(cb);
            }()
                                                    : std::string("-");
            std::snprintf(buf, sizeof(buf), " | %12.4f %10s %10s", r.betas[j], t.c_str(), c.c_str());
            line += buf;
        }
        out << line << '\n';
    }
}

} // namespace imblab
