#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "imblab/common.hpp"
#include "imblab/dataset.hpp"

namespace imblab {

struct GeneratorConfig {
    std::size_t d = 100;
    std::size_t n = 120;
    double target_positive_rate = 0.05;
    std::uint64_t seed = 0;
    // Multiplier on the N(0, 1/d) coefficient prior. Zero forces omega = 0.
    double omega_scale = 1.0;

    void validate() const {
        if (d == 0 || n == 0) {
            throw InvalidArgument("generator needs d >= 1 and n >= 1");
        }
        if (!(target_positive_rate > 0.0 && target_positive_rate < 1.0)) {
            throw InvalidArgument("target_positive_rate must lie in (0, 1)");
        }
        if (!std::isfinite(omega_scale) || omega_scale < 0.0) {
            throw InvalidArgument("omega_scale must be finite and non-negative");
        }
    }
};

namespace detail {

inline constexpr std::size_t kCalibrationSamples = 100000;
inline constexpr double kCalibrationTolerance = 0.005;
inline constexpr double kInterceptLo = -50.0;
inline constexpr double kInterceptHi = 50.0;

inline double mean_sigmoid(const std::vector<double>& z, double shift) {
    double s = 0.0;
    for (double v : z) {
        s += sigmoid(v + shift);
    }
    return s / static_cast<double>(z.size());
}

} // namespace detail

/// Monte Carlo estimate of E[sigmoid(omega . x + omega0)] under x ~ N(0, I).
///
/// omega . x is exactly N(0, |omega|^2), so the projection is drawn directly.
inline double monte_carlo_positive_rate(const LogisticGroundTruth& gt, std::size_t samples,
                                        std::uint64_t seed) {
    double norm2 = 0.0;
    for (double w : gt.omega) {
        norm2 += w * w;
    }
    const double sd = std::sqrt(norm2);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal;
    double s = 0.0;
    for (std::size_t i = 0; i < samples; ++i) {
        s += sigmoid(sd * normal(rng) + gt.omega0);
    }
    return s / static_cast<double>(samples);
}

/// Draws omega ~ N(0, 1/d) and bisects omega0 so the Monte Carlo positive
/// rate under standard normal features matches the target within 0.005.
inline LogisticGroundTruth make_ground_truth(const GeneratorConfig& cfg) {
    cfg.validate();
    std::mt19937_64 rng(combine_seed(cfg.seed, 0x67740001));
    std::normal_distribution<double> normal;
    LogisticGroundTruth gt;
    gt.omega.resize(cfg.d);
    const double scale = cfg.omega_scale / std::sqrt(static_cast<double>(cfg.d));
    for (auto& w : gt.omega) {
        w = scale * normal(rng);
    }

    double norm2 = 0.0;
    for (double w : gt.omega) {
        norm2 += w * w;
    }
    const double sd = std::sqrt(norm2);
    std::vector<double> z(detail::kCalibrationSamples);
    std::mt19937_64 mc(combine_seed(cfg.seed, 0x67740002));
    for (auto& v : z) {
        v = sd * normal(mc);
    }

    const double target = cfg.target_positive_rate;
    double lo = detail::kInterceptLo;
    double hi = detail::kInterceptHi;
    if (detail::mean_sigmoid(z, lo) > target || detail::mean_sigmoid(z, hi) < target) {
        throw NumericalError("cannot bracket target positive rate " + std::to_string(target) +
                             " with intercept in [-50, 50]");
    }
    double mid = 0.0;
    for (int it = 0; it < 200; ++it) {
        mid = 0.5 * (lo + hi);
        const double rate = detail::mean_sigmoid(z, mid);
        if (rate == target || hi - lo < 1e-13) {
            break;
        }
        if (rate < target) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if (std::abs(detail::mean_sigmoid(z, mid) - target) > detail::kCalibrationTolerance) {
        throw NumericalError("intercept calibration did not reach tolerance");
    }
    gt.omega0 = mid;
    return gt;
}

/// Imbalanced distribution: x ~ N(0, I_d), y ~ Bernoulli(sigmoid(omega . x + omega0)).
inline Dataset sample_d0(const LogisticGroundTruth& gt, std::size_t n, std::uint64_t seed) {
    const std::size_t d = gt.dim();
    if (d == 0 || n == 0) {
        throw InvalidArgument("sample_d0 needs d >= 1 and n >= 1");
    }
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal;
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::vector<double> x(n * d);
    std::vector<std::uint8_t> y(n);
    for (std::size_t i = 0; i < n; ++i) {
        double* r = x.data() + i * d;
        for (std::size_t j = 0; j < d; ++j) {
            r[j] = normal(rng);
        }
        const double p = sigmoid(gt.logit({r, d}));
        y[i] = unif(rng) < p ? 1 : 0;
    }
    return Dataset(n, d, std::move(x), std::move(y));
}

struct RejectionStats {
    std::uint64_t raw_draws = 0;
    // Raw draws consumed when the positive quota was filled.
    std::uint64_t draws_to_fill_positives = 0;
};

inline constexpr std::uint64_t kRejectionDrawBudget = 10'000'000;

/// Rebalanced distribution: draws from the imbalanced process, keeping rows
/// until exactly ceil(n * balance) positives and the remainder negatives are
/// collected, then shuffles row order.
inline Dataset sample_d1(const LogisticGroundTruth& gt, std::size_t n, double balance,
                         std::uint64_t seed, RejectionStats* stats = nullptr) {
    const std::size_t d = gt.dim();
    if (d == 0 || n == 0) {
        throw InvalidArgument("sample_d1 needs d >= 1 and n >= 1");
    }
    if (!(balance > 0.0 && balance < 1.0)) {
        throw InvalidArgument("balance must lie in (0, 1)");
    }
    const auto want_pos = static_cast<std::size_t>(std::ceil(static_cast<double>(n) * balance));
    if (want_pos < 1 || want_pos >= n) {
        throw InvalidArgument("balance leaves one class empty for n = " + std::to_string(n));
    }
    const std::size_t want_neg = n - want_pos;

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal;
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::vector<double> x;
    x.reserve(n * d);
    std::vector<std::uint8_t> y;
    y.reserve(n);
    std::vector<double> buf(d);
    std::size_t pos = 0;
    std::size_t neg = 0;
    RejectionStats local;
    while (pos < want_pos || neg < want_neg) {
        if (local.raw_draws >= kRejectionDrawBudget) {
            throw NumericalError("rejection sampling exceeded draw budget of 1e7 raw draws");
        }
        ++local.raw_draws;
        for (auto& v : buf) {
            v = normal(rng);
        }
        const bool positive = unif(rng) < sigmoid(gt.logit(buf));
        if (positive ? pos >= want_pos : neg >= want_neg) {
            continue;
        }
        x.insert(x.end(), buf.begin(), buf.end());
        y.push_back(positive ? 1 : 0);
        if (positive) {
            if (++pos == want_pos) {
                local.draws_to_fill_positives = local.raw_draws;
            }
        } else {
            ++neg;
        }
    }

    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) {
        order[i] = i;
    }
    std::mt19937_64 shuffler(combine_seed(seed, 0x5f1));
    std::shuffle(order.begin(), order.end(), shuffler);
    if (stats != nullptr) {
        *stats = local;
    }
    return Dataset(n, d, std::move(x), std::move(y)).select(order);
}

namespace detail {

inline std::string format_double(double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

inline std::vector<std::string_view> split_commas(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        auto p = line.find(',', start);
        if (p == std::string_view::npos) {
            out.push_back(line.substr(start));
            break;
        }
        out.push_back(line.substr(start, p - start));
        start = p + 1;
    }
    return out;
}

} // namespace detail

/// Writes `f0,...,f{d-1},label` followed by one row per instance.
/// Doubles use shortest round-trip formatting.
inline void save_csv(const Dataset& ds, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("cannot open " + path.string() + " for writing");
    }
    for (std::size_t j = 0; j < ds.cols(); ++j) {
        out << 'f' << j << ',';
    }
    out << "label\n";
    std::string line;
    for (std::size_t i = 0; i < ds.rows(); ++i) {
        line.clear();
        for (double v : ds.row(i)) {
            line += detail::format_double(v);
            line += ',';
        }
        line += static_cast<char>('0' + ds.label(i));
        line += '\n';
        out << line;
    }
    if (!out) {
        throw std::runtime_error("write failed for " + path.string());
    }
}

/// Reads a dataset CSV. Any header is accepted as long as its last column is
/// named `label`; errors name the 1-based file line.
inline Dataset load_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("cannot open " + path.string());
    }
    std::string line;
    if (!std::getline(in, line)) {
        throw InvalidArgument(path.string() + ": empty file");
    }
    if (!line.empty() && line.back() == '\r') {
        line.pop_back();
    }
    const auto header = detail::split_commas(line);
    if (header.size() < 2 || header.back() != "label") {
        throw InvalidArgument(path.string() + ": last header column must be 'label'");
    }
    const std::size_t d = header.size() - 1;
    std::vector<double> x;
    std::vector<std::uint8_t> y;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.empty()) {
            continue;
        }
        const auto cells = detail::split_commas(line);
        const std::string where = path.string() + ": row " + std::to_string(lineno);
        if (cells.size() != d + 1) {
            throw InvalidArgument(where + ": expected " + std::to_string(d + 1) +
                                  " cells, found " + std::to_string(cells.size()));
        }
        for (std::size_t j = 0; j < d; ++j) {
            double v = 0.0;
            const auto c = cells[j];
            auto res = std::from_chars(c.data(), c.data() + c.size(), v);
            if (c.empty() || res.ec != std::errc() || res.ptr != c.data() + c.size()) {
                throw InvalidArgument(where + ": non-numeric cell '" + std::string(c) +
                                      "' in column " + std::to_string(j));
            }
            if (!std::isfinite(v)) {
                throw InvalidArgument(where + ": non-finite value in column " +
                                      std::to_string(j));
            }
            x.push_back(v);
        }
        const auto lab = cells[d];
        if (lab != "0" && lab != "1") {
            throw InvalidArgument(where + ": label '" + std::string(lab) + "' is not 0 or 1");
        }
        y.push_back(lab == "1" ? 1 : 0);
    }
    if (y.empty()) {
        throw InvalidArgument(path.string() + ": no data rows");
    }
    const std::size_t n = y.size();
    return Dataset(n, d, std::move(x), std::move(y));
}

} // namespace imblab
