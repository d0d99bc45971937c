#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <thread>
#include <unordered_map>
#include <utility>
#include <vector>

#include "imblab/common.hpp"
#include "imblab/dataio.hpp"
#include "imblab/dataset.hpp"
#include "imblab/gbdt.hpp"
#include "imblab/linear_model.hpp"
#include "imblab/metrics.hpp"
#include "imblab/mlp.hpp"
#include "imblab/reweight.hpp"

namespace imblab {

enum class Family { gbdt_lightgbm_like, gbdt_catboost_like, mlp_weighted_cost, mlp_resample, logistic };

inline std::string_view to_string(Family f) {
    switch (f) {
    case Family::gbdt_lightgbm_like:
        return "gbdt_lightgbm_like";
    case Family::gbdt_catboost_like:
        return "gbdt_catboost_like";
    case Family::mlp_weighted_cost:
        return "mlp_weighted_cost";
    case Family::mlp_resample:
        return "mlp_resample";
    case Family::logistic:
        return "logistic";
    }
    return "?";
}

inline Family family_from_string(std::string_view s) {
    for (auto f : {Family::gbdt_lightgbm_like, Family::gbdt_catboost_like, Family::mlp_weighted_cost,
                   Family::mlp_resample, Family::logistic}) {
        if (to_string(f) == s) {
            return f;
        }
    }
    throw InvalidArgument("unknown model family '" + std::string(s) + "'");
}

inline bool is_gbdt(Family f) {
    return f == Family::gbdt_lightgbm_like || f == Family::gbdt_catboost_like;
}
inline bool is_mlp(Family f) { return f == Family::mlp_weighted_cost || f == Family::mlp_resample; }

/// Hyperparameter axes of each family, in CSV column order.
inline std::vector<std::string> axis_names(Family f) {
    switch (f) {
    case Family::gbdt_lightgbm_like:
        return {"n_estimators", "learning_rate", "max_depth", "num_leaves"};
    case Family::gbdt_catboost_like:
        return {"n_estimators", "learning_rate", "max_depth"};
    case Family::mlp_weighted_cost:
    case Family::mlp_resample:
        return {"hidden_size", "n_layers", "init_scale", "batchnorm", "learning_rate", "momentum",
                "batch_size", "epochs"};
    case Family::logistic:
        return {"ridge"};
    }
    return {};
}

inline std::string format_number(double v) { return detail::format_double(v); }

/// 1, 2, ..., 150.
inline std::vector<double> full_pws_grid() {
    std::vector<double> g;
    for (int i = 1; i <= 150; ++i) {
        g.push_back(i);
    }
    return g;
}

/// Roughly geometric desk-scale subgrid of 1..150.
inline std::vector<double> coarse_pws_grid() {
    return {1, 2, 3, 5, 7, 10, 14, 20, 28, 40, 57, 80, 113, 150};
}

struct Axis {
    std::string name;
    std::vector<std::string> values;
};

using HyperParams = std::vector<std::pair<std::string, std::string>>;

inline std::string group_key_of(Family f, const HyperParams& hp) {
    std::string key(to_string(f));
    for (const auto& [k, v] : hp) {
        key += '|';
        key += k;
        key += '=';
        key += v;
    }
    return key;
}

struct GridSpec {
    Family family = Family::gbdt_lightgbm_like;
    std::vector<Axis> axes;
    std::vector<double> pws_grid = full_pws_grid();
    std::uint64_t base_seed = 0;

    void validate() const {
        const auto names = axis_names(family);
        if (axes.size() != names.size()) {
            throw InvalidArgument("grid for " + std::string(to_string(family)) + " needs " +
                                  std::to_string(names.size()) + " axes");
        }
        for (std::size_t a = 0; a < axes.size(); ++a) {
            if (axes[a].name != names[a]) {
                throw InvalidArgument("axis " + std::to_string(a) + " must be '" + names[a] + "'");
            }
            if (axes[a].values.empty()) {
                throw InvalidArgument("axis '" + axes[a].name + "' is empty");
            }
        }
        if (pws_grid.empty()) {
            throw InvalidArgument("PWS grid is empty");
        }
        for (std::size_t i = 0; i < pws_grid.size(); ++i) {
            if (!(pws_grid[i] >= 1.0) || !std::isfinite(pws_grid[i])) {
                throw InvalidArgument("PWS grid values must be finite and >= 1");
            }
            if (i > 0 && !(pws_grid[i] > pws_grid[i - 1])) {
                throw InvalidArgument("PWS grid must be strictly increasing");
            }
        }
    }

    Axis& axis(std::string_view name) {
        for (auto& a : axes) {
            if (a.name == name) {
                return a;
            }
        }
        throw InvalidArgument("no axis named '" + std::string(name) + "'");
    }

    /// Full-scale grids; the lightgbm-like one alone is 37,800 fits.
    static GridSpec full(Family f) {
        GridSpec g;
        g.family = f;
        const std::vector<std::string> trees{"100", "500", "1000", "2000", "5000", "8000", "10000"};
        switch (f) {
        case Family::gbdt_lightgbm_like:
            g.axes = {{"n_estimators", trees},
                      {"learning_rate", {"0.1", "0.05", "0.01"}},
                      {"max_depth", {"4", "5", "7"}},
                      {"num_leaves", {"100", "300", "500", "1000"}}};
            break;
        case Family::gbdt_catboost_like:
            g.axes = {{"n_estimators", trees},
                      {"learning_rate", {"0.1", "0.05", "0.01"}},
                      {"max_depth", {"4", "5", "7"}}};
            break;
        case Family::mlp_weighted_cost:
        case Family::mlp_resample:
            g.axes = {{"hidden_size", {"50", "100"}},
                      {"n_layers", {"1", "2"}},
                      {"init_scale", {"1", "0.1"}},
                      {"batchnorm", {"none", "after_input", "every_layer"}},
                      {"learning_rate", {"0.1", "0.01", "0.001", "0.0001"}},
                      {"momentum", {"0.1", "0.9"}},
                      {"batch_size", {"128"}},
                      {"epochs", {"30"}}};
            break;
        case Family::logistic:
            g.axes = {{"ridge", {"0.01"}}};
            break;
        }
        return g;
    }

    /// Grids sized for a single workstation with the coarse PWS grid.
    static GridSpec desk(Family f) {
        GridSpec g;
        g.family = f;
        g.pws_grid = coarse_pws_grid();
        switch (f) {
        case Family::gbdt_lightgbm_like:
            g.axes = {{"n_estimators", {"25", "50", "100", "200"}},
                      {"learning_rate", {"0.1", "0.05"}},
                      {"max_depth", {"3", "5"}},
                      {"num_leaves", {"8", "31"}}};
            break;
        case Family::gbdt_catboost_like:
            g.axes = {{"n_estimators", {"25", "50", "100", "200"}},
                      {"learning_rate", {"0.1", "0.05"}},
                      {"max_depth", {"3", "5"}}};
            break;
        case Family::mlp_weighted_cost:
        case Family::mlp_resample:
            g.axes = {{"hidden_size", {"50", "100"}},
                      {"n_layers", {"1", "2"}},
                      {"init_scale", {"1"}},
                      {"batchnorm", {"none", "every_layer"}},
                      {"learning_rate", {"0.01"}},
                      {"momentum", {"0.9"}},
                      {"batch_size", {"128"}},
                      {"epochs", {"10"}}};
            break;
        case Family::logistic:
            g.axes = {{"ridge", {"0.01", "1"}}};
            break;
        }
        return g;
    }
};

struct SweepCell {
    std::size_t index = 0;
    Family family = Family::gbdt_lightgbm_like;
    HyperParams hyper;
    double gamma = 1.0;
    std::uint64_t seed = 0;

    std::string group_key() const { return group_key_of(family, hyper); }
    std::string identity() const {
        return group_key() + "|gamma=" + format_number(gamma) + "|seed=" + std::to_string(seed);
    }
};

/// Cartesian product of the axes (first axis slowest) times the PWS grid
/// (fastest). Each cell's seed hashes the base seed with the cell's
/// hyperparameters and gamma.
inline std::vector<SweepCell> enumerate_grid(const GridSpec& spec) {
    spec.validate();
    std::vector<SweepCell> cells;
    std::vector<std::size_t> pos(spec.axes.size(), 0);
    while (true) {
        HyperParams hp;
        for (std::size_t a = 0; a < spec.axes.size(); ++a) {
            hp.emplace_back(spec.axes[a].name, spec.axes[a].values[pos[a]]);
        }
        const std::string group = group_key_of(spec.family, hp);
        for (double g : spec.pws_grid) {
            SweepCell c;
            c.index = cells.size();
            c.family = spec.family;
            c.hyper = hp;
            c.gamma = g;
            c.seed = hash_string(group + "|gamma=" + format_number(g), spec.base_seed);
            cells.push_back(std::move(c));
        }
        std::size_t a = spec.axes.size();
        while (a > 0) {
            --a;
            if (++pos[a] < spec.axes[a].values.size()) {
                break;
            }
            pos[a] = 0;
            if (a == 0) {
                return cells;
            }
        }
        if (spec.axes.empty()) {
            return cells;
        }
    }
}

struct SweepRecord {
    Family family = Family::gbdt_lightgbm_like;
    HyperParams hyper;
    double gamma = 1.0;
    std::uint64_t seed = 0;
    Metric f1_train;
    Metric error_train;
    Metric f1_test;
    Metric error_test;
    Metric precision_test;
    Metric recall_test;
    Metric auc_test;
    double wall_time_seconds = 0.0;
    std::string error_msg;

    std::string group_key() const { return group_key_of(family, hyper); }
    std::string identity() const {
        return group_key() + "|gamma=" + format_number(gamma) + "|seed=" + std::to_string(seed);
    }

    const std::string& value(std::string_view axis) const {
        for (const auto& [k, v] : hyper) {
            if (k == axis) {
                return v;
            }
        }
        throw InvalidArgument("record has no axis '" + std::string(axis) + "'");
    }

    double numeric(std::string_view axis) const {
        const auto& s = value(axis);
        double v = 0.0;
        auto res = std::from_chars(s.data(), s.data() + s.size(), v);
        if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
            throw InvalidArgument("axis '" + std::string(axis) + "' value '" + s + "' is not numeric");
        }
        return v;
    }
};

inline constexpr std::string_view kSweepMetricColumns =
    "gamma,seed,f1_train,error_train,f1_test,error_test,precision_test,recall_test,auc_test,"
    "wall_time_seconds,error_msg";

inline std::string sweep_header(Family f) {
    std::string h = "family";
    for (const auto& a : axis_names(f)) {
        h += ',';
        h += a;
    }
    h += ',';
    h += kSweepMetricColumns;
    return h;
}

namespace detail {

inline std::string metric_cell(const Metric& m) { return m ? format_double(*m) : std::string(); }

inline std::string sanitize_message(std::string s) {
    for (auto& c : s) {
        if (c == ',' || c == '\n' || c == '\r') {
            c = ';';
        }
    }
    return s;
}

inline Metric parse_metric(std::string_view s, const std::string& where) {
    if (s.empty()) {
        return std::nullopt;
    }
    double v = 0.0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
        throw InvalidArgument(where + ": bad numeric cell '" + std::string(s) + "'");
    }
    return v;
}

} // namespace detail

inline std::string to_csv_row(const SweepRecord& r) {
    std::string line(to_string(r.family));
    for (const auto& [k, v] : r.hyper) {
        line += ',';
        line += v;
    }
    char wall[32];
    std::snprintf(wall, sizeof(wall), "%.6f", r.wall_time_seconds);
    line += ',' + format_number(r.gamma) + ',' + std::to_string(r.seed);
    for (const auto* m : {&r.f1_train, &r.error_train, &r.f1_test, &r.error_test, &r.precision_test,
                          &r.recall_test, &r.auc_test}) {
        line += ',' + detail::metric_cell(*m);
    }
    line += ',';
    line += wall;
    line += ',' + detail::sanitize_message(r.error_msg);
    return line;
}

/// Parses a sweep CSV written by run_sweep. All rows must share one family.
inline std::vector<SweepRecord> read_sweep_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("cannot open " + path.string());
    }
    std::string line;
    if (!std::getline(in, line)) {
        return {};
    }
    const auto header = detail::split_commas(line);
    std::vector<std::string> axes;
    std::size_t gamma_col = 0;
    for (std::size_t c = 1; c < header.size(); ++c) {
        if (header[c] == "gamma") {
            gamma_col = c;
            break;
        }
        axes.emplace_back(header[c]);
    }
    if (header.empty() || header[0] != "family" || gamma_col == 0 ||
        header.size() != gamma_col + 11) {
        throw InvalidArgument(path.string() + ": not a sweep CSV header");
    }
    std::vector<SweepRecord> out;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) {
            continue;
        }
        const auto cells = detail::split_commas(line);
        const std::string where = path.string() + ": row " + std::to_string(lineno);
        if (cells.size() != header.size()) {
            throw InvalidArgument(where + ": wrong cell count");
        }
        SweepRecord r;
        r.family = family_from_string(cells[0]);
        if (axis_names(r.family) != axes) {
            throw InvalidArgument(where + ": columns do not match family " + std::string(cells[0]));
        }
        for (std::size_t a = 0; a < axes.size(); ++a) {
            r.hyper.emplace_back(axes[a], std::string(cells[1 + a]));
        }
        std::size_t c = gamma_col;
        r.gamma = detail::parse_metric(cells[c++], where).value_or(0.0);
        {
            const auto s = cells[c++];
            auto res = std::from_chars(s.data(), s.data() + s.size(), r.seed);
            if (res.ec != std::errc()) {
                throw InvalidArgument(where + ": bad seed");
            }
        }
        for (auto* m : {&r.f1_train, &r.error_train, &r.f1_test, &r.error_test, &r.precision_test,
                        &r.recall_test, &r.auc_test}) {
            *m = detail::parse_metric(cells[c++], where);
        }
        r.wall_time_seconds = detail::parse_metric(cells[c++], where).value_or(0.0);
        r.error_msg = std::string(cells[c++]);
        out.push_back(std::move(r));
    }
    return out;
}

inline void write_sweep_csv(const std::filesystem::path& path, Family f,
                            const std::vector<SweepRecord>& records) {
    const auto tmp = std::filesystem::path(path.string() + ".tmp");
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw std::runtime_error("cannot write " + tmp.string());
        }
        out << sweep_header(f) << '\n';
        for (const auto& r : records) {
            out << to_csv_row(r) << '\n';
        }
    }
    std::filesystem::rename(tmp, path);
}

namespace detail {

inline std::size_t to_size(const std::string& s, std::string_view name) {
    std::size_t v = 0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
        throw InvalidArgument(std::string(name) + " must be a non-negative integer, got '" + s + "'");
    }
    return v;
}

inline double to_real(const std::string& s, std::string_view name) {
    double v = 0.0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
        throw InvalidArgument(std::string(name) + " must be numeric, got '" + s + "'");
    }
    return v;
}

inline const std::string& lookup(const HyperParams& hp, std::string_view name) {
    for (const auto& [k, v] : hp) {
        if (k == name) {
            return v;
        }
    }
    throw InvalidArgument("missing hyperparameter '" + std::string(name) + "'");
}

inline BatchNormPlacement parse_batchnorm(const std::string& s) {
    if (s == "none") {
        return BatchNormPlacement::none;
    }
    if (s == "after_input") {
        return BatchNormPlacement::after_input;
    }
    if (s == "every_layer") {
        return BatchNormPlacement::every_layer;
    }
    throw InvalidArgument("batchnorm must be none, after_input or every_layer, got '" + s + "'");
}

} // namespace detail

inline GbdtConfig gbdt_config_of(Family f, const HyperParams& hp) {
    GbdtConfig c;
    c.n_estimators = detail::to_size(detail::lookup(hp, "n_estimators"), "n_estimators");
    c.learning_rate = detail::to_real(detail::lookup(hp, "learning_rate"), "learning_rate");
    c.max_depth = detail::to_size(detail::lookup(hp, "max_depth"), "max_depth");
    if (f == Family::gbdt_catboost_like) {
        // symmetric-tree analog: leaf count follows from depth, not tunable
        c.max_leaves = c.max_depth >= 63 ? std::size_t{1} << 62 : std::size_t{1} << c.max_depth;
    } else {
        c.max_leaves = detail::to_size(detail::lookup(hp, "num_leaves"), "num_leaves");
    }
    return c;
}

inline MlpConfig mlp_config_of(const HyperParams& hp) {
    MlpConfig c;
    c.hidden_size = detail::to_size(detail::lookup(hp, "hidden_size"), "hidden_size");
    c.n_layers = detail::to_size(detail::lookup(hp, "n_layers"), "n_layers");
    c.init_scale = detail::to_real(detail::lookup(hp, "init_scale"), "init_scale");
    c.batchnorm = detail::parse_batchnorm(detail::lookup(hp, "batchnorm"));
    c.learning_rate = detail::to_real(detail::lookup(hp, "learning_rate"), "learning_rate");
    c.momentum = detail::to_real(detail::lookup(hp, "momentum"), "momentum");
    c.batch_size = detail::to_size(detail::lookup(hp, "batch_size"), "batch_size");
    c.epochs = detail::to_size(detail::lookup(hp, "epochs"), "epochs");
    return c;
}

/// Trains the cell's model on `train` and scores both splits. Trainer
/// failures are captured in error_msg with all metrics left undefined.
inline SweepRecord run_cell(const SweepCell& cell, const Dataset& train, const Dataset& test,
                            std::uint64_t base_seed = 0) {
    SweepRecord rec;
    rec.family = cell.family;
    rec.hyper = cell.hyper;
    rec.gamma = cell.gamma;
    rec.seed = cell.seed;
    const auto t0 = std::chrono::steady_clock::now();
    try {
        std::vector<double> s_train;
        std::vector<double> s_test;
        switch (cell.family) {
        case Family::gbdt_lightgbm_like:
        case Family::gbdt_catboost_like: {
            const auto cfg = gbdt_config_of(cell.family, cell.hyper);
            const auto fit = fit_gbdt(apply_weights(train, {cell.gamma, PwsMode::weighted_cost}), cfg);
            s_train = predict_gbdt(fit.model, train);
            s_test = predict_gbdt(fit.model, test);
            break;
        }
        case Family::mlp_weighted_cost:
        case Family::mlp_resample: {
            auto cfg = mlp_config_of(cell.hyper);
            // initialization and batch order shared by every gamma of a group
            cfg.seed = hash_string(cell.group_key(), base_seed);
            const PwsConfig pws{cell.gamma,
                                cell.family == Family::mlp_resample ? PwsMode::resample
                                                                    : PwsMode::weighted_cost,
                                cell.seed};
            const auto fit = fit_mlp(train, cfg, pws);
            s_train = predict_mlp(fit.model, train);
            s_test = predict_mlp(fit.model, test);
            break;
        }
        case Family::logistic: {
            LogisticFitConfig cfg;
            cfg.ridge = detail::to_real(detail::lookup(cell.hyper, "ridge"), "ridge");
            const auto fit = fit_logistic(apply_weights(train, {cell.gamma}), cfg);
            s_train = predict_logistic(fit.params, train);
            s_test = predict_logistic(fit.params, test);
            break;
        }
        }
        const auto tr = evaluate(train, s_train);
        const auto te = evaluate(test, s_test);
        rec.f1_train = tr.f1;
        rec.error_train = tr.error;
        rec.f1_test = te.f1;
        rec.error_test = te.error;
        rec.precision_test = te.precision;
        rec.recall_test = te.recall;
        rec.auc_test = te.auc;
    } catch (const std::exception& e) {
        rec.error_msg = e.what();
        if (rec.error_msg.empty()) {
            rec.error_msg = "trainer failed";
        }
    }
    rec.wall_time_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return rec;
}

struct SweepProgress {
    std::size_t done = 0;
    std::size_t total = 0;
    const SweepRecord* last = nullptr;
};

struct SweepOptions {
    std::size_t jobs = 1;
    // When false, wall_time_seconds is written as 0 so reruns are byte-identical.
    bool record_wall_time = true;
    std::function<void(const SweepProgress&)> on_progress;
};

/// Runs every grid cell missing from `out_path`, appending one CSV row per
/// finished cell, then rewrites the file sorted by grid order (rows from
/// other grids follow, sorted by identity). Returns the number of new rows.
inline std::size_t run_sweep(const GridSpec& spec, const Dataset& train, const Dataset& test,
                             const std::filesystem::path& out_path, const SweepOptions& opts = {}) {
    spec.validate();
    if (train.cols() != test.cols()) {
        throw InvalidArgument("train and test have different feature counts");
    }
    if (train.positives() == 0 || train.negatives() == 0) {
        throw InvalidArgument("training data must contain both classes");
    }
    const auto cells = enumerate_grid(spec);
    const std::string header = sweep_header(spec.family);

    std::vector<SweepRecord> existing;
    if (std::filesystem::exists(out_path) && std::filesystem::file_size(out_path) > 0) {
        std::ifstream probe(out_path, std::ios::binary);
        std::string first;
        std::getline(probe, first);
        if (first != header) {
            throw InvalidArgument(out_path.string() + ": header does not match family " +
                                  std::string(to_string(spec.family)));
        }
        existing = read_sweep_csv(out_path);
    } else {
        std::ofstream out(out_path, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw std::runtime_error("cannot write " + out_path.string());
        }
        out << header << '\n';
    }
    std::set<std::string> have;
    for (const auto& r : existing) {
        have.insert(r.identity());
    }
    std::vector<const SweepCell*> todo;
    for (const auto& c : cells) {
        if (!have.count(c.identity())) {
            todo.push_back(&c);
        }
    }

    std::ofstream sink(out_path, std::ios::binary | std::ios::app);
    if (!sink) {
        throw std::runtime_error("cannot append to " + out_path.string());
    }
    std::mutex sink_mutex;
    std::atomic<std::size_t> next{0};
    std::size_t done = 0;
    auto worker = [&] {
        while (true) {
            const std::size_t i = next.fetch_add(1);
            if (i >= todo.size()) {
                return;
            }
            auto rec = run_cell(*todo[i], train, test, spec.base_seed);
            if (!opts.record_wall_time) {
                rec.wall_time_seconds = 0.0;
            }
            std::lock_guard<std::mutex> lock(sink_mutex);
            sink << to_csv_row(rec) << '\n';
            sink.flush();
            ++done;
            if (opts.on_progress) {
                opts.on_progress({done, todo.size(), &rec});
            }
        }
    };
    const std::size_t jobs = std::max<std::size_t>(1, std::min(opts.jobs, todo.size()));
    if (jobs == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t j = 0; j < jobs; ++j) {
            pool.emplace_back(worker);
        }
        for (auto& t : pool) {
            t.join();
        }
    }
    sink.close();

    auto all = read_sweep_csv(out_path);
    std::unordered_map<std::string, std::size_t> order;
    for (const auto& c : cells) {
        order.emplace(c.identity(), c.index);
    }
    std::vector<std::pair<std::pair<std::size_t, std::string>, std::size_t>> keys;
    for (std::size_t i = 0; i < all.size(); ++i) {
        auto id = all[i].identity();
        auto it = order.find(id);
        keys.push_back({{it == order.end() ? cells.size() : it->second, std::move(id)}, i});
    }
    std::sort(keys.begin(), keys.end());
    std::vector<SweepRecord> sorted;
    std::string last_id;
    for (const auto& [k, i] : keys) {
        if (!sorted.empty() && k.second == last_id) {
            continue; // duplicate cell from an interrupted append
        }
        last_id = k.second;
        sorted.push_back(std::move(all[i]));
    }
    write_sweep_csv(out_path, spec.family, sorted);
    return done;
}

enum class RankMode { train, test };

inline std::string_view to_string(RankMode m) { return m == RankMode::train ? "train" : "test"; }

inline RankMode rank_mode_from_string(std::string_view s) {
    if (s == "train") {
        return RankMode::train;
    }
    if (s == "test") {
        return RankMode::test;
    }
    throw InvalidArgument("mode must be train or test, got '" + std::string(s) + "'");
}

struct RankedPws {
    double gamma = 1.0;
    Metric score;
    std::size_t record = 0; // index into the input records
};

/// The k best gammas of one hyperparameter group by train or test F1.
/// Ties go to the smaller gamma; undefined F1 ranks below every defined value.
inline std::vector<RankedPws> best_pws(std::span<const SweepRecord> records, std::string_view group,
                                       std::size_t k, RankMode mode) {
    std::vector<RankedPws> cand;
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto& r = records[i];
        if (r.group_key() != group) {
            continue;
        }
        cand.push_back({r.gamma, mode == RankMode::train ? r.f1_train : r.f1_test, i});
    }
    std::sort(cand.begin(), cand.end(), [](const RankedPws& a, const RankedPws& b) {
        if (a.score.has_value() != b.score.has_value()) {
            return a.score.has_value();
        }
        if (a.score && *a.score != *b.score) {
            return *a.score > *b.score;
        }
        if (a.gamma != b.gamma) {
            return a.gamma < b.gamma;
        }
        return a.record < b.record;
    });
    if (cand.size() > k) {
        cand.resize(k);
    }
    return cand;
}

/// Distinct group keys in order of first appearance.
inline std::vector<std::string> group_keys(std::span<const SweepRecord> records) {
    std::vector<std::string> keys;
    std::set<std::string> seen;
    for (const auto& r : records) {
        auto k = r.group_key();
        if (seen.insert(k).second) {
            keys.push_back(std::move(k));
        }
    }
    return keys;
}

} // namespace imblab
