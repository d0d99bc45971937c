// imblab command-line driver: gen-data, tradeoff, sweep, analyze.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "imblab/imblab.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

std::vector<std::string> g_argv;

std::uint64_t env_seed() {
    const char* s = std::getenv("IMBLAB_SEED");
    if (s == nullptr || *s == '\0') {
        return 0;
    }
    try {
        std::size_t pos = 0;
        const auto v = std::stoull(s, &pos);
        if (pos != std::strlen(s)) {
            throw std::invalid_argument("trailing characters");
        }
        return v;
    } catch (const std::exception&) {
        throw imblab::InvalidArgument(std::string("IMBLAB_SEED is not an unsigned integer: '") + s + "'");
    }
}

void ensure_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) {
        throw std::runtime_error("cannot create directory " + dir.string());
    }
}

void write_json(const fs::path& path, const ordered_json& j) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw std::runtime_error("cannot write " + path.string());
    }
    out << j.dump(2) << '\n';
}

ordered_json manifest(std::string_view command, std::uint64_t seed, ordered_json config, ordered_json outputs) {
    ordered_json m;
    m["command"] = command;
    m["version"] = imblab::kVersion;
    m["base_seed"] = seed;
    m["config"] = std::move(config);
    m["outputs"] = std::move(outputs);
    m["argv"] = g_argv;
    return m;
}

// ---------------------------------------------------------------- gen-data

struct GenDataArgs {
    std::size_t d = 50;
    std::size_t n_train = 20000;
    std::size_t n_test = 20000;
    double positive_rate = 0.05;
    std::optional<std::uint64_t> seed;
    std::string out_dir = "data";
};

int cmd_gen_data(const GenDataArgs& a) {
    imblab::GeneratorConfig cfg;
    cfg.d = a.d;
    cfg.n = a.n_train;
    cfg.target_positive_rate = a.positive_rate;
    cfg.seed = a.seed.value_or(env_seed());
    cfg.validate();
    if (a.n_test == 0) {
        throw imblab::InvalidArgument("--n-test must be positive");
    }
    const fs::path dir(a.out_dir);
    ensure_dir(dir);
    write_json(dir / "manifest.json",
               manifest("gen-data", cfg.seed,
                        {{"d", cfg.d},
                         {"n_train", a.n_train},
                         {"n_test", a.n_test},
                         {"positive_rate", cfg.target_positive_rate},
                         {"omega_scale", cfg.omega_scale}},
                        {{"train", (dir / "train.csv").string()},
                         {"test", (dir / "test.csv").string()},
                         {"truth", (dir / "truth.csv").string()}}));

    const auto truth = imblab::make_ground_truth(cfg);
    const auto train = imblab::sample_d0(truth, a.n_train, imblab::combine_seed(cfg.seed, 1));
    const auto test = imblab::sample_d0(truth, a.n_test, imblab::combine_seed(cfg.seed, 2));
    imblab::save_csv(train, dir / "train.csv");
    imblab::save_csv(test, dir / "test.csv");
    {
        std::ofstream out(dir / "truth.csv", std::ios::binary | std::ios::trunc);
        out << "coefficient,value\nintercept," << imblab::detail::format_double(truth.omega0) << '\n';
        for (std::size_t j = 0; j < truth.dim(); ++j) {
            out << 'f' << j << ',' << imblab::detail::format_double(truth.omega[j]) << '\n';
        }
        if (!out) {
            throw std::runtime_error("cannot write " + (dir / "truth.csv").string());
        }
    }
    std::cout << "train: " << train.rows() << " rows, " << train.positives() << " positive\n"
              << "test:  " << test.rows() << " rows, " << test.positives() << " positive\n"
              << "wrote " << dir.string() << '\n';
    return 0;
}

// ---------------------------------------------------------------- tradeoff

struct TradeoffArgs {
    std::size_t d = 100;
    std::size_t n = 120;
    std::size_t replicates = 100;
    std::size_t eval_n = 10000;
    double positive_rate = 0.05;
    double balance = 0.5;
    double ridge = imblab::LogisticFitConfig{}.ridge;
    std::optional<std::uint64_t> seed;
    std::string out_dir = "tradeoff";
};

ordered_json wilcoxon_json(const imblab::stats::WilcoxonResult& w) {
    return {{"n_used", w.n_used}, {"w_plus", w.w_plus}, {"z", w.z}, {"p_greater", w.p_greater}, {"exact", w.exact}};
}

int cmd_tradeoff(const TradeoffArgs& a) {
    imblab::TradeoffConfig cfg;
    cfg.generator.d = a.d;
    cfg.generator.n = a.n;
    cfg.generator.target_positive_rate = a.positive_rate;
    cfg.generator.seed = a.seed.value_or(env_seed());
    cfg.generator.validate();
    cfg.replicates = a.replicates;
    cfg.eval_n = a.eval_n;
    cfg.balance = a.balance;
    cfg.fit.ridge = a.ridge;
    const fs::path dir(a.out_dir);
    ensure_dir(dir);
    write_json(dir / "manifest.json",
               manifest("tradeoff", cfg.generator.seed,
                        {{"d", a.d},
                         {"n", a.n},
                         {"replicates", a.replicates},
                         {"eval_n", a.eval_n},
                         {"positive_rate", a.positive_rate},
                         {"balance", a.balance},
                         {"ridge", cfg.fit.ridge},
                         {"max_iters", cfg.fit.max_iters},
                         {"grad_tol", cfg.fit.grad_tol},
                         {"step_size", cfg.fit.step_size}},
                        {{"replicates", (dir / "replicates.csv").string()},
                         {"histogram", (dir / "histogram.csv").string()},
                         {"scatter", (dir / "scatter.csv").string()},
                         {"summary", (dir / "summary.json").string()}}));

    const auto result = imblab::run_tradeoff_study(cfg);
    imblab::write_tradeoff_outputs(result, dir);
    const auto s = imblab::summarize(result);

    ordered_json j;
    j["replicates"] = s.replicates;
    j["used"] = s.used;
    j["failed"] = s.failed;
    j["failures"] = result.failures;
    j["mean_l2_error"] = {{"D0", s.mean_l2_d0}, {"D1", s.mean_l2_d1}};
    j["mean_mse"] = {{"D0", s.mean_mse_d0}, {"D1", s.mean_mse_d1}};
    j["mean_f1"] = {{"D0", s.mean_f1_d0}, {"D1", s.mean_f1_d1}};
    j["alpha"] = imblab::kTradeoffAlpha;
    j["wilcoxon_l2_d1_greater"] = wilcoxon_json(s.l2_test);
    j["wilcoxon_f1_d1_greater"] = wilcoxon_json(s.f1_test);
    j["verdict_l2_worse_under_d1"] = s.l2_worse_under_d1;
    j["verdict_f1_better_under_d1"] = s.f1_better_under_d1;
    j["low_power"] = s.low_power;
    if (s.low_power) {
        j["warning"] = "low power: fewer than " + std::to_string(imblab::kLowPowerReplicates) +
                       " usable replicates; verdicts are not meaningful";
    }
    write_json(dir / "summary.json", j);

    std::printf("replicates used: %zu of %zu (failed %zu)\n", s.used, s.replicates, s.failed);
    std::printf("mean l2 error    D0 %.4f  D1 %.4f  (Wilcoxon p = %.3g)\n", s.mean_l2_d0, s.mean_l2_d1,
                s.l2_test.p_greater);
    std::printf("mean F1          D0 %.4f  D1 %.4f  (Wilcoxon p = %.3g)\n", s.mean_f1_d0, s.mean_f1_d1,
                s.f1_test.p_greater);
    std::printf("l2 worse under D1:  %s\nF1 better under D1: %s\n", s.l2_worse_under_d1 ? "yes" : "no",
                s.f1_better_under_d1 ? "yes" : "no");
    if (s.low_power) {
        std::fprintf(stderr, "warning: %s\n", j["warning"].get<std::string>().c_str());
    }
    return 0;
}

// ---------------------------------------------------------------- sweep

struct SweepArgs {
    std::string family;
    std::string train;
    std::string test;
    std::string out;
    std::string preset = "desk";
    std::string grid_file;
    std::vector<std::string> axis_overrides;
    std::string pws_grid;
    std::optional<std::uint64_t> seed;
    std::size_t jobs = 1;
    bool quiet = false;
    bool no_wall_time = false;
};

std::string trim(std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    const auto e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream in(s);
    while (std::getline(in, item, ',')) {
        item = trim(item);
        if (item.empty()) {
            throw imblab::InvalidArgument("empty entry in list '" + s + "'");
        }
        out.push_back(item);
    }
    if (out.empty()) {
        throw imblab::InvalidArgument("empty list");
    }
    return out;
}

std::vector<double> parse_pws_grid(const std::string& s) {
    if (s == "full") {
        return imblab::full_pws_grid();
    }
    if (s == "coarse") {
        return imblab::coarse_pws_grid();
    }
    std::vector<double> g;
    for (const auto& item : split_list(s)) {
        std::size_t pos = 0;
        double v = 0.0;
        try {
            v = std::stod(item, &pos);
        } catch (const std::exception&) {
            pos = 0;
        }
        if (pos != item.size()) {
            throw imblab::InvalidArgument("PWS grid entry '" + item + "' is not a number");
        }
        g.push_back(v);
    }
    return g;
}

// `name=v1,v2` for an axis, or `pws_grid=...`.
void apply_override(imblab::GridSpec& spec, const std::string& line, const std::string& where) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
        throw imblab::InvalidArgument(where + ": expected name=value[,value...], got '" + line + "'");
    }
    const auto name = trim(line.substr(0, eq));
    const auto value = trim(line.substr(eq + 1));
    if (name == "pws_grid") {
        spec.pws_grid = parse_pws_grid(value);
        return;
    }
    try {
        spec.axis(name).values = split_list(value);
    } catch (const imblab::InvalidArgument& e) {
        throw imblab::InvalidArgument(where + ": " + e.what());
    }
}

void load_grid_file(imblab::GridSpec& spec, const fs::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot read grid file " + path.string());
    }
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
        ++n;
        line = trim(line);
        if (line.empty() || line[0] == '#') {
            continue;
        }
        apply_override(spec, line, path.string() + " line " + std::to_string(n));
    }
}

void print_baselines(const std::vector<imblab::SweepRecord>& records) {
    // Per group: the test-F1-optimal gamma against the fixed gammas 10 and 100.
    struct Row {
        const char* label;
        std::vector<double> f1;
        std::vector<double> err;
        std::vector<double> gamma;
    };
    Row opt{"opt", {}, {}, {}};
    Row w10{"w.10", {}, {}, {}};
    Row w100{"w.100", {}, {}, {}};
    const imblab::SweepRecord* best = nullptr;
    for (const auto& key : imblab::group_keys(records)) {
        const auto top = imblab::best_pws(records, key, 1, imblab::RankMode::test);
        if (!top.empty() && top[0].score) {
            const auto& r = records[top[0].record];
            opt.f1.push_back(*r.f1_test);
            opt.err.push_back(r.error_test.value_or(0.0));
            opt.gamma.push_back(r.gamma);
            if (best == nullptr || *r.f1_test > *best->f1_test) {
                best = &r;
            }
        }
        for (const auto& r : records) {
            if (r.group_key() != key || !r.error_msg.empty()) {
                continue;
            }
            Row* row = r.gamma == 10.0 ? &w10 : r.gamma == 100.0 ? &w100 : nullptr;
            if (row != nullptr) {
                row->f1.push_back(r.f1_test.value_or(0.0));
                row->err.push_back(r.error_test.value_or(0.0));
                row->gamma.push_back(r.gamma);
            }
        }
    }
    std::printf("\nbaseline comparison over %zu configs (test metrics, mean across configs)\n",
                imblab::group_keys(records).size());
    std::printf("  %-6s %8s %8s %10s %8s\n", "row", "configs", "F1", "error", "PWS");
    for (const Row* row : {&opt, &w10, &w100}) {
        if (row->f1.empty()) {
            std::printf("  %-6s %8s\n", row->label, "n/a");
            continue;
        }
        std::printf("  %-6s %8zu %8.4f %10.4f %8.1f\n", row->label, row->f1.size(), imblab::stats::mean(row->f1),
                    imblab::stats::mean(row->err), imblab::stats::mean(row->gamma));
    }
    if (best != nullptr) {
        std::printf("best single model: F1 %.4f at PWS %s (%s)\n", *best->f1_test,
                    imblab::format_number(best->gamma).c_str(), best->group_key().c_str());
    }
}

int cmd_sweep(const SweepArgs& a) {
    const auto family = imblab::family_from_string(a.family);
    imblab::GridSpec spec;
    if (a.preset == "desk") {
        spec = imblab::GridSpec::desk(family);
    } else if (a.preset == "full") {
        spec = imblab::GridSpec::full(family);
    } else {
        throw imblab::InvalidArgument("--preset must be desk or full");
    }
    if (!a.grid_file.empty()) {
        load_grid_file(spec, a.grid_file);
    }
    for (const auto& o : a.axis_overrides) {
        apply_override(spec, o, "--axis");
    }
    if (!a.pws_grid.empty()) {
        spec.pws_grid = parse_pws_grid(a.pws_grid);
    }
    spec.base_seed = a.seed.value_or(env_seed());
    spec.validate();
    if (a.jobs == 0) {
        throw imblab::InvalidArgument("--jobs must be positive");
    }

    const fs::path out(a.out);
    if (out.has_parent_path()) {
        ensure_dir(out.parent_path());
    }
    ordered_json axes = ordered_json::object();
    for (const auto& ax : spec.axes) {
        axes[ax.name] = ax.values;
    }
    const auto cells = imblab::enumerate_grid(spec);
    write_json(fs::path(out.string() + ".manifest.json"),
               manifest("sweep", spec.base_seed,
                        {{"family", imblab::to_string(family)},
                         {"preset", a.preset},
                         {"grid_file", a.grid_file},
                         {"axes", axes},
                         {"pws_grid", spec.pws_grid},
                         {"cells", cells.size()},
                         {"train", a.train},
                         {"test", a.test},
                         {"jobs", a.jobs},
                         {"record_wall_time", !a.no_wall_time}},
                        {{"sweep", out.string()}}));

    const auto train = imblab::load_csv(a.train);
    const auto test = imblab::load_csv(a.test);
    imblab::SweepOptions opts;
    opts.jobs = a.jobs;
    opts.record_wall_time = !a.no_wall_time;
    std::size_t step = 0;
    if (!a.quiet) {
        opts.on_progress = [&](const imblab::SweepProgress& p) {
            const std::size_t pct = p.total == 0 ? 100 : 100 * p.done / p.total;
            if (pct >= step || p.done == p.total) {
                std::fprintf(stderr, "\r[%zu/%zu] %3zu%%", p.done, p.total, pct);
                step = pct + 5;
                if (p.done == p.total) {
                    std::fputc('\n', stderr);
                }
            }
        };
    }
    const auto written = imblab::run_sweep(spec, train, test, out, opts);
    const auto records = imblab::read_sweep_csv(out);
    std::size_t failed = 0;
    for (const auto& r : records) {
        failed += !r.error_msg.empty();
    }
    std::printf("%zu cells in grid, %zu new records, %zu total in %s, %zu recorded failures\n", cells.size(),
                written, records.size(), out.string().c_str(), failed);
    print_baselines(records);
    return 0;
}

// ---------------------------------------------------------------- analyze

struct AnalyzeArgs {
    std::string sweep;
    std::string family;
    std::vector<std::size_t> k{1, 3, 5};
    std::vector<std::string> modes{"train", "test"};
    std::optional<std::size_t> min_estimators;
    bool with_ensemble_covariate = false;
    std::string out_dir = "analysis";
};

int cmd_analyze(const AnalyzeArgs& a) {
    const auto family = imblab::family_from_string(a.family);
    auto opts = imblab::DesignOptions::defaults_for(family);
    if (a.min_estimators) {
        opts.min_estimators = *a.min_estimators == 0 ? std::nullopt : a.min_estimators;
    }
    opts.with_ensemble_covariate = a.with_ensemble_covariate;
    std::vector<imblab::RankMode> modes;
    for (const auto& m : a.modes) {
        modes.push_back(imblab::rank_mode_from_string(m));
    }
    for (auto k : a.k) {
        if (k == 0) {
            throw imblab::InvalidArgument("--k values must be positive");
        }
    }
    const fs::path dir(a.out_dir);
    ensure_dir(dir);
    write_json(dir / "manifest.json",
               manifest("analyze", 0,
                        {{"sweep", a.sweep},
                         {"family", imblab::to_string(family)},
                         {"k", a.k},
                         {"mode", a.modes},
                         {"min_estimators", opts.min_estimators ? ordered_json(*opts.min_estimators)
                                                                 : ordered_json(nullptr)},
                         {"with_ensemble_covariate", opts.with_ensemble_covariate}},
                        {{"csv", (dir / "regression.csv").string()},
                         {"table", (dir / "regression.txt").string()}}));

    const auto records = imblab::read_sweep_csv(a.sweep);
    const auto results = imblab::analyze_family(records, family, a.k, modes, opts);
    {
        std::ofstream csv(dir / "regression.csv", std::ios::binary | std::ios::trunc);
        imblab::write_regression_csv(csv, results);
        std::ofstream txt(dir / "regression.txt", std::ios::binary | std::ios::trunc);
        imblab::write_regression_table(txt, results);
        if (!csv || !txt) {
            throw std::runtime_error("cannot write outputs under " + dir.string());
        }
    }
    imblab::write_regression_table(std::cout, results);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    g_argv.assign(argv, argv + argc);
    CLI::App app{"imblab: positive weight scalar experiments on imbalanced binary data"};
    app.set_version_flag("--version", std::string(imblab::kVersion));
    app.require_subcommand(1);

    GenDataArgs gen;
    auto* g = app.add_subcommand("gen-data", "Generate a synthetic train/test pair");
    g->add_option("--d", gen.d, "Feature dimension")->capture_default_str();
    g->add_option("--n-train", gen.n_train, "Training rows")->capture_default_str();
    g->add_option("--n-test", gen.n_test, "Test rows")->capture_default_str();
    g->add_option("--positive-rate", gen.positive_rate, "Target positive rate")->capture_default_str();
    g->add_option("--seed", gen.seed, "Base seed (default: $IMBLAB_SEED or 0)");
    g->add_option("--out-dir", gen.out_dir, "Output directory")->capture_default_str();

    TradeoffArgs tr;
    auto* t = app.add_subcommand("tradeoff", "Paired D0/D1 logistic study");
    t->add_option("--d", tr.d, "Feature dimension")->capture_default_str();
    t->add_option("--n", tr.n, "Rows per replicate sample")->capture_default_str();
    t->add_option("--replicates", tr.replicates, "Replicate pairs")->capture_default_str();
    t->add_option("--eval-n", tr.eval_n, "Rows in each evaluation sample")->capture_default_str();
    t->add_option("--positive-rate", tr.positive_rate, "D0 positive rate")->capture_default_str();
    t->add_option("--balance", tr.balance, "D1 positive fraction")->capture_default_str();
    t->add_option("--ridge", tr.ridge, "Logistic ridge penalty")->capture_default_str();
    t->add_option("--seed", tr.seed, "Base seed (default: $IMBLAB_SEED or 0)");
    t->add_option("--out-dir", tr.out_dir, "Output directory")->capture_default_str();

    SweepArgs sw;
    auto* s = app.add_subcommand("sweep", "Grid search over hyperparameters and PWS");
    s->add_option("--family", sw.family,
                  "gbdt_lightgbm_like | gbdt_catboost_like | mlp_weighted_cost | mlp_resample | logistic")
        ->required();
    s->add_option("--train", sw.train, "Training CSV")->required();
    s->add_option("--test", sw.test, "Test CSV")->required();
    s->add_option("--out", sw.out, "Sweep CSV (resumed if present)")->required();
    s->add_option("--preset", sw.preset, "Base grid: desk or full")->capture_default_str();
    s->add_option("--grid-file", sw.grid_file, "Axis overrides, one name=v1,v2 per line");
    s->add_option("--axis", sw.axis_overrides, "Axis override name=v1,v2 (repeatable)");
    s->add_option("--pws-grid", sw.pws_grid, "coarse, full, or a comma list");
    s->add_option("--seed", sw.seed, "Base seed (default: $IMBLAB_SEED or 0)");
    s->add_option("--jobs", sw.jobs, "Worker threads")->capture_default_str();
    s->add_flag("--quiet", sw.quiet, "No progress output");
    s->add_flag("--no-wall-time", sw.no_wall_time, "Write 0 for wall_time_seconds (byte-reproducible output)");

    AnalyzeArgs an;
    auto* z = app.add_subcommand("analyze", "Regress top-k PWS on hyperparameters");
    z->add_option("--sweep", an.sweep, "Sweep CSV")->required();
    z->add_option("--family", an.family, "Model family of the sweep")->required();
    z->add_option("--k", an.k, "Top-k values")->delimiter(',')->capture_default_str();
    z->add_option("--mode", an.modes, "train and/or test")->delimiter(',')->capture_default_str();
    z->add_option("--min-estimators", an.min_estimators, "Keep gbdt models with at least this many trees (0: all)");
    z->add_flag("--with-ensemble-covariate", an.with_ensemble_covariate, "Add f1_train as a covariate");
    z->add_option("--out-dir", an.out_dir, "Output directory")->capture_default_str();

    CLI11_PARSE(app, argc, argv);
    try {
        if (*g) {
            return cmd_gen_data(gen);
        }
        if (*t) {
            return cmd_tradeoff(tr);
        }
        if (*s) {
            return cmd_sweep(sw);
        }
        return cmd_analyze(an);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
