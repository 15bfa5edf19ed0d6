// panel-dml: simulate panel DGPs, run a single estimator, sweep a Monte Carlo
// experiment grid, or render reports from a results directory.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "paneldml/paneldml.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json load_json(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open: " + path);
    json j;
    is >> j;
    return j;
}

int cmd_simulate(const std::string& config_path, std::uint64_t seed, const std::string& out_path) {
    const auto cfg = paneldml::dgp_config_from_json(load_json(config_path));
    auto [data, truth] = paneldml::generate_panel(cfg, seed);
    paneldml::write_panel_csv(data, out_path);
    const fs::path truth_path = fs::path(out_path).parent_path() / "truth.json";
    std::ofstream ts(truth_path);
    if (!ts) throw std::runtime_error("cannot open for writing: " + truth_path.string());
    ts << truth.to_json().dump(2) << "\n";
    std::cout << "wrote " << out_path << " and " << truth_path.string() << "\n";
    return 0;
}

int cmd_estimate(const std::string& data_path, const paneldml::EstimatorSpec& spec, const std::string& truth_path,
                 std::uint64_t seed) {
    const auto data = paneldml::read_panel_csv(data_path);
    paneldml::SimulationTruth truth;
    const bool have_truth = !truth_path.empty();
    if (have_truth) truth = paneldml::SimulationTruth::from_json(load_json(truth_path));
    const auto result = paneldml::estimate(data, spec, have_truth ? &truth : nullptr, seed);
    std::cout << result.to_json().dump() << "\n";
    return 0;
}

int cmd_experiment(const std::string& config_path, const std::string& out_dir, int workers) {
    auto cfg = paneldml::experiment_config_from_json(load_json(config_path));
    if (workers > 0) cfg.workers = workers;
    const auto result = paneldml::run_experiment(cfg);
    paneldml::emit_report(result, paneldml::ReportKind::Csv, out_dir);
    int failed = 0;
    for (const auto& r : result.rows) failed += r.error.empty() ? 0 : 1;
    std::cout << "ran " << result.rows.size() << " replication rows (" << failed << " failed), results in "
              << out_dir << "\n";
    return 0;
}

int cmd_report(const std::string& in_dir, const std::string& kind_name, const std::string& out_dir) {
    const auto kind = paneldml::report_kind_from_name(kind_name);
    paneldml::ExperimentResult result;
    result.rows = paneldml::read_results_csv((fs::path(in_dir) / "results.csv").string());
    result.summaries = paneldml::summarize(result.rows);
    // carry sweep values over from an existing summary.csv if present
    const fs::path sum_path = fs::path(in_dir) / "summary.csv";
    if (fs::exists(sum_path)) {
        std::ifstream is(sum_path);
        std::string line;
        std::getline(is, line); // header
        while (std::getline(is, line)) {
            if (line.empty()) continue;
            const auto f = paneldml::detail::split_csv_line(line);
            if (f.size() < 3 || f[2].empty()) continue;
            for (auto& s : result.summaries)
                if (s.setting == f[0] && s.method == f[1]) s.sweep = std::strtod(f[2].c_str(), nullptr);
        }
    }
    const auto written = paneldml::emit_report(result, kind, out_dir.empty() ? in_dir : out_dir);
    for (const auto& p : written) std::cout << "wrote " << p << "\n";
    return 0;
}

int cmd_bench(int n_units, int n_periods, int iterations, std::uint64_t seed) {
    paneldml::DgpConfig proto;
    proto.n_units = n_units;
    proto.n_periods = n_periods;
    proto.structure = paneldml::Structure::C;
    proto.form = paneldml::Form::UShaped;

    std::vector<paneldml::EstimatorSpec> methods;
    for (auto m : {paneldml::Method::DmlEarlyFe, paneldml::Method::Pdml, paneldml::Method::DmlLateFe,
                   paneldml::Method::DmlCre, paneldml::Method::DmlDummies}) {
        paneldml::EstimatorSpec spec;
        spec.method = m;
        methods.push_back(spec);
    }
    const auto table = paneldml::timing_benchmark({{n_units, n_periods}}, methods, proto, iterations, seed);
    std::printf("%-14s %8s %8s %14s\n", "method", "N", "T", "mean_seconds");
    for (const auto& e : table) std::printf("%-14s %8d %8d %14.3f\n", e.method.c_str(), e.n_units, e.n_periods, e.mean_seconds);
    return 0;
}

paneldml::EstimatorSpec spec_from_cli(const std::string& method, const std::string& split, int folds, int nlo_width,
                                      bool two_way, const std::string& late_scope, bool pooled_final) {
    paneldml::EstimatorSpec spec;
    spec.method = paneldml::method_from_name(method);
    spec.split = paneldml::split_from_name(split);
    spec.folds = folds > 0 ? folds : (spec.split == paneldml::SplitStrategy::NeighborsLeftOut ? 10 : 5);
    spec.nlo_width = nlo_width;
    spec.two_way = two_way;
    spec.pooled_final = pooled_final;
    if (late_scope == "global")
        spec.late_demean_scope = paneldml::LateDemeanScope::Global;
    else if (late_scope == "fold")
        spec.late_demean_scope = paneldml::LateDemeanScope::Fold;
    else
        throw paneldml::ConfigError("--late-demean-scope must be global or fold");
    return spec;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Panel-data double machine learning: simulation, estimation and Monte Carlo experiments"};
    app.require_subcommand(1);

    // simulate
    auto* sim = app.add_subcommand("simulate", "Generate a panel dataset plus its truth sidecar");
    std::string sim_config, sim_out = "data.csv";
    std::uint64_t sim_seed = 1;
    sim->add_option("--config", sim_config, "DGP config JSON")->required();
    sim->add_option("--seed", sim_seed, "RNG seed");
    sim->add_option("--out", sim_out, "Output CSV path");

    // estimate
    auto* est = app.add_subcommand("estimate", "Run one estimator on a panel CSV");
    std::string est_data, est_method = "dml-cre", est_split = "random", est_truth, est_scope = "global";
    int est_folds = 0, est_width = 1;
    bool est_two_way = false, est_pooled = false;
    std::uint64_t est_seed = 1;
    est->add_option("--data", est_data, "Panel CSV")->required();
    est->add_option("--method", est_method,
                    "simple-ols|pols|fe|fe-only|pdml|dml-early-fe|dml-late-fe|dml-dummies|dml-cre|oracle-fe|oracle-no-fe");
    est->add_option("--split", est_split, "random|by-unit|by-period|time-folds|nlo");
    est->add_option("--folds", est_folds, "Fold count K (default 5; 10 for nlo)");
    est->add_option("--nlo-width", est_width, "Neighbor folds excluded each side (nlo)");
    est->add_option("--truth", est_truth, "truth.json (oracle methods)");
    est->add_option("--seed", est_seed, "RNG seed");
    est->add_option("--late-demean-scope", est_scope, "global|fold (dml-late-fe)");
    est->add_flag("--two-way", est_two_way, "Use two-way heterogeneity handling");
    est->add_flag("--pooled-final", est_pooled, "Pool residuals in the final OLS instead of averaging fold slopes");

    // experiment
    auto* exp = app.add_subcommand("experiment", "Run a Monte Carlo experiment grid");
    std::string exp_config, exp_out = "out";
    int exp_workers = 0;
    exp->add_option("--config", exp_config, "Experiment config JSON")->required();
    exp->add_option("--out", exp_out, "Output directory");
    exp->add_option("--workers", exp_workers, "Worker threads (0 = hardware)");

    // report
    auto* rep = app.add_subcommand("report", "Render reports from a results directory");
    std::string rep_in, rep_kind = "boxplot_grid", rep_out;
    rep->add_option("--in", rep_in, "Directory containing results.csv")->required();
    rep->add_option("--kind", rep_kind, "boxplot_grid|mae_lines|csv|json");
    rep->add_option("--out", rep_out, "Output directory (defaults to --in)");

    // bench
    auto* bench = app.add_subcommand("bench", "Time the five DML methods on one panel shape");
    int bench_n = 500, bench_t = 10, bench_iters = 5;
    std::uint64_t bench_seed = 1;
    bench->add_option("--n", bench_n, "Units");
    bench->add_option("--t", bench_t, "Periods");
    bench->add_option("--iterations", bench_iters, "Runs per method");
    bench->add_option("--seed", bench_seed, "RNG seed");

    CLI11_PARSE(app, argc, argv);

    try {
        if (sim->parsed()) return cmd_simulate(sim_config, sim_seed, sim_out);
        if (est->parsed())
            return cmd_estimate(est_data,
                                spec_from_cli(est_method, est_split, est_folds, est_width, est_two_way, est_scope,
                                              est_pooled),
                                est_truth, est_seed);
        if (exp->parsed()) return cmd_experiment(exp_config, exp_out, exp_workers);
        if (rep->parsed()) return cmd_report(rep_in, rep_kind, rep_out);
        if (bench->parsed()) return cmd_bench(bench_n, bench_t, bench_iters, bench_seed);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
