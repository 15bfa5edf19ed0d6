#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "paneldml/dgp.hpp"
#include "paneldml/errors.hpp"
#include "paneldml/estimators.hpp"

namespace paneldml {

// ---------------------------------------------------------------------------
// Monte Carlo experiment runner: a grid of (DGP cell, method list) pairs,
// n_reps seeded replications each, summaries per cell and method.
// ---------------------------------------------------------------------------

struct CellConfig {
    std::string name;
    double sweep = std::numeric_limits<double>::quiet_NaN(); // optional x-value for MAE line charts
    DgpConfig dgp;
    std::vector<EstimatorSpec> methods;
};

struct ExperimentConfig {
    std::vector<CellConfig> cells;
    int n_reps = 30;
    std::uint64_t base_seed = 1;
    int workers = 0; // 0 = hardware concurrency

    void validate() const {
        if (n_reps < 1) throw ConfigError("experiment requires n_reps >= 1");
        if (cells.empty()) throw ConfigError("experiment grid is empty");
        for (const auto& c : cells) {
            if (c.name.empty()) throw ConfigError("every cell needs a name");
            c.dgp.validate();
            if (c.methods.empty()) throw ConfigError("cell '" + c.name + "' has no methods");
        }
    }
};

struct ResultRow {
    std::string setting;
    std::string method;
    int rep = 0; // 1-based in outputs
    double beta_hat = std::numeric_limits<double>::quiet_NaN();
    std::string error; // empty on success
    double wall_time_s = 0.0;
};

struct MethodSummary {
    std::string setting;
    std::string method;
    double sweep = std::numeric_limits<double>::quiet_NaN();
    int n = 0;        // successful replications
    int n_failed = 0; // recorded failures
    double mean = std::numeric_limits<double>::quiet_NaN();
    double bias = std::numeric_limits<double>::quiet_NaN();
    double mae = std::numeric_limits<double>::quiet_NaN();
    double median = std::numeric_limits<double>::quiet_NaN();
    double q1 = std::numeric_limits<double>::quiet_NaN();
    double q3 = std::numeric_limits<double>::quiet_NaN();
    double whisker_lo = std::numeric_limits<double>::quiet_NaN();
    double whisker_hi = std::numeric_limits<double>::quiet_NaN();
};

struct ExperimentResult {
    std::vector<ResultRow> rows;
    std::vector<MethodSummary> summaries;
};

namespace detail {

/// Linear-interpolation quantile (R type 7) on an ascending-sorted vector.
inline double quantile_sorted(const std::vector<double>& x, double p) {
    if (x.empty()) return std::numeric_limits<double>::quiet_NaN();
    const double h = (static_cast<double>(x.size()) - 1.0) * p;
    const auto lo = static_cast<std::size_t>(h);
    if (lo + 1 >= x.size()) return x.back();
    return x[lo] + (h - lo) * (x[lo + 1] - x[lo]);
}

} // namespace detail

/// Per-(setting, method) mean bias, MAE and boxplot five-number summary
/// (whiskers by the 1.5*IQR convention). beta_true comes from the simulation
/// truth; every shipped config uses beta = 1.
inline std::vector<MethodSummary> summarize(const std::vector<ResultRow>& rows, double beta_true = 1.0) {
    std::vector<MethodSummary> out;
    auto find = [&](const std::string& setting, const std::string& method) -> MethodSummary& {
        for (auto& s : out)
            if (s.setting == setting && s.method == method) return s;
        out.push_back({});
        out.back().setting = setting;
        out.back().method = method;
        return out.back();
    };

    for (const auto& r : rows) {
        auto& s = find(r.setting, r.method);
        if (r.error.empty())
            ++s.n;
        else
            ++s.n_failed;
    }

    for (auto& s : out) {
        std::vector<double> betas;
        betas.reserve(s.n);
        double sum = 0.0, abs_sum = 0.0;
        for (const auto& r : rows) {
            if (r.setting != s.setting || r.method != s.method || !r.error.empty()) continue;
            betas.push_back(r.beta_hat);
            sum += r.beta_hat;
            abs_sum += std::abs(r.beta_hat - beta_true);
        }
        if (betas.empty()) continue;
        const double n = static_cast<double>(betas.size());
        s.mean = sum / n;
        s.bias = s.mean - beta_true;
        s.mae = abs_sum / n;
        std::sort(betas.begin(), betas.end());
        s.median = detail::quantile_sorted(betas, 0.5);
        s.q1 = detail::quantile_sorted(betas, 0.25);
        s.q3 = detail::quantile_sorted(betas, 0.75);
        const double iqr = s.q3 - s.q1;
        const double lo_limit = s.q1 - 1.5 * iqr;
        const double hi_limit = s.q3 + 1.5 * iqr;
        s.whisker_lo = betas.back();
        s.whisker_hi = betas.front();
        for (double b : betas) {
            if (b >= lo_limit && b < s.whisker_lo) s.whisker_lo = b;
            if (b <= hi_limit && b > s.whisker_hi) s.whisker_hi = b;
        }
    }
    return out;
}

/// Runs the full grid. Replications execute on a bounded worker pool; the
/// result rows are assembled in canonical (cell, method, rep) order so the
/// output is identical for any worker count. Failures become error rows and
/// never abort the sweep.
inline ExperimentResult run_experiment(const ExperimentConfig& cfg) {
    cfg.validate();
    const int n_cells = static_cast<int>(cfg.cells.size());
    const int reps = cfg.n_reps;

    // slot[cell][method][rep]
    std::vector<std::vector<std::vector<ResultRow>>> slots(n_cells);
    for (int c = 0; c < n_cells; ++c)
        slots[c].assign(cfg.cells[c].methods.size(), std::vector<ResultRow>(reps));

    const int total_tasks = n_cells * reps;
    std::atomic<int> next{0};

    auto run_task = [&](int task) {
        const int cell_idx = task / reps;
        const int rep = task % reps;
        const auto& cell = cfg.cells[cell_idx];
        const std::uint64_t dataset_seed = derive_key(derive_key(cfg.base_seed, hash_string(cell.name)), rep);

        PanelDataset data;
        SimulationTruth truth;
        std::string gen_error;
        try {
            auto pair = generate_panel(cell.dgp, dataset_seed);
            data = std::move(pair.first);
            truth = std::move(pair.second);
        } catch (const std::exception& e) {
            gen_error = std::string("generation failed: ") + e.what();
        }

        for (std::size_t m = 0; m < cell.methods.size(); ++m) {
            const auto& spec = cell.methods[m];
            ResultRow row;
            row.setting = cell.name;
            row.method = spec.effective_label();
            row.rep = rep + 1;
            if (!gen_error.empty()) {
                row.error = gen_error;
            } else {
                const std::uint64_t est_seed = derive_key(dataset_seed, hash_string(spec.effective_label()));
                try {
                    const EstimateResult r = estimate(data, spec, &truth, est_seed);
                    row.beta_hat = r.beta_hat;
                    row.wall_time_s = r.wall_time_s;
                } catch (const std::exception& e) {
                    row.error = e.what();
                }
            }
            slots[cell_idx][m][rep] = std::move(row);
        }
    };

    int n_workers = cfg.workers > 0 ? cfg.workers : static_cast<int>(std::thread::hardware_concurrency());
    if (n_workers < 1) n_workers = 1;
    n_workers = std::min(n_workers, total_tasks);

    if (n_workers == 1) {
        for (int t = 0; t < total_tasks; ++t) run_task(t);
    } else {
        std::vector<std::thread> pool;
        pool.reserve(n_workers);
        for (int w = 0; w < n_workers; ++w)
            pool.emplace_back([&] {
                for (int t = next.fetch_add(1); t < total_tasks; t = next.fetch_add(1)) run_task(t);
            });
        for (auto& th : pool) th.join();
    }

    ExperimentResult result;
    result.rows.reserve(static_cast<std::size_t>(total_tasks));
    for (int c = 0; c < n_cells; ++c)
        for (std::size_t m = 0; m < cfg.cells[c].methods.size(); ++m)
            for (int r = 0; r < reps; ++r) result.rows.push_back(std::move(slots[c][m][r]));

    result.summaries = summarize(result.rows);
    for (auto& s : result.summaries)
        for (const auto& c : cfg.cells)
            if (c.name == s.setting) s.sweep = c.sweep;
    return result;
}

// ------------------------------ timing table ------------------------------

struct TimingEntry {
    int n_units = 0;
    int n_periods = 0;
    std::string method;
    double mean_seconds = 0.0;
};

/// Wall time per method per panel shape, each averaged over `iterations` runs
/// on one fixed dataset per shape.
inline std::vector<TimingEntry> timing_benchmark(const std::vector<std::pair<int, int>>& shapes,
                                                 const std::vector<EstimatorSpec>& methods, const DgpConfig& proto,
                                                 int iterations, std::uint64_t seed) {
    if (iterations < 1) throw ConfigError("timing_benchmark requires iterations >= 1");
    std::vector<TimingEntry> out;
    for (const auto& [N, T] : shapes) {
        DgpConfig cfg = proto;
        cfg.n_units = N;
        cfg.n_periods = T;
        cfg.validate();
        auto [data, truth] = generate_panel(cfg, derive_key(seed, hash_string(std::to_string(N) + "x" + std::to_string(T))));
        for (const auto& spec : methods) {
            double total = 0.0;
            for (int it = 0; it < iterations; ++it) {
                const auto r = estimate(data, spec, &truth, derive_key(seed, hash_string(spec.effective_label()), it));
                total += r.wall_time_s;
            }
            out.push_back({N, T, spec.effective_label(), total / iterations});
        }
    }
    return out;
}

// --------------------------- config (de)serialization ---------------------

inline EstimatorSpec estimator_spec_from_json(const nlohmann::json& j) {
    EstimatorSpec spec;
    spec.method = method_from_name(j.at("method").get<std::string>());
    spec.split = split_from_name(j.value("split", std::string("random")));
    spec.folds = j.value("folds", spec.split == SplitStrategy::NeighborsLeftOut ? 10 : 5);
    spec.nlo_width = j.value("nlo_width", 1);
    spec.two_way = j.value("two_way", false);
    spec.label = j.value("label", std::string());
    spec.pooled_final = j.value("pooled_final", false);
    const std::string scope = j.value("late_demean_scope", std::string("global"));
    if (scope == "global")
        spec.late_demean_scope = LateDemeanScope::Global;
    else if (scope == "fold")
        spec.late_demean_scope = LateDemeanScope::Fold;
    else
        throw ConfigError("late_demean_scope must be 'global' or 'fold'");
    if (j.contains("boost")) {
        const auto& b = j.at("boost");
        spec.boost.learning_rate = b.value("learning_rate", spec.boost.learning_rate);
        spec.boost.max_depth = b.value("max_depth", spec.boost.max_depth);
        spec.boost.early_stopping_rounds = b.value("early_stopping_rounds", spec.boost.early_stopping_rounds);
        spec.boost.max_rounds = b.value("max_rounds", spec.boost.max_rounds);
        spec.boost.cv_folds = b.value("cv_folds", spec.boost.cv_folds);
        spec.boost.min_samples_leaf = b.value("min_samples_leaf", spec.boost.min_samples_leaf);
        spec.boost.validate();
    }
    return spec;
}

inline ExperimentConfig experiment_config_from_json(const nlohmann::json& j) {
    ExperimentConfig cfg;
    cfg.n_reps = j.value("n_reps", 30);
    cfg.base_seed = j.value("base_seed", static_cast<std::uint64_t>(1));
    cfg.workers = j.value("workers", 0);
    for (const auto& cj : j.at("cells")) {
        CellConfig cell;
        cell.name = cj.at("name").get<std::string>();
        if (cj.contains("sweep")) cell.sweep = cj.at("sweep").get<double>();
        cell.dgp = dgp_config_from_json(cj.at("dgp"));
        for (const auto& mj : cj.at("methods")) cell.methods.push_back(estimator_spec_from_json(mj));
        cfg.cells.push_back(std::move(cell));
    }
    cfg.validate();
    return cfg;
}

} // namespace paneldml
