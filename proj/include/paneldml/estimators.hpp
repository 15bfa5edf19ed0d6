#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "paneldml/boosting.hpp"
#include "paneldml/crossfit.hpp"
#include "paneldml/dgp.hpp"
#include "paneldml/errors.hpp"
#include "paneldml/ols.hpp"
#include "paneldml/panel.hpp"
#include "paneldml/transforms.hpp"

namespace paneldml {

// ---------------------------------------------------------------------------
// Every method of the comparison roster behind one estimation interface:
// three linear baselines, five DML variants, the FE-only ablation and the two
// functional-form oracles.
// ---------------------------------------------------------------------------

enum class Method {
    SimpleOls,
    Pols,
    FixedEffects,
    FeOnly,
    Pdml,
    DmlEarlyFe,
    DmlLateFe,
    DmlDummies,
    DmlCre,
    OracleFe,
    OracleNoFe
};

inline const char* method_name(Method m) {
    switch (m) {
        case Method::SimpleOls: return "simple-ols";
        case Method::Pols: return "pols";
        case Method::FixedEffects: return "fe";
        case Method::FeOnly: return "fe-only";
        case Method::Pdml: return "pdml";
        case Method::DmlEarlyFe: return "dml-early-fe";
        case Method::DmlLateFe: return "dml-late-fe";
        case Method::DmlDummies: return "dml-dummies";
        case Method::DmlCre: return "dml-cre";
        case Method::OracleFe: return "oracle-fe";
        default: return "oracle-no-fe";
    }
}

inline Method method_from_name(const std::string& s) {
    for (Method m : {Method::SimpleOls, Method::Pols, Method::FixedEffects, Method::FeOnly, Method::Pdml,
                     Method::DmlEarlyFe, Method::DmlLateFe, Method::DmlDummies, Method::DmlCre, Method::OracleFe,
                     Method::OracleNoFe})
        if (s == method_name(m)) return m;
    throw ConfigError("unknown method '" + s + "'");
}

inline bool is_dml(Method m) {
    switch (m) {
        case Method::Pdml:
        case Method::DmlEarlyFe:
        case Method::DmlLateFe:
        case Method::DmlDummies:
        case Method::DmlCre: return true;
        default: return false;
    }
}

inline bool is_oracle(Method m) { return m == Method::OracleFe || m == Method::OracleNoFe; }

/// Scope of the residual demeaning in the late-FE variant. Global matches the
/// within-transform equation literally (unit means over all periods); Fold
/// restricts the means to the prediction fold's rows.
enum class LateDemeanScope { Global, Fold };

struct EstimatorSpec {
    Method method = Method::DmlCre;
    SplitStrategy split = SplitStrategy::Random;
    int folds = 5;
    int nlo_width = 1;
    bool two_way = false;
    BoostConfig boost;
    LateDemeanScope late_demean_scope = LateDemeanScope::Global;
    bool pooled_final = false; // sensitivity: pool residuals instead of averaging fold slopes
    std::string label;         // results key; defaults to the method slug

    std::string effective_label() const { return label.empty() ? method_name(method) : label; }
};

struct EstimateResult {
    std::string method;
    double beta_hat = std::numeric_limits<double>::quiet_NaN();
    std::vector<double> fold_betas;                                  // DML only
    double w_model_rmse = std::numeric_limits<double>::quiet_NaN();  // out-of-fold, DML only
    double y_model_rmse = std::numeric_limits<double>::quiet_NaN();  // out-of-fold, DML only
    double wall_time_s = 0.0;

    /// wall_time_s is physical and excluded from determinism comparisons.
    nlohmann::json to_json(bool include_wall_time = true) const {
        nlohmann::json j;
        j["method"] = method;
        j["beta_hat"] = beta_hat;
        if (!fold_betas.empty()) j["fold_betas"] = fold_betas;
        if (std::isfinite(w_model_rmse)) {
            j["diagnostics"] = {{"w_model_rmse", w_model_rmse}, {"y_model_rmse", y_model_rmse}};
        }
        if (include_wall_time) j["wall_time_s"] = wall_time_s;
        return j;
    }
};

/// Fits a nuisance model on train_rows and returns predictions for
/// predict_rows (aligned with that index list). Tests may inject stubs.
using NuisancePredictor =
    std::function<std::vector<double>(const FeatureMatrix& X, std::span<const double> target,
                                      const std::vector<int>& train_rows, const std::vector<int>& predict_rows,
                                      std::uint64_t seed)>;

/// Default nuisance learner: tune the round count on the training rows, refit
/// with the tuned count and no early stopping, predict the held-out rows.
inline NuisancePredictor boosted_learner(const BoostConfig& base_cfg) {
    return [base_cfg](const FeatureMatrix& X, std::span<const double> target, const std::vector<int>& train_rows,
                      const std::vector<int>& predict_rows, std::uint64_t seed) {
        BoostConfig cfg = base_cfg;
        cfg.seed = seed;
        const int rounds = cv_tune_rounds(X, target, cfg, train_rows);
        std::vector<double> out(predict_rows.size());
        if (rounds == 0) {
            double base = 0.0;
            for (int r : train_rows) base += target[r];
            base /= static_cast<double>(train_rows.size());
            std::fill(out.begin(), out.end(), base);
            return out;
        }
        cfg.max_rounds = rounds;
        const BoostedModel model = fit_boosted(X, target, cfg, train_rows);
        for (std::size_t i = 0; i < predict_rows.size(); ++i) out[i] = model.predict_row(X, predict_rows[i]);
        return out;
    };
}

enum class ResidualTransform { None, DemeanUnit, DemeanTwoway };

namespace detail {

inline std::vector<double> panel_column(const PanelDataset& data, int j) {
    auto s = data.x_col(j);
    return {s.begin(), s.end()};
}

/// Demean a residual vector within one fold's rows only, grouping by unit
/// (and period for the two-way case), leaving other rows untouched.
inline void demean_within_fold(std::vector<double>& v, const std::vector<int>& rows, const PanelDataset& data,
                               bool twoway) {
    const int T = data.n_periods;
    std::vector<double> usum(data.n_units, 0.0);
    std::vector<int> ucount(data.n_units, 0);
    for (int r : rows) {
        usum[r / T] += v[r];
        ++ucount[r / T];
    }
    if (!twoway) {
        for (int r : rows) v[r] -= usum[r / T] / ucount[r / T];
        return;
    }
    std::vector<double> psum(T, 0.0);
    std::vector<int> pcount(T, 0);
    double grand = 0.0;
    for (int r : rows) {
        psum[r % T] += v[r];
        ++pcount[r % T];
        grand += v[r];
    }
    grand /= static_cast<double>(rows.size());
    for (int r : rows) v[r] -= usum[r / T] / ucount[r / T] + psum[r % T] / pcount[r % T] - grand;
}

inline double slope_on_residuals(std::span<const double> vy, std::span<const double> vw,
                                 const std::vector<int>& rows, int fold_id) {
    double mean_w = 0.0;
    for (int r : rows) mean_w += vw[r];
    mean_w /= static_cast<double>(rows.size());
    bool varies = false;
    for (int r : rows)
        if (vw[r] != mean_w) {
            varies = true;
            break;
        }
    if (!varies)
        throw EstimationError("zero-variance treatment residual in fold " + std::to_string(fold_id));

    DesignMatrix D(static_cast<int>(rows.size()));
    std::vector<double> wcol(rows.size()), ycol(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        wcol[i] = vw[rows[i]];
        ycol[i] = vy[rows[i]];
    }
    D.add_intercept();
    D.add_column("w_residual", wcol);
    try {
        return ols_fit(D, ycol).coef("w_residual");
    } catch (const SingularDesignError& e) {
        throw EstimationError("singular residual regression in fold " + std::to_string(fold_id) + ": " + e.what());
    }
}

} // namespace detail

struct DmlOptions {
    LateDemeanScope late_demean_scope = LateDemeanScope::Global;
    bool pooled_final = false;
};

/// The five-step DML core: per fold, tune + fit the two nuisance models on the
/// fold's training rows, residualize treatment and outcome on the held-out
/// fold, optionally demean the residuals, regress residual on residual and
/// average the fold slopes.
inline EstimateResult dml_core(const PanelDataset& data, const FeatureMatrix& w_features,
                               const FeatureMatrix& y_features, const FoldPlan& plan, const BoostConfig& boost_cfg,
                               ResidualTransform transform, std::uint64_t seed, const DmlOptions& options = {},
                               const NuisancePredictor& w_learner = {}, const NuisancePredictor& y_learner = {}) {
    if (w_features.rows() != data.rows() || y_features.rows() != data.rows())
        throw DimensionError("dml_core: feature rows must align with the panel");
    if (static_cast<int>(plan.fold_of.size()) != data.rows())
        throw DimensionError("dml_core: fold plan does not match the panel");

    const NuisancePredictor learn_w = w_learner ? w_learner : boosted_learner(boost_cfg);
    const NuisancePredictor learn_y = y_learner ? y_learner : boosted_learner(boost_cfg);

    const int NT = data.rows();
    std::vector<double> vhat_w(NT, 0.0), vhat_y(NT, 0.0);
    std::vector<std::vector<int>> fold_rows(plan.K);

    for (int k = 1; k <= plan.K; ++k) {
        auto rows = plan.fold_rows(k);
        if (static_cast<int>(rows.size()) < 2)
            throw EstimationError("fold " + std::to_string(k) + " has fewer than 2 rows");
        auto train = plan.training_rows(k);

        const auto pred_w = learn_w(w_features, data.treatment, train, rows, derive_key(seed, 0x77ull, k));
        const auto pred_y = learn_y(y_features, data.outcome, train, rows, derive_key(seed, 0x79ull, k));
        for (std::size_t i = 0; i < rows.size(); ++i) {
            vhat_w[rows[i]] = data.treatment[rows[i]] - pred_w[i];
            vhat_y[rows[i]] = data.outcome[rows[i]] - pred_y[i];
        }
        fold_rows[k - 1] = std::move(rows);
    }

    EstimateResult result;
    {
        double sw = 0.0, sy = 0.0;
        for (int r = 0; r < NT; ++r) {
            sw += vhat_w[r] * vhat_w[r];
            sy += vhat_y[r] * vhat_y[r];
        }
        result.w_model_rmse = std::sqrt(sw / NT);
        result.y_model_rmse = std::sqrt(sy / NT);
    }

    if (transform != ResidualTransform::None) {
        const bool twoway = transform == ResidualTransform::DemeanTwoway;
        if (options.late_demean_scope == LateDemeanScope::Global) {
            vhat_w = twoway ? within_demean_twoway(vhat_w, data) : within_demean_unit(vhat_w, data);
            vhat_y = twoway ? within_demean_twoway(vhat_y, data) : within_demean_unit(vhat_y, data);
        } else {
            for (int k = 1; k <= plan.K; ++k) {
                detail::demean_within_fold(vhat_w, fold_rows[k - 1], data, twoway);
                detail::demean_within_fold(vhat_y, fold_rows[k - 1], data, twoway);
            }
        }
    }

    if (options.pooled_final) {
        std::vector<int> all(NT);
        std::iota(all.begin(), all.end(), 0);
        result.beta_hat = detail::slope_on_residuals(vhat_y, vhat_w, all, 0);
        return result;
    }

    result.fold_betas.resize(plan.K);
    double sum = 0.0;
    for (int k = 1; k <= plan.K; ++k) {
        result.fold_betas[k - 1] = detail::slope_on_residuals(vhat_y, vhat_w, fold_rows[k - 1], k);
        sum += result.fold_betas[k - 1];
    }
    result.beta_hat = sum / plan.K;
    return result;
}

// --------------------------- feature builders -----------------------------

/// Raw confounder columns x1..xJ.
inline FeatureMatrix confounder_features(const PanelDataset& data) {
    FeatureMatrix X(data.rows());
    for (int j = 0; j < data.n_confounders; ++j) X.add_column(data.x_col(j));
    return X;
}

/// Confounders plus N unit one-hot columns (and T period one-hots two-way).
inline FeatureMatrix dummy_features(const PanelDataset& data, bool two_way) {
    FeatureMatrix X = confounder_features(data);
    const int T = data.n_periods;
    std::vector<double> col(data.rows());
    for (int i = 0; i < data.n_units; ++i) {
        std::fill(col.begin(), col.end(), 0.0);
        for (int t = 0; t < T; ++t) col[panel_row(i, t, T)] = 1.0;
        X.add_column(col);
    }
    if (two_way) {
        for (int t = 0; t < T; ++t) {
            std::fill(col.begin(), col.end(), 0.0);
            for (int i = 0; i < data.n_units; ++i) col[panel_row(i, t, T)] = 1.0;
            X.add_column(col);
        }
    }
    return X;
}

/// Mundlak-style features: confounders, their unit time means and the
/// treatment's unit time mean (plus period means of both when two-way).
inline FeatureMatrix cre_features(const PanelDataset& data, bool two_way) {
    FeatureMatrix X = confounder_features(data);
    for (int j = 0; j < data.n_confounders; ++j) X.add_column(unit_means(data.x_col(j), data));
    X.add_column(unit_means(data.treatment, data));
    if (two_way) {
        for (int j = 0; j < data.n_confounders; ++j) X.add_column(period_means(data.x_col(j), data));
        X.add_column(period_means(data.treatment, data));
    }
    return X;
}

/// Copy of the panel with outcome, treatment and confounders within-demeaned.
inline PanelDataset demeaned_panel(const PanelDataset& data, bool two_way) {
    PanelDataset out = data;
    auto demean = [&](std::span<const double> v) {
        return two_way ? within_demean_twoway(v, data) : within_demean_unit(v, data);
    };
    out.outcome = demean(data.outcome);
    out.treatment = demean(data.treatment);
    for (int j = 0; j < data.n_confounders; ++j) {
        auto d = demean(data.x_col(j));
        std::copy(d.begin(), d.end(), out.x_col(j).begin());
    }
    return out;
}

// --------------------------- linear baselines -----------------------------

/// Naive regression of the outcome on the treatment alone.
inline double simple_ols(const PanelDataset& data) {
    DesignMatrix D(data.rows());
    D.add_intercept();
    D.add_column("w", data.treatment);
    return ols_fit(D, data.outcome).coef("w");
}

/// Pooled OLS with all covariates entering linearly.
inline double pols(const PanelDataset& data) {
    if (data.n_confounders < 1) throw ConfigError("pols requires at least one confounder column");
    DesignMatrix D(data.rows());
    D.add_intercept();
    D.add_column("w", data.treatment);
    for (int j = 0; j < data.n_confounders; ++j) D.add_column("x" + std::to_string(j + 1), data.x_col(j));
    return ols_fit(D, data.outcome).coef("w");
}

/// Linear fixed effects: OLS on the within-transformed variables. Demeaned
/// columns sum to zero, so no intercept is needed.
inline double fixed_effects(const PanelDataset& data, bool two_way = false) {
    auto demean = [&](std::span<const double> v) {
        return two_way ? within_demean_twoway(v, data) : within_demean_unit(v, data);
    };
    DesignMatrix D(data.rows());
    D.add_column("w", demean(data.treatment));
    for (int j = 0; j < data.n_confounders; ++j) D.add_column("x" + std::to_string(j + 1), demean(data.x_col(j)));
    return ols_fit(D, demean(data.outcome)).coef("w");
}

/// Fixed effects without any confounder adjustment.
inline double fe_only(const PanelDataset& data, bool two_way = false) {
    auto demean = [&](std::span<const double> v) {
        return two_way ? within_demean_twoway(v, data) : within_demean_unit(v, data);
    };
    DesignMatrix D(data.rows());
    D.add_column("w", demean(data.treatment));
    return ols_fit(D, demean(data.outcome)).coef("w");
}

/// Infeasible benchmark: fixed effects with the true functional form of the
/// observed confounding.
inline double oracle_fe(const PanelDataset& data, const SimulationTruth& truth, bool two_way = false) {
    auto demean = [&](std::span<const double> v) {
        return two_way ? within_demean_twoway(v, data) : within_demean_unit(v, data);
    };
    DesignMatrix D(data.rows());
    D.add_column("w", demean(data.treatment));
    std::vector<double> g(data.rows());
    for (int j = 0; j < data.n_confounders; ++j) {
        for (int r = 0; r < data.rows(); ++r) g[r] = eval_form(truth.form, data.x(j, r));
        D.add_column("g" + std::to_string(j + 1), demean(g));
    }
    return ols_fit(D, demean(data.outcome)).coef("w");
}

/// Infeasible benchmark: pooled OLS with the true functional form, ignoring
/// the unobserved heterogeneity.
inline double oracle_no_fe(const PanelDataset& data, const SimulationTruth& truth) {
    DesignMatrix D(data.rows());
    D.add_intercept();
    D.add_column("w", data.treatment);
    std::vector<double> g(data.rows());
    for (int j = 0; j < data.n_confounders; ++j) {
        for (int r = 0; r < data.rows(); ++r) g[r] = eval_form(truth.form, data.x(j, r));
        D.add_column("g" + std::to_string(j + 1), g);
    }
    return ols_fit(D, data.outcome).coef("w");
}

// ----------------------------- DML variants -------------------------------

inline EstimateResult pdml(const PanelDataset& data, const FoldPlan& plan, const BoostConfig& cfg, std::uint64_t seed,
                           const DmlOptions& options = {}) {
    const auto X = confounder_features(data);
    return dml_core(data, X, X, plan, cfg, ResidualTransform::None, seed, options);
}

inline EstimateResult dml_early_fe(const PanelDataset& data, const FoldPlan& plan, const BoostConfig& cfg,
                                   std::uint64_t seed, bool two_way = false, const DmlOptions& options = {}) {
    const PanelDataset demeaned = demeaned_panel(data, two_way);
    const auto X = confounder_features(demeaned);
    return dml_core(demeaned, X, X, plan, cfg, ResidualTransform::None, seed, options);
}

inline EstimateResult dml_late_fe(const PanelDataset& data, const FoldPlan& plan, const BoostConfig& cfg,
                                  std::uint64_t seed, bool two_way = false, const DmlOptions& options = {}) {
    const auto X = confounder_features(data);
    return dml_core(data, X, X, plan, cfg,
                    two_way ? ResidualTransform::DemeanTwoway : ResidualTransform::DemeanUnit, seed, options);
}

inline EstimateResult dml_dummies(const PanelDataset& data, const FoldPlan& plan, const BoostConfig& cfg,
                                  std::uint64_t seed, bool two_way = false, const DmlOptions& options = {}) {
    const auto X = dummy_features(data, two_way);
    return dml_core(data, X, X, plan, cfg, ResidualTransform::None, seed, options);
}

inline EstimateResult dml_cre(const PanelDataset& data, const FoldPlan& plan, const BoostConfig& cfg,
                              std::uint64_t seed, bool two_way = false, const DmlOptions& options = {}) {
    const auto X = cre_features(data, two_way);
    return dml_core(data, X, X, plan, cfg, ResidualTransform::None, seed, options);
}

// ------------------------------- dispatch ---------------------------------

/// Runs the method described by spec. Oracle methods require the simulation
/// truth; DML methods build their fold plan from (spec, seed).
inline EstimateResult estimate(const PanelDataset& data, const EstimatorSpec& spec,
                               const SimulationTruth* truth = nullptr, std::uint64_t seed = 0) {
    const auto start = std::chrono::steady_clock::now();
    EstimateResult result;
    result.method = spec.effective_label();

    if (is_oracle(spec.method) && truth == nullptr)
        throw ConfigError("method '" + std::string(method_name(spec.method)) + "' requires simulation truth");

    if (is_dml(spec.method)) {
        const FoldPlan plan =
            make_folds(data, spec.split, spec.folds, derive_key(seed, 0x706c616eull), spec.nlo_width);
        DmlOptions options{spec.late_demean_scope, spec.pooled_final};
        EstimateResult r;
        switch (spec.method) {
            case Method::Pdml: r = pdml(data, plan, spec.boost, seed, options); break;
            case Method::DmlEarlyFe: r = dml_early_fe(data, plan, spec.boost, seed, spec.two_way, options); break;
            case Method::DmlLateFe: r = dml_late_fe(data, plan, spec.boost, seed, spec.two_way, options); break;
            case Method::DmlDummies: r = dml_dummies(data, plan, spec.boost, seed, spec.two_way, options); break;
            default: r = dml_cre(data, plan, spec.boost, seed, spec.two_way, options); break;
        }
        result.beta_hat = r.beta_hat;
        result.fold_betas = std::move(r.fold_betas);
        result.w_model_rmse = r.w_model_rmse;
        result.y_model_rmse = r.y_model_rmse;
    } else {
        switch (spec.method) {
            case Method::SimpleOls: result.beta_hat = simple_ols(data); break;
            case Method::Pols: result.beta_hat = pols(data); break;
            case Method::FixedEffects: result.beta_hat = fixed_effects(data, spec.two_way); break;
            case Method::FeOnly: result.beta_hat = fe_only(data, spec.two_way); break;
            case Method::OracleFe: result.beta_hat = oracle_fe(data, *truth, spec.two_way); break;
            default: result.beta_hat = oracle_no_fe(data, *truth); break;
        }
    }

    result.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return result;
}

} // namespace paneldml
