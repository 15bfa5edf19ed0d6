#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "paneldml/errors.hpp"
#include "paneldml/panel.hpp"
#include "paneldml/rng.hpp"

namespace paneldml {

// Causal structures: A — the unit heterogeneity influences nothing;
// B — it enters treatment and outcome; C — it additionally enters the confounders.
enum class Structure { A, B, C };

enum class Form { Linear, UShaped };

/// Law of the confounder noise: Identity = i.i.d. standard normal per column,
/// Random = jointly drawn with covariance Sigma = A'A, A ~ N(0,1) once per dataset.
enum class CovKind { Identity, Random };

/// g0 = m0: the shared functional form of the observed confounding.
inline double eval_form(Form f, double x) {
    return f == Form::Linear ? x : x * x;
}

inline const char* structure_name(Structure s) {
    switch (s) {
        case Structure::A: return "A";
        case Structure::B: return "B";
        default: return "C";
    }
}

inline Structure structure_from_name(const std::string& s) {
    if (s == "A") return Structure::A;
    if (s == "B") return Structure::B;
    if (s == "C") return Structure::C;
    throw ConfigError("unknown structure '" + s + "' (expected A, B or C)");
}

inline const char* form_name(Form f) { return f == Form::Linear ? "linear" : "ushaped"; }

inline Form form_from_name(const std::string& s) {
    if (s == "linear") return Form::Linear;
    if (s == "ushaped") return Form::UShaped;
    throw ConfigError("unknown functional form '" + s + "'");
}

struct DgpConfig {
    int n_units = 0;
    int n_periods = 0;
    int n_confounders = 1;
    Structure structure = Structure::C;
    Form form = Form::UShaped;
    double rho = 0.0;   // AR(1) coefficient of the outcome noise
    bool two_way = false;
    CovKind cov = CovKind::Identity;

    void validate() const {
        if (n_units < 2 || n_periods < 2) throw ConfigError("DGP requires N >= 2 and T >= 2");
        if (n_confounders < 1) throw ConfigError("DGP requires J >= 1");
        if (!(rho >= 0.0 && rho < 1.0)) throw ConfigError("AR(1) coefficient must satisfy 0 <= rho < 1");
    }
};

/// Generating coefficients and latent heterogeneity, hidden from feasible
/// estimators but available to the oracles and the scoring harness.
struct SimulationTruth {
    double beta = 1.0;
    std::vector<double> gamma;  // per confounder
    double delta = 0.0;
    std::vector<double> alpha0; // per confounder
    double alpha1 = 0.0;
    double alpha2 = 0.0;
    std::vector<double> u_unit; // length N
    std::vector<double> u_time; // length T, present iff two_way
    Form form = Form::Linear;

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["beta"] = beta;
        j["gamma"] = gamma;
        j["delta"] = delta;
        j["alpha0"] = alpha0;
        j["alpha1"] = alpha1;
        j["alpha2"] = alpha2;
        j["u_unit"] = u_unit;
        if (!u_time.empty()) j["u_time"] = u_time;
        j["form"] = form_name(form);
        return j;
    }

    static SimulationTruth from_json(const nlohmann::json& j) {
        SimulationTruth t;
        t.beta = j.at("beta").get<double>();
        t.gamma = j.at("gamma").get<std::vector<double>>();
        t.delta = j.at("delta").get<double>();
        t.alpha0 = j.at("alpha0").get<std::vector<double>>();
        t.alpha1 = j.at("alpha1").get<double>();
        t.alpha2 = j.at("alpha2").get<double>();
        t.u_unit = j.at("u_unit").get<std::vector<double>>();
        if (j.contains("u_time")) t.u_time = j.at("u_time").get<std::vector<double>>();
        t.form = form_from_name(j.at("form").get<std::string>());
        return t;
    }
};

/// Test-only knobs for degenerate-limit assertions. Not reachable from the CLI.
struct DgpHooks {
    bool zero_eps = false;
    bool zero_eta = false;
    bool zero_mu = false;
    bool zero_u_unit = false;
    bool zero_u_time = false;
    bool zero_alphas = false;
    bool identity_sigma = false; // force A = I on the Random-cov path
    std::optional<double> force_gamma;
    std::optional<double> force_delta;
    std::uint64_t u_stream_salt = 0; // re-keys the U_i stream only
};

// Stream tags. One stream per random object; adding a new tag never perturbs
// draws from existing streams.
namespace stream {
inline constexpr std::uint64_t kGamma = 1;
inline constexpr std::uint64_t kDelta = 2;
inline constexpr std::uint64_t kAlpha = 3;
inline constexpr std::uint64_t kUnitHet = 4;
inline constexpr std::uint64_t kTimeHet = 5;
inline constexpr std::uint64_t kSigma = 6;
inline constexpr std::uint64_t kEpsilon = 7;
inline constexpr std::uint64_t kEta = 8;
inline constexpr std::uint64_t kMu = 9;
} // namespace stream

/// Stationary AR(1) path: mu_1 ~ N(0, 1/(1-rho^2)), mu_t = rho*mu_{t-1} + e_t
/// with standard normal innovations. rho = 0 gives i.i.d. N(0,1).
inline std::vector<double> ar1_path(double rho, int length, RandomStream& rs) {
    if (!(rho >= 0.0 && rho < 1.0)) throw ConfigError("ar1_path requires 0 <= rho < 1");
    if (length < 1) throw ConfigError("ar1_path requires positive length");
    std::vector<double> out(length);
    out[0] = rs.next_gaussian() / std::sqrt(1.0 - rho * rho);
    for (int t = 1; t < length; ++t) out[t] = rho * out[t - 1] + rs.next_gaussian();
    return out;
}

/// Core generator shared by the baseline, multi-confounder and two-way laws.
inline std::pair<PanelDataset, SimulationTruth> generate_panel(const DgpConfig& cfg, std::uint64_t seed,
                                                               const DgpHooks& hooks = {}) {
    cfg.validate();
    const int N = cfg.n_units, T = cfg.n_periods, J = cfg.n_confounders;
    const int NT = N * T;

    SimulationTruth truth;
    truth.form = cfg.form;
    truth.beta = 1.0;

    {
        RandomStream rs(derive_key(seed, stream::kGamma));
        truth.gamma.resize(J);
        for (int j = 0; j < J; ++j) truth.gamma[j] = hooks.force_gamma ? *hooks.force_gamma : rs.next_gaussian();
    }
    {
        RandomStream rs(derive_key(seed, stream::kDelta));
        truth.delta = hooks.force_delta ? *hooks.force_delta : rs.next_gaussian();
    }
    {
        RandomStream rs(derive_key(seed, stream::kAlpha));
        truth.alpha0.resize(J);
        for (int j = 0; j < J; ++j) truth.alpha0[j] = rs.next_gaussian();
        truth.alpha1 = rs.next_gaussian();
        truth.alpha2 = rs.next_gaussian();
        if (hooks.zero_alphas) {
            std::fill(truth.alpha0.begin(), truth.alpha0.end(), 0.0);
            truth.alpha1 = truth.alpha2 = 0.0;
        }
    }
    {
        RandomStream rs(derive_key(seed, stream::kUnitHet, hooks.u_stream_salt));
        truth.u_unit.assign(N, 0.0);
        if (!hooks.zero_u_unit)
            for (int i = 0; i < N; ++i) truth.u_unit[i] = rs.next_gaussian();
    }
    if (cfg.two_way) {
        RandomStream rs(derive_key(seed, stream::kTimeHet));
        truth.u_time.assign(T, 0.0);
        if (!hooks.zero_u_time)
            for (int t = 0; t < T; ++t) truth.u_time[t] = rs.next_gaussian();
    }

    // Confounder noise mixing matrix: eps_row = A^T z with z ~ N(0, I_J),
    // so eps ~ N(0, A^T A). Identity law keeps eps i.i.d. standard normal.
    std::vector<double> mix; // J*J, row-major, only for CovKind::Random
    if (cfg.cov == CovKind::Random) {
        mix.assign(static_cast<std::size_t>(J) * J, 0.0);
        if (hooks.identity_sigma) {
            for (int j = 0; j < J; ++j) mix[static_cast<std::size_t>(j) * J + j] = 1.0;
        } else {
            RandomStream rs(derive_key(seed, stream::kSigma));
            for (auto& a : mix) a = rs.next_gaussian();
        }
    }

    PanelDataset data;
    data.n_units = N;
    data.n_periods = T;
    data.n_confounders = J;
    data.outcome.assign(NT, 0.0);
    data.treatment.assign(NT, 0.0);
    data.confounders.assign(static_cast<std::size_t>(NT) * J, 0.0);

    const bool u_in_x = cfg.structure == Structure::C;
    const bool u_in_wy = cfg.structure != Structure::A;

    {
        RandomStream rs(derive_key(seed, stream::kEpsilon));
        std::vector<double> z(J);
        for (int i = 0; i < N; ++i) {
            for (int t = 0; t < T; ++t) {
                const int r = panel_row(i, t, T);
                for (int j = 0; j < J; ++j) z[j] = hooks.zero_eps ? 0.0 : rs.next_gaussian();
                for (int j = 0; j < J; ++j) {
                    double eps;
                    if (cfg.cov == CovKind::Random) {
                        eps = 0.0;
                        for (int k = 0; k < J; ++k) eps += mix[static_cast<std::size_t>(k) * J + j] * z[k];
                    } else {
                        eps = z[j];
                    }
                    double x = truth.alpha0[j] + eps;
                    if (u_in_x) {
                        x += truth.delta * truth.u_unit[i];
                        if (cfg.two_way) x += truth.delta * truth.u_time[t];
                    }
                    data.x_col(j)[r] = x;
                }
            }
        }
    }

    {
        RandomStream rs_eta(derive_key(seed, stream::kEta));
        RandomStream rs_mu(derive_key(seed, stream::kMu));
        for (int i = 0; i < N; ++i) {
            std::vector<double> mu;
            if (!hooks.zero_mu) mu = ar1_path(cfg.rho, T, rs_mu);
            for (int t = 0; t < T; ++t) {
                const int r = panel_row(i, t, T);
                double conf = 0.0;
                for (int j = 0; j < J; ++j) conf += truth.gamma[j] / J * eval_form(cfg.form, data.x(j, r));
                double het = 0.0;
                if (u_in_wy) {
                    het += truth.delta * truth.u_unit[i];
                    if (cfg.two_way) het += truth.delta * truth.u_time[t];
                }
                const double eta = hooks.zero_eta ? 0.0 : rs_eta.next_gaussian();
                const double w = truth.alpha1 + conf + het + eta;
                const double y = truth.alpha2 + truth.beta * w + conf + het + (hooks.zero_mu ? 0.0 : mu[t]);
                data.treatment[r] = w;
                data.outcome[r] = y;
            }
        }
    }

    return {std::move(data), std::move(truth)};
}

/// Baseline law (single confounder, i.i.d. noise).
inline std::pair<PanelDataset, SimulationTruth> gen_baseline(const DgpConfig& cfg, std::uint64_t seed,
                                                             const DgpHooks& hooks = {}) {
    if (cfg.n_confounders != 1) throw ConfigError("gen_baseline requires J == 1");
    if (cfg.two_way) throw ConfigError("gen_baseline requires two_way == false");
    if (cfg.cov != CovKind::Identity) throw ConfigError("gen_baseline uses i.i.d. confounder noise");
    return generate_panel(cfg, seed, hooks);
}

/// Multi-confounder law: eps drawn jointly with Sigma = A'A.
inline std::pair<PanelDataset, SimulationTruth> gen_multi_confounder(const DgpConfig& cfg, std::uint64_t seed,
                                                                     const DgpHooks& hooks = {}) {
    if (cfg.n_confounders < 1) throw ConfigError("gen_multi_confounder requires J >= 1");
    DgpConfig c = cfg;
    c.cov = CovKind::Random;
    return generate_panel(c, seed, hooks);
}

/// Two-way law: every delta*U_i term becomes delta*U_i + delta*U_t.
inline std::pair<PanelDataset, SimulationTruth> gen_twoway(const DgpConfig& cfg, std::uint64_t seed,
                                                           const DgpHooks& hooks = {}) {
    if (!cfg.two_way) throw ConfigError("gen_twoway requires two_way == true");
    return generate_panel(cfg, seed, hooks);
}

inline nlohmann::json dgp_config_to_json(const DgpConfig& cfg) {
    nlohmann::json j;
    j["n_units"] = cfg.n_units;
    j["n_periods"] = cfg.n_periods;
    j["n_confounders"] = cfg.n_confounders;
    j["structure"] = structure_name(cfg.structure);
    j["form"] = form_name(cfg.form);
    j["rho"] = cfg.rho;
    j["two_way"] = cfg.two_way;
    j["cov"] = cfg.cov == CovKind::Identity ? "identity" : "random";
    return j;
}

inline DgpConfig dgp_config_from_json(const nlohmann::json& j) {
    DgpConfig cfg;
    cfg.n_units = j.at("n_units").get<int>();
    cfg.n_periods = j.at("n_periods").get<int>();
    cfg.n_confounders = j.value("n_confounders", 1);
    cfg.structure = structure_from_name(j.value("structure", std::string("C")));
    cfg.form = form_from_name(j.value("form", std::string("ushaped")));
    cfg.rho = j.value("rho", 0.0);
    cfg.two_way = j.value("two_way", false);
    const std::string cov = j.value("cov", std::string("identity"));
    if (cov == "identity")
        cfg.cov = CovKind::Identity;
    else if (cov == "random")
        cfg.cov = CovKind::Random;
    else
        throw ConfigError("unknown cov '" + cov + "' (expected identity or random)");
    cfg.validate();
    return cfg;
}

} // namespace paneldml
