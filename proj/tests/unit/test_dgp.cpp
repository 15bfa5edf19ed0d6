#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "paneldml/dgp.hpp"
#include "paneldml/estimators.hpp"

using namespace paneldml;

namespace {
DgpConfig base_cfg(int N, int T, Structure s, Form f) {
    DgpConfig cfg;
    cfg.n_units = N;
    cfg.n_periods = T;
    cfg.n_confounders = 1;
    cfg.structure = s;
    cfg.form = f;
    return cfg;
}

double correlation(const std::vector<double>& a, const std::vector<double>& b) {
    const double n = static_cast<double>(a.size());
    double ma = 0, mb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ma += a[i];
        mb += b[i];
    }
    ma /= n;
    mb /= n;
    double sab = 0, saa = 0, sbb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        sab += (a[i] - ma) * (b[i] - mb);
        saa += (a[i] - ma) * (a[i] - ma);
        sbb += (b[i] - mb) * (b[i] - mb);
    }
    return sab / std::sqrt(saa * sbb);
}
} // namespace

TEST_CASE("eval_form") {
    CHECK(eval_form(Form::Linear, 3.0) == 3.0);
    CHECK(eval_form(Form::UShaped, -2.0) == 4.0);
    CHECK(eval_form(Form::UShaped, 0.0) == 0.0);
}

TEST_CASE("fixed seed gives byte-identical datasets") {
    const auto cfg = base_cfg(20, 6, Structure::C, Form::UShaped);
    const auto [d1, t1] = gen_baseline(cfg, 123);
    const auto [d2, t2] = gen_baseline(cfg, 123);
    CHECK(d1.outcome == d2.outcome);
    CHECK(d1.treatment == d2.treatment);
    CHECK(d1.confounders == d2.confounders);
    CHECK(t1.gamma == t2.gamma);
    const auto [d3, t3] = gen_baseline(cfg, 124);
    CHECK(d1.outcome != d3.outcome);
}

TEST_CASE("zero-noise hook: outcome equals treatment exactly") {
    DgpHooks hooks;
    hooks.zero_mu = true;
    hooks.zero_alphas = true;
    hooks.force_gamma = 0.0;
    hooks.force_delta = 0.0;
    const auto cfg = base_cfg(5, 4, Structure::C, Form::Linear);
    const auto [data, truth] = gen_baseline(cfg, 7, hooks);
    for (int r = 0; r < data.rows(); ++r) CHECK(data.outcome[r] == data.treatment[r]);

    // slope exactly one even with alphas left in place
    DgpHooks h2;
    h2.zero_mu = true;
    h2.force_gamma = 0.0;
    h2.force_delta = 0.0;
    const auto [d2, t2] = gen_baseline(cfg, 7, h2);
    CHECK(simple_ols(d2) == Catch::Approx(1.0).margin(1e-10));
}

TEST_CASE("structure A ignores the U stream bit-for-bit") {
    const auto cfg = base_cfg(15, 5, Structure::A, Form::UShaped);
    DgpHooks salted;
    salted.u_stream_salt = 0xabcdef;
    const auto [d1, t1] = gen_baseline(cfg, 55);
    const auto [d2, t2] = gen_baseline(cfg, 55, salted);
    CHECK(t1.u_unit != t2.u_unit); // the U draw itself changed
    CHECK(d1.outcome == d2.outcome);
    CHECK(d1.treatment == d2.treatment);
    CHECK(d1.confounders == d2.confounders);
}

TEST_CASE("U correlates with X only under structure C") {
    DgpHooks hooks;
    hooks.force_delta = 1.0;
    {
        auto cfg = base_cfg(400, 8, Structure::B, Form::Linear);
        const auto [data, truth] = gen_baseline(cfg, 31, hooks);
        std::vector<double> u_bcast(data.rows());
        for (int i = 0; i < cfg.n_units; ++i)
            for (int t = 0; t < cfg.n_periods; ++t) u_bcast[panel_row(i, t, cfg.n_periods)] = truth.u_unit[i];
        std::vector<double> x(data.x_col(0).begin(), data.x_col(0).end());
        CHECK(std::abs(correlation(x, u_bcast)) < 0.03);
    }
    {
        auto cfg = base_cfg(400, 8, Structure::C, Form::Linear);
        const auto [data, truth] = gen_baseline(cfg, 31, hooks);
        std::vector<double> u_bcast(data.rows());
        for (int i = 0; i < cfg.n_units; ++i)
            for (int t = 0; t < cfg.n_periods; ++t) u_bcast[panel_row(i, t, cfg.n_periods)] = truth.u_unit[i];
        std::vector<double> x(data.x_col(0).begin(), data.x_col(0).end());
        CHECK(std::abs(correlation(x, u_bcast)) > 0.3);
    }
}

TEST_CASE("oracle FE recovers beta on a large structure-C draw") {
    auto cfg = base_cfg(2000, 10, Structure::C, Form::Linear);
    const auto [data, truth] = gen_baseline(cfg, 2024);
    CHECK(fixed_effects(data) == Catch::Approx(1.0).margin(0.05));
}

TEST_CASE("ar1_path statistics") {
    auto lag1 = [](const std::vector<double>& v) {
        std::vector<double> a(v.begin(), v.end() - 1), b(v.begin() + 1, v.end());
        return correlation(a, b);
    };
    {
        RandomStream rs(derive_key(77, 1));
        const auto path = ar1_path(0.0, 100000, rs);
        CHECK(std::abs(lag1(path)) < 0.02);
        double m = 0, s = 0;
        for (double x : path) m += x;
        m /= path.size();
        for (double x : path) s += (x - m) * (x - m);
        CHECK(std::abs(s / path.size() - 1.0) < 0.05);
    }
    {
        RandomStream rs(derive_key(77, 2));
        const auto path = ar1_path(0.9, 100000, rs);
        CHECK(lag1(path) == Catch::Approx(0.9).margin(0.02));
        double m = 0, s = 0;
        for (double x : path) m += x;
        m /= path.size();
        for (double x : path) s += (x - m) * (x - m);
        const double target = 1.0 / (1.0 - 0.81);
        CHECK(std::abs(s / path.size() - target) / target < 0.05);
    }
    RandomStream rs(1);
    CHECK_THROWS_AS(ar1_path(1.0, 10, rs), ConfigError);
}

TEST_CASE("multi-confounder noise matches Sigma = A'A") {
    auto cfg = base_cfg(1000, 100, Structure::A, Form::Linear); // U plays no role here
    cfg.n_confounders = 3;
    cfg.cov = CovKind::Random;
    DgpHooks hooks;
    hooks.zero_alphas = true; // so X_j = eps_j directly in structure A
    const auto [data, truth] = gen_multi_confounder(cfg, 404, hooks);
    const int J = 3, NT = data.rows();

    // reconstruct Sigma from the generator's own A draw
    std::vector<double> A(J * J);
    {
        RandomStream rs(derive_key(404, stream::kSigma));
        for (auto& a : A) a = rs.next_gaussian();
    }
    auto sigma = [&](int a, int b) {
        double s = 0.0;
        for (int k = 0; k < J; ++k) s += A[k * J + a] * A[k * J + b];
        return s;
    };

    for (int a = 0; a < J; ++a) {
        for (int b = 0; b < J; ++b) {
            double cab = 0.0;
            for (int r = 0; r < NT; ++r) cab += data.x(a, r) * data.x(b, r);
            cab /= NT;
            const double expect = sigma(a, b);
            const double scale = std::sqrt(sigma(a, a) * sigma(b, b));
            CHECK(std::abs(cab - expect) < 0.05 * scale);
        }
    }
    // Sigma is symmetric PSD by construction: diagonal nonnegative
    for (int a = 0; a < J; ++a) CHECK(sigma(a, a) >= 0.0);
}

TEST_CASE("multi-confounder with identity Sigma reduces to the baseline") {
    auto cfg = base_cfg(10, 5, Structure::C, Form::UShaped);
    cfg.cov = CovKind::Random;
    DgpHooks hooks;
    hooks.identity_sigma = true;
    const auto [dm, tm] = gen_multi_confounder(cfg, 991, hooks);

    auto cfg_base = base_cfg(10, 5, Structure::C, Form::UShaped);
    const auto [db, tb] = gen_baseline(cfg_base, 991);
    CHECK(dm.outcome == db.outcome);
    CHECK(dm.treatment == db.treatment);
    CHECK(dm.confounders == db.confounders);
}

TEST_CASE("two-way with U_t zeroed reproduces the baseline draw") {
    auto cfg = base_cfg(12, 6, Structure::C, Form::UShaped);
    cfg.two_way = true;
    DgpHooks hooks;
    hooks.zero_u_time = true;
    const auto [dt, tt] = gen_twoway(cfg, 314, hooks);

    const auto [db, tb] = gen_baseline(base_cfg(12, 6, Structure::C, Form::UShaped), 314);
    CHECK(dt.outcome == db.outcome);
    CHECK(dt.treatment == db.treatment);
    CHECK(dt.confounders == db.confounders);
    CHECK(tt.u_time == std::vector<double>(6, 0.0));
}

TEST_CASE("two-way FE removes both heterogeneity dimensions (linear, structure B)") {
    auto cfg = base_cfg(300, 12, Structure::B, Form::Linear);
    cfg.two_way = true;
    const auto [data, truth] = gen_twoway(cfg, 808);
    CHECK(fixed_effects(data, /*two_way=*/true) == Catch::Approx(1.0).margin(0.05));
}

TEST_CASE("truth JSON round trip") {
    auto cfg = base_cfg(4, 3, Structure::B, Form::UShaped);
    cfg.two_way = true;
    const auto [data, truth] = generate_panel(cfg, 5);
    const auto back = SimulationTruth::from_json(truth.to_json());
    CHECK(back.beta == truth.beta);
    CHECK(back.gamma == truth.gamma);
    CHECK(back.delta == truth.delta);
    CHECK(back.u_unit == truth.u_unit);
    CHECK(back.u_time == truth.u_time);
    CHECK(back.form == truth.form);
}

TEST_CASE("config validation") {
    auto cfg = base_cfg(1, 5, Structure::A, Form::Linear);
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = base_cfg(5, 5, Structure::A, Form::Linear);
    cfg.rho = 1.0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = base_cfg(5, 5, Structure::A, Form::Linear);
    cfg.n_confounders = 0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = base_cfg(5, 5, Structure::A, Form::Linear);
    cfg.n_confounders = 2;
    CHECK_THROWS_AS(gen_baseline(cfg, 1), ConfigError);
    cfg.n_confounders = 1;
    cfg.two_way = true;
    CHECK_THROWS_AS(gen_baseline(cfg, 1), ConfigError);
    cfg.two_way = false;
    CHECK_THROWS_AS(gen_twoway(cfg, 1), ConfigError);
}
