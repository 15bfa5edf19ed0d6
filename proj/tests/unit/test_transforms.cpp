#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "paneldml/ols.hpp"
#include "paneldml/rng.hpp"
#include "paneldml/transforms.hpp"

using namespace paneldml;

namespace {
PanelDataset shell(int N, int T) {
    PanelDataset d;
    d.n_units = N;
    d.n_periods = T;
    d.n_confounders = 0;
    d.outcome.assign(N * T, 0.0);
    d.treatment.assign(N * T, 0.0);
    return d;
}
} // namespace

TEST_CASE("within_demean_unit handles the worked examples") {
    {
        const auto d = shell(1, 3);
        const auto out = within_demean_unit(std::vector<double>{1, 2, 3}, d);
        CHECK(out == std::vector<double>{-1, 0, 1});
    }
    {
        const auto d = shell(2, 2);
        const auto out = within_demean_unit(std::vector<double>{1, 3, 10, 20}, d);
        CHECK(out == std::vector<double>{-1, 1, -5, 5});
    }
    {
        const auto d = shell(2, 3);
        const auto out = within_demean_unit(std::vector<double>{5, 5, 5, -2, -2, -2}, d);
        for (double v : out) CHECK(std::abs(v) < 1e-15);
    }
}

TEST_CASE("within_demean_twoway worked examples") {
    const auto d = shell(2, 2);
    {
        const auto out = within_demean_twoway(std::vector<double>{0, 1, 1, 0}, d);
        CHECK(out[0] == Catch::Approx(-0.5).margin(1e-12));
        CHECK(out[1] == Catch::Approx(0.5).margin(1e-12));
        CHECK(out[2] == Catch::Approx(0.5).margin(1e-12));
        CHECK(out[3] == Catch::Approx(-0.5).margin(1e-12));
    }
    {
        // additively separable a_i + b_t is annihilated
        const double a[2] = {3.0, -1.0};
        const double b[2] = {0.5, 2.0};
        std::vector<double> v(4);
        for (int i = 0; i < 2; ++i)
            for (int t = 0; t < 2; ++t) v[panel_row(i, t, 2)] = a[i] + b[t];
        for (double x : within_demean_twoway(v, d)) CHECK(std::abs(x) < 1e-12);
    }
    {
        for (double x : within_demean_twoway(std::vector<double>{7, 7, 7, 7}, d)) CHECK(std::abs(x) < 1e-15);
    }
}

TEST_CASE("unit and period means") {
    {
        const auto d = shell(1, 4);
        const auto m = unit_means(std::vector<double>{1, 2, 3, 4}, d);
        for (double v : m) CHECK(v == Catch::Approx(2.5));
    }
    {
        const auto d = shell(2, 2);
        CHECK(unit_means(std::vector<double>{1, 3, 0, 8}, d) == std::vector<double>{2, 2, 4, 4});
        // idempotence on per-unit constants
        const std::vector<double> c{5, 5, -1, -1};
        CHECK(unit_means(c, d) == c);
    }
    {
        const auto d = shell(2, 2);
        // layout is unit-major: rows are (1,1),(1,2),(2,1),(2,2)
        CHECK(period_means(std::vector<double>{1, 3, 5, 7}, d) == std::vector<double>{3, 5, 3, 5});
        const auto d21 = shell(2, 1);
        CHECK(period_means(std::vector<double>{2, 6}, d21) == std::vector<double>{4, 4});
        const std::vector<double> cp{9, 1, 9, 1};
        CHECK(period_means(cp, d) == cp);
    }
}

TEST_CASE("demeaning properties: idempotence, reconstruction, variance") {
    const auto d = shell(6, 7);
    RandomStream rs(11);
    std::vector<double> v(d.rows());
    for (auto& x : v) x = rs.next_gaussian() * 3.0 + 1.0;

    const auto once = within_demean_unit(v, d);
    const auto twice = within_demean_unit(once, d);
    for (int r = 0; r < d.rows(); ++r) CHECK(std::abs(twice[r] - once[r]) < 1e-12);

    // reconstruction: at most one rounding step away from the input
    const auto means = unit_means(v, d);
    for (int r = 0; r < d.rows(); ++r) CHECK(std::abs(once[r] + means[r] - v[r]) <= 1e-15 * std::abs(v[r]));

    // per-unit sums vanish
    for (int i = 0; i < d.n_units; ++i) {
        double s = 0.0;
        for (int t = 0; t < d.n_periods; ++t) s += once[panel_row(i, t, d.n_periods)];
        CHECK(std::abs(s) < 1e-10);
    }

    auto var = [](const std::vector<double>& x) {
        double m = 0.0;
        for (double a : x) m += a;
        m /= x.size();
        double s = 0.0;
        for (double a : x) s += (a - m) * (a - m);
        return s / x.size();
    };
    CHECK(var(once) <= var(v) + 1e-12);

    // two-way: unit sums and period sums of the output vanish
    const auto tw = within_demean_twoway(v, d);
    for (int i = 0; i < d.n_units; ++i) {
        double s = 0.0;
        for (int t = 0; t < d.n_periods; ++t) s += tw[panel_row(i, t, d.n_periods)];
        CHECK(std::abs(s) < 1e-8);
    }
    for (int t = 0; t < d.n_periods; ++t) {
        double s = 0.0;
        for (int i = 0; i < d.n_units; ++i) s += tw[panel_row(i, t, d.n_periods)];
        CHECK(std::abs(s) < 1e-8);
    }
}

TEST_CASE("unit dummies are one-hot with column sums T") {
    const auto d = shell(3, 2);
    const auto D = unit_dummy_columns(d);
    REQUIRE(D.cols() == 3);
    for (int r = 0; r < d.rows(); ++r) {
        double row_sum = 0.0;
        for (int j = 0; j < D.cols(); ++j) row_sum += D.column(j)[r];
        CHECK(row_sum == 1.0);
    }
    for (int j = 0; j < D.cols(); ++j) {
        double col_sum = 0.0;
        for (int r = 0; r < d.rows(); ++r) col_sum += D.column(j)[r];
        CHECK(col_sum == 2.0);
    }

    const auto d21 = shell(2, 1);
    const auto D21 = unit_dummy_columns(d21);
    CHECK(D21.column(0) == std::vector<double>{1, 0});
    CHECK(D21.column(1) == std::vector<double>{0, 1});
}

namespace {
// small linear panel draw with unit heterogeneity for the equivalence tests
struct LinearDraw {
    PanelDataset data;
    std::vector<double> y, w, x;
};
LinearDraw linear_draw(int N, int T, std::uint64_t seed) {
    LinearDraw out;
    out.data = shell(N, T);
    RandomStream rs(seed);
    out.x.resize(N * T);
    out.w.resize(N * T);
    out.y.resize(N * T);
    for (int i = 0; i < N; ++i) {
        const double u = rs.next_gaussian();
        for (int t = 0; t < T; ++t) {
            const int r = panel_row(i, t, T);
            out.x[r] = 0.4 + 0.8 * u + rs.next_gaussian();
            out.w[r] = -0.2 + 0.9 * out.x[r] + 0.7 * u + rs.next_gaussian();
            out.y[r] = 0.1 + 1.0 * out.w[r] + 0.9 * out.x[r] + 0.7 * u + rs.next_gaussian();
        }
    }
    return out;
}
} // namespace

TEST_CASE("FE equals dummy-variable OLS") {
    const auto draw = linear_draw(12, 5, 17);
    const auto& d = draw.data;

    DesignMatrix within(d.rows());
    within.add_column("w", within_demean_unit(draw.w, d));
    within.add_column("x", within_demean_unit(draw.x, d));
    const double fe_slope = ols_fit(within, within_demean_unit(draw.y, d)).coef("w");

    DesignMatrix dummy(d.rows());
    dummy.add_column("w", draw.w);
    dummy.add_column("x", draw.x);
    append_unit_dummies(dummy, d); // full dummy block, no intercept
    const auto fit = ols_fit(dummy, draw.y);
    CHECK(std::abs(fit.coef("w") - fe_slope) < 1e-8);
    CHECK(std::abs(fit.coef("x") - ols_fit(within, within_demean_unit(draw.y, d)).coef("x")) < 1e-8);
}

TEST_CASE("Mundlak device reproduces the FE slope") {
    for (std::uint64_t seed : {3ull, 29ull}) {
        const auto draw = linear_draw(15, 4, seed);
        const auto& d = draw.data;

        DesignMatrix within(d.rows());
        within.add_column("w", within_demean_unit(draw.w, d));
        within.add_column("x", within_demean_unit(draw.x, d));
        const double fe_slope = ols_fit(within, within_demean_unit(draw.y, d)).coef("w");

        DesignMatrix mundlak(d.rows());
        mundlak.add_intercept();
        mundlak.add_column("w", draw.w);
        mundlak.add_column("x", draw.x);
        mundlak.add_column("w_bar", unit_means(draw.w, d));
        mundlak.add_column("x_bar", unit_means(draw.x, d));
        const double cre_slope = ols_fit(mundlak, draw.y).coef("w");
        CHECK(std::abs(cre_slope - fe_slope) < 1e-8);
    }
}

TEST_CASE("length mismatches raise dimension errors") {
    const auto d = shell(2, 3);
    CHECK_THROWS_AS(within_demean_unit(std::vector<double>{1, 2}, d), DimensionError);
    CHECK_THROWS_AS(unit_means(std::vector<double>{1, 2}, d), DimensionError);
    CHECK_THROWS_AS(period_means(std::vector<double>{1, 2}, d), DimensionError);
    CHECK_THROWS_AS(within_demean_twoway(std::vector<double>{1, 2}, d), DimensionError);
}
