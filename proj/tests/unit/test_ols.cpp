#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "paneldml/ols.hpp"
#include "paneldml/rng.hpp"

using namespace paneldml;

namespace {

// Independent oracle: normal equations solved by Gaussian elimination with
// partial pivoting. Only used on small, well-conditioned systems.
std::vector<double> normal_equation_solve(const DesignMatrix& X, const std::vector<double>& y) {
    const int p = X.cols(), n = X.rows();
    std::vector<std::vector<double>> A(p, std::vector<double>(p + 1, 0.0));
    for (int a = 0; a < p; ++a) {
        for (int b = 0; b < p; ++b)
            for (int i = 0; i < n; ++i) A[a][b] += X.column(a)[i] * X.column(b)[i];
        for (int i = 0; i < n; ++i) A[a][p] += X.column(a)[i] * y[i];
    }
    for (int col = 0; col < p; ++col) {
        int pivot = col;
        for (int r = col + 1; r < p; ++r)
            if (std::abs(A[r][col]) > std::abs(A[pivot][col])) pivot = r;
        std::swap(A[col], A[pivot]);
        for (int r = col + 1; r < p; ++r) {
            const double f = A[r][col] / A[col][col];
            for (int c = col; c <= p; ++c) A[r][c] -= f * A[col][c];
        }
    }
    std::vector<double> beta(p, 0.0);
    for (int r = p - 1; r >= 0; --r) {
        double s = A[r][p];
        for (int c = r + 1; c < p; ++c) s -= A[r][c] * beta[c];
        beta[r] = s / A[r][r];
    }
    return beta;
}

} // namespace

TEST_CASE("exact line") {
    DesignMatrix X(3);
    X.add_intercept();
    X.add_column("x", std::vector<double>{0.0, 1.0, 2.0});
    const auto fit = ols_fit(X, std::vector<double>{1.0, 3.0, 5.0});
    CHECK(fit.coef("intercept") == Catch::Approx(1.0).margin(1e-12));
    CHECK(fit.coef("x") == Catch::Approx(2.0).margin(1e-12));
}

TEST_CASE("constant fit") {
    DesignMatrix X(3);
    X.add_intercept();
    const auto fit = ols_fit(X, std::vector<double>{4.0, 4.0, 4.0});
    CHECK(fit.coef("intercept") == Catch::Approx(4.0).margin(1e-12));
    for (double r : fit.residuals) CHECK(std::abs(r) < 1e-12);
}

TEST_CASE("planted coefficients recovered with zero noise") {
    RandomStream rs(99);
    const int n = 50;
    std::vector<double> c1(n), c2(n), c3(n), y(n);
    for (int i = 0; i < n; ++i) {
        c1[i] = 1.0;
        c2[i] = rs.next_gaussian();
        c3[i] = rs.next_gaussian();
        y[i] = 0.7 * c1[i] - 2.5 * c2[i] + 0.3 * c3[i];
    }
    DesignMatrix X(n);
    X.add_column("c1", c1).add_column("c2", c2).add_column("c3", c3);
    const auto fit = ols_fit(X, y);
    CHECK(std::abs(fit.coef("c1") - 0.7) < 1e-10);
    CHECK(std::abs(fit.coef("c2") + 2.5) < 1e-10);
    CHECK(std::abs(fit.coef("c3") - 0.3) < 1e-10);

    const auto oracle = normal_equation_solve(X, y);
    for (int j = 0; j < 3; ++j) CHECK(fit.coefficients[j] == Catch::Approx(oracle[j]).margin(1e-8));
}

TEST_CASE("matches the elimination oracle on random systems") {
    for (std::uint64_t seed = 1; seed <= 8; ++seed) {
        RandomStream rs(seed);
        const int n = 40, p = 1 + static_cast<int>(rs.next_below(5));
        DesignMatrix X(n);
        std::vector<double> y(n);
        for (int j = 0; j < p; ++j) {
            std::vector<double> col(n);
            for (auto& v : col) v = rs.next_gaussian();
            X.add_column("c" + std::to_string(j), col);
        }
        for (auto& v : y) v = rs.next_gaussian();
        const auto fit = ols_fit(X, y);
        const auto oracle = normal_equation_solve(X, y);
        for (int j = 0; j < p; ++j)
            CHECK(fit.coefficients[j] == Catch::Approx(oracle[j]).epsilon(1e-8).margin(1e-8));

        // residual orthogonality, relative to column scale
        for (int j = 0; j < p; ++j) {
            double dot = 0.0, norm = 0.0;
            for (int i = 0; i < n; ++i) {
                dot += fit.residuals[i] * X.column(j)[i];
                norm += X.column(j)[i] * X.column(j)[i];
            }
            CHECK(std::abs(dot) / norm < 1e-8);
        }
    }
}

TEST_CASE("singular designs are rejected and name the offender") {
    const int n = 10;
    std::vector<double> a(n), b(n);
    RandomStream rs(5);
    for (int i = 0; i < n; ++i) {
        a[i] = rs.next_gaussian();
        b[i] = 2.0 * a[i]; // exact collinearity
    }
    DesignMatrix X(n);
    X.add_column("a", a).add_column("twice_a", b);
    std::vector<double> y(n, 1.0);
    try {
        ols_fit(X, y);
        FAIL("expected SingularDesignError");
    } catch (const SingularDesignError& e) {
        REQUIRE(e.columns.size() == 1);
        const std::string c = e.columns[0];
        CHECK((c == "a" || c == "twice_a"));
        CHECK(std::string(e.what()).find(c) != std::string::npos);
    }
}

TEST_CASE("dimension and emptiness errors") {
    DesignMatrix X(3);
    X.add_intercept();
    CHECK_THROWS_AS(ols_fit(X, std::vector<double>{1.0, 2.0}), DimensionError);
    DesignMatrix wide(1);
    wide.add_intercept();
    wide.add_column("x", std::vector<double>{1.0});
    CHECK_THROWS_AS(ols_fit(wide, std::vector<double>{1.0}), SingularDesignError);
}
