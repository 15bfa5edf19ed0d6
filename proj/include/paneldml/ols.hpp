#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "paneldml/design.hpp"
#include "paneldml/errors.hpp"

namespace paneldml {

struct OlsFit {
    std::vector<std::string> names;
    std::vector<double> coefficients; // keyed by names, same order
    std::vector<double> residuals;
    int used_rows = 0;

    double coef(const std::string& name) const {
        for (std::size_t i = 0; i < names.size(); ++i)
            if (names[i] == name) return coefficients[i];
        throw ConfigError("no coefficient named '" + name + "'");
    }
};

/// Least squares via Householder QR with column pivoting. Pivots whose
/// magnitude falls below 1e-10 of the largest are treated as zero; a deficient
/// rank raises SingularDesignError naming the dependent columns instead of
/// silently falling back to a pseudo-inverse.
inline OlsFit ols_fit(const DesignMatrix& X, std::span<const double> y) {
    if (static_cast<int>(y.size()) != X.rows())
        throw DimensionError("ols_fit: length(y) != rows(X)");
    if (X.cols() == 0) throw ConfigError("ols_fit: empty design");
    if (X.rows() < X.cols())
        throw SingularDesignError("ols_fit: fewer rows than columns", X.names());

    const Eigen::MatrixXd A = X.to_eigen();
    Eigen::Map<const Eigen::VectorXd> b(y.data(), static_cast<Eigen::Index>(y.size()));

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(A);
    qr.setThreshold(1e-10);
    const int rank = static_cast<int>(qr.rank());
    if (rank < X.cols()) {
        // Columns beyond the numerical rank in pivot order are the dependent ones.
        std::vector<std::string> offenders;
        const auto& perm = qr.colsPermutation().indices();
        for (int k = rank; k < X.cols(); ++k) offenders.push_back(X.names()[perm[k]]);
        std::string msg = "singular design; dependent columns:";
        for (const auto& n : offenders) msg += " " + n;
        throw SingularDesignError(msg, offenders);
    }

    const Eigen::VectorXd beta = qr.solve(b);
    const Eigen::VectorXd resid = b - A * beta;

    OlsFit fit;
    fit.names = X.names();
    fit.coefficients.assign(beta.data(), beta.data() + beta.size());
    fit.residuals.assign(resid.data(), resid.data() + resid.size());
    fit.used_rows = X.rows();
    return fit;
}

} // namespace paneldml
