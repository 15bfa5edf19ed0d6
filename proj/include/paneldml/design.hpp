#pragma once

#include <Eigen/Dense>
#include <span>
#include <string>
#include <vector>

#include "paneldml/errors.hpp"

namespace paneldml {

/// Named regression design. Columns are appended in order; names must be unique.
class DesignMatrix {
public:
    explicit DesignMatrix(int rows) : rows_(rows) {}

    DesignMatrix& add_column(const std::string& name, std::span<const double> values) {
        if (static_cast<int>(values.size()) != rows_)
            throw DimensionError("column '" + name + "' length != design rows");
        for (const auto& n : names_)
            if (n == name) throw ConfigError("duplicate design column '" + name + "'");
        names_.push_back(name);
        cols_.emplace_back(values.begin(), values.end());
        return *this;
    }

    DesignMatrix& add_intercept(const std::string& name = "intercept") {
        std::vector<double> ones(rows_, 1.0);
        return add_column(name, ones);
    }

    int rows() const { return rows_; }
    int cols() const { return static_cast<int>(cols_.size()); }
    const std::vector<std::string>& names() const { return names_; }
    const std::vector<double>& column(int j) const { return cols_[j]; }

    Eigen::MatrixXd to_eigen() const {
        Eigen::MatrixXd m(rows_, cols());
        for (int j = 0; j < cols(); ++j)
            for (int i = 0; i < rows_; ++i) m(i, j) = cols_[j][i];
        return m;
    }

private:
    int rows_;
    std::vector<std::string> names_;
    std::vector<std::vector<double>> cols_;
};

} // namespace paneldml
