#pragma once

#include <algorithm>
#include <span>
#include <vector>

#include "paneldml/design.hpp"
#include "paneldml/errors.hpp"
#include "paneldml/panel.hpp"

namespace paneldml {

namespace detail {
inline void require_panel_length(std::span<const double> v, const PanelDataset& data, const char* op) {
    if (static_cast<int>(v.size()) != data.rows())
        throw DimensionError(std::string(op) + ": vector length != N*T");
}
} // namespace detail

/// Per-unit time means, broadcast back to panel shape (constant within unit).
inline std::vector<double> unit_means(std::span<const double> v, const PanelDataset& data) {
    detail::require_panel_length(v, data, "unit_means");
    const int N = data.n_units, T = data.n_periods;
    std::vector<double> out(v.size());
    for (int i = 0; i < N; ++i) {
        double s = 0.0;
        for (int t = 0; t < T; ++t) s += v[panel_row(i, t, T)];
        const double m = s / T;
        for (int t = 0; t < T; ++t) out[panel_row(i, t, T)] = m;
    }
    return out;
}

/// Per-period cross-unit means, broadcast back to panel shape.
inline std::vector<double> period_means(std::span<const double> v, const PanelDataset& data) {
    detail::require_panel_length(v, data, "period_means");
    const int N = data.n_units, T = data.n_periods;
    std::vector<double> out(v.size());
    for (int t = 0; t < T; ++t) {
        double s = 0.0;
        for (int i = 0; i < N; ++i) s += v[panel_row(i, t, T)];
        const double m = s / N;
        for (int i = 0; i < N; ++i) out[panel_row(i, t, T)] = m;
    }
    return out;
}

/// Within transformation: v_it - v̄_i. Annihilates anything constant per unit.
inline std::vector<double> within_demean_unit(std::span<const double> v, const PanelDataset& data) {
    detail::require_panel_length(v, data, "within_demean_unit");
    auto means = unit_means(v, data);
    std::vector<double> out(v.size());
    for (std::size_t r = 0; r < v.size(); ++r) out[r] = v[r] - means[r];
    return out;
}

/// Two-way within transformation: v_it - v̄_i - v̄_t + v̄.
inline std::vector<double> within_demean_twoway(std::span<const double> v, const PanelDataset& data) {
    detail::require_panel_length(v, data, "within_demean_twoway");
    auto umeans = unit_means(v, data);
    auto pmeans = period_means(v, data);
    double grand = 0.0;
    for (double d : v) grand += d;
    grand /= static_cast<double>(v.size());
    std::vector<double> out(v.size());
    for (std::size_t r = 0; r < v.size(); ++r) out[r] = v[r] - umeans[r] - pmeans[r] + grand;
    return out;
}

/// N one-hot unit indicator columns z1..zN, appended to the given design.
inline void append_unit_dummies(DesignMatrix& X, const PanelDataset& data) {
    const int N = data.n_units, T = data.n_periods;
    std::vector<double> col(static_cast<std::size_t>(N) * T);
    for (int i = 0; i < N; ++i) {
        std::fill(col.begin(), col.end(), 0.0);
        for (int t = 0; t < T; ++t) col[panel_row(i, t, T)] = 1.0;
        X.add_column("z" + std::to_string(i + 1), col);
    }
}

inline DesignMatrix unit_dummy_columns(const PanelDataset& data) {
    DesignMatrix X(data.rows());
    append_unit_dummies(X, data);
    return X;
}

/// T one-hot period indicator columns p1..pT (two-way designs).
inline void append_period_dummies(DesignMatrix& X, const PanelDataset& data) {
    const int N = data.n_units, T = data.n_periods;
    std::vector<double> col(static_cast<std::size_t>(N) * T);
    for (int t = 0; t < T; ++t) {
        std::fill(col.begin(), col.end(), 0.0);
        for (int i = 0; i < N; ++i) col[panel_row(i, t, T)] = 1.0;
        X.add_column("p" + std::to_string(t + 1), col);
    }
}

} // namespace paneldml
