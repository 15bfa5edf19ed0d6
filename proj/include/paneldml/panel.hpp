#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "paneldml/errors.hpp"

namespace paneldml {

/// Shared row-layout rule: unit-major, row = i*T + t with 0-based i, t.
/// Every module uses this mapping; none re-derives it.
inline int panel_row(int unit, int period, int n_periods) {
    return unit * n_periods + period;
}

/// A balanced panel of outcome, treatment and J confounder columns.
/// Rows follow panel_row(); confounders are stored column-major.
struct PanelDataset {
    int n_units = 0;
    int n_periods = 0;
    int n_confounders = 0;
    std::vector<double> outcome;     // length N*T
    std::vector<double> treatment;   // length N*T
    std::vector<double> confounders; // length N*T*J, column j at [j*N*T, (j+1)*N*T)

    int rows() const { return n_units * n_periods; }

    double x(int j, int row) const { return confounders[static_cast<std::size_t>(j) * rows() + row]; }
    std::span<const double> x_col(int j) const {
        return {confounders.data() + static_cast<std::size_t>(j) * rows(), static_cast<std::size_t>(rows())};
    }
    std::span<double> x_col(int j) {
        return {confounders.data() + static_cast<std::size_t>(j) * rows(), static_cast<std::size_t>(rows())};
    }

    /// Enforces the balanced-panel invariants (sizes, finiteness).
    void validate() const {
        if (n_units < 1 || n_periods < 1 || n_confounders < 0)
            throw ConfigError("panel dimensions must satisfy N >= 1, T >= 1, J >= 0");
        const auto nt = static_cast<std::size_t>(rows());
        if (outcome.size() != nt || treatment.size() != nt)
            throw DimensionError("outcome/treatment length must equal N*T");
        if (confounders.size() != nt * static_cast<std::size_t>(n_confounders))
            throw DimensionError("confounder storage must be N*T*J");
        auto check_finite = [](const std::vector<double>& v, const char* what) {
            for (double d : v)
                if (!std::isfinite(d)) throw ConfigError(std::string("non-finite value in ") + what);
        };
        check_finite(outcome, "outcome");
        check_finite(treatment, "treatment");
        check_finite(confounders, "confounders");
    }
};

namespace detail {

inline std::string format_g17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

} // namespace detail

// ---------------------------------------------------------------------------
// CSV serialization: header `unit,period,y,w,x1..xJ`, 1-based unit/period,
// 17-significant-digit rendering so round trips are lossless.
// ---------------------------------------------------------------------------

inline void write_panel_csv(const PanelDataset& data, std::ostream& os) {
    os << "unit,period,y,w";
    for (int j = 0; j < data.n_confounders; ++j) os << ",x" << (j + 1);
    os << "\n";
    for (int i = 0; i < data.n_units; ++i) {
        for (int t = 0; t < data.n_periods; ++t) {
            const int r = panel_row(i, t, data.n_periods);
            os << (i + 1) << ',' << (t + 1) << ',' << detail::format_g17(data.outcome[r]) << ','
               << detail::format_g17(data.treatment[r]);
            for (int j = 0; j < data.n_confounders; ++j) os << ',' << detail::format_g17(data.x(j, r));
            os << "\n";
        }
    }
}

inline void write_panel_csv(const PanelDataset& data, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open for writing: " + path);
    write_panel_csv(data, os);
}

inline PanelDataset read_panel_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line)) throw ConfigError("empty panel CSV");
    const auto header = detail::split_csv_line(line);
    if (header.size() < 4 || header[0] != "unit" || header[1] != "period" || header[2] != "y" || header[3] != "w")
        throw ConfigError("panel CSV header must start with unit,period,y,w");
    const int J = static_cast<int>(header.size()) - 4;
    for (int j = 0; j < J; ++j) {
        if (header[4 + j] != "x" + std::to_string(j + 1))
            throw ConfigError("confounder columns must be named x1..xJ in order");
    }

    struct Row {
        int unit, period;
        std::vector<double> vals;
    };
    std::vector<Row> raw;
    int max_unit = 0, max_period = 0;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        const auto f = detail::split_csv_line(line);
        if (static_cast<int>(f.size()) != 4 + J) throw ConfigError("panel CSV row has wrong field count");
        Row r;
        r.unit = std::stoi(f[0]);
        r.period = std::stoi(f[1]);
        if (r.unit < 1 || r.period < 1) throw ConfigError("unit/period indices must be 1-based positive");
        r.vals.reserve(2 + J);
        for (int c = 2; c < 4 + J; ++c) r.vals.push_back(std::strtod(f[c].c_str(), nullptr));
        max_unit = std::max(max_unit, r.unit);
        max_period = std::max(max_period, r.period);
        raw.push_back(std::move(r));
    }
    if (raw.empty()) throw ConfigError("panel CSV has no data rows");
    const std::size_t nt = static_cast<std::size_t>(max_unit) * max_period;
    if (raw.size() != nt) throw ConfigError("panel is not balanced: row count != N*T");

    PanelDataset data;
    data.n_units = max_unit;
    data.n_periods = max_period;
    data.n_confounders = J;
    data.outcome.assign(nt, 0.0);
    data.treatment.assign(nt, 0.0);
    data.confounders.assign(nt * J, 0.0);
    std::vector<char> seen(nt, 0);
    for (const auto& r : raw) {
        const int row = panel_row(r.unit - 1, r.period - 1, max_period);
        if (seen[row]) throw ConfigError("duplicate (unit, period) pair in panel CSV");
        seen[row] = 1;
        data.outcome[row] = r.vals[0];
        data.treatment[row] = r.vals[1];
        for (int j = 0; j < J; ++j) data.x_col(j)[row] = r.vals[2 + j];
    }
    data.validate();
    return data;
}

inline PanelDataset read_panel_csv(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open: " + path);
    return read_panel_csv(is);
}

} // namespace paneldml
