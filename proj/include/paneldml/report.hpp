#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "paneldml/errors.hpp"
#include "paneldml/experiment.hpp"

namespace paneldml {

// ---------------------------------------------------------------------------
// Result emission: results.csv / summary.csv / JSON, plus self-contained SVG
// charts (boxplot grids per setting, MAE-vs-sweep lines). All numeric output
// is formatted deterministically so fixed-seed runs are byte-stable.
// ---------------------------------------------------------------------------

enum class ReportKind { BoxplotGrid, MaeLines, Csv, Json };

inline ReportKind report_kind_from_name(const std::string& s) {
    if (s == "boxplot_grid") return ReportKind::BoxplotGrid;
    if (s == "mae_lines") return ReportKind::MaeLines;
    if (s == "csv") return ReportKind::Csv;
    if (s == "json") return ReportKind::Json;
    throw ConfigError("unknown report kind '" + s + "'");
}

namespace detail {

inline std::string csv_escape(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += "\"\"";
        else out += c;
    }
    out += "\"";
    return out;
}

inline std::string fmt(double v, const char* spec = "%.17g") {
    char buf[64];
    std::snprintf(buf, sizeof(buf), spec, v);
    return buf;
}

inline std::string sanitize_filename(const std::string& s) {
    std::string out;
    for (char c : s) out += (std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_') ? c : '_';
    return out;
}

} // namespace detail

inline void write_results_csv(const std::vector<ResultRow>& rows, std::ostream& os) {
    os << "setting,method,rep,beta_hat,error,wall_time_s\n";
    for (const auto& r : rows) {
        os << detail::csv_escape(r.setting) << ',' << detail::csv_escape(r.method) << ',' << r.rep << ',';
        if (r.error.empty()) os << detail::fmt(r.beta_hat);
        os << ',' << detail::csv_escape(r.error) << ',' << detail::fmt(r.wall_time_s, "%.6f") << "\n";
    }
}

inline void write_summary_csv(const std::vector<MethodSummary>& summaries, std::ostream& os) {
    os << "setting,method,sweep,n,n_failed,mean,bias,mae,median,q1,q3,whisker_lo,whisker_hi\n";
    for (const auto& s : summaries) {
        os << detail::csv_escape(s.setting) << ',' << detail::csv_escape(s.method) << ',';
        if (std::isfinite(s.sweep)) os << detail::fmt(s.sweep);
        os << ',' << s.n << ',' << s.n_failed;
        for (double v : {s.mean, s.bias, s.mae, s.median, s.q1, s.q3, s.whisker_lo, s.whisker_hi})
            os << ',' << (std::isfinite(v) ? detail::fmt(v) : "");
        os << "\n";
    }
}

inline std::vector<ResultRow> read_results_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line)) throw ConfigError("empty results CSV");
    if (paneldml::detail::split_csv_line(line) !=
        std::vector<std::string>{"setting", "method", "rep", "beta_hat", "error", "wall_time_s"})
        throw ConfigError("unexpected results.csv header");
    std::vector<ResultRow> rows;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        const auto f = paneldml::detail::split_csv_line(line);
        if (f.size() != 6) throw ConfigError("results.csv row has wrong field count");
        ResultRow r;
        r.setting = f[0];
        r.method = f[1];
        r.rep = std::stoi(f[2]);
        r.beta_hat = f[3].empty() ? std::numeric_limits<double>::quiet_NaN() : std::strtod(f[3].c_str(), nullptr);
        r.error = f[4];
        r.wall_time_s = std::strtod(f[5].c_str(), nullptr);
        rows.push_back(std::move(r));
    }
    return rows;
}

inline std::vector<ResultRow> read_results_csv(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open: " + path);
    return read_results_csv(is);
}

// ------------------------------- SVG charts -------------------------------

namespace detail {

struct SvgScale {
    double lo = 0.0, hi = 1.0;
    double pix_top = 0.0, pix_bottom = 1.0;
    double y(double v) const { return pix_bottom - (v - lo) / (hi - lo) * (pix_bottom - pix_top); }
};

inline std::string svg_header(int width, int height) {
    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
       << "\" viewBox=\"0 0 " << width << " " << height << "\">\n"
       << "<rect width=\"" << width << "\" height=\"" << height << "\" fill=\"white\"/>\n";
    return os.str();
}

inline std::string axis_ticks(const SvgScale& sc, double x_left, double x_right) {
    // ~6 round tick values covering [lo, hi]
    std::ostringstream os;
    const double span = sc.hi - sc.lo;
    double step = std::pow(10.0, std::floor(std::log10(span / 5.0)));
    if (span / step > 10.0) step *= 2.0;
    if (span / step > 10.0) step *= 2.5;
    const double first = std::ceil(sc.lo / step) * step;
    for (double v = first; v <= sc.hi + 1e-12 * span; v += step) {
        const double y = sc.y(v);
        os << "<line x1=\"" << fmt(x_left - 4, "%.2f") << "\" y1=\"" << fmt(y, "%.2f") << "\" x2=\""
           << fmt(x_right, "%.2f") << "\" y2=\"" << fmt(y, "%.2f")
           << "\" stroke=\"#dddddd\" stroke-width=\"1\"/>\n";
        os << "<text x=\"" << fmt(x_left - 8, "%.2f") << "\" y=\"" << fmt(y + 4, "%.2f")
           << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" << fmt(v, "%.4g")
           << "</text>\n";
    }
    return os.str();
}

} // namespace detail

/// One boxplot per method for a single setting; dashed reference line at the
/// true effect. Returns the SVG document.
inline std::string boxplot_svg(const std::string& setting, const std::vector<MethodSummary>& summaries,
                               const std::vector<ResultRow>& rows, double beta_true = 1.0) {
    std::vector<const MethodSummary*> cols;
    for (const auto& s : summaries)
        if (s.setting == setting) cols.push_back(&s);

    const int n = static_cast<int>(cols.size());
    const int margin_left = 70, margin_right = 20, margin_top = 40, margin_bottom = 110;
    const int slot = 80;
    const int width = margin_left + margin_right + std::max(1, n) * slot;
    const int height = 420;

    detail::SvgScale sc;
    sc.pix_top = margin_top;
    sc.pix_bottom = height - margin_bottom;
    double lo = beta_true, hi = beta_true;
    for (const auto* s : cols) {
        if (s->n == 0) continue;
        lo = std::min(lo, s->whisker_lo);
        hi = std::max(hi, s->whisker_hi);
    }
    for (const auto& r : rows)
        if (r.setting == setting && r.error.empty()) {
            lo = std::min(lo, r.beta_hat);
            hi = std::max(hi, r.beta_hat);
        }
    if (!(hi > lo)) {
        lo -= 0.5;
        hi += 0.5;
    }
    const double pad = 0.05 * (hi - lo);
    sc.lo = lo - pad;
    sc.hi = hi + pad;

    std::ostringstream os;
    os << detail::svg_header(width, height);
    os << "<text x=\"" << width / 2 << "\" y=\"22\" text-anchor=\"middle\" font-family=\"sans-serif\" "
          "font-size=\"14\">"
       << setting << "</text>\n";
    os << detail::axis_ticks(sc, margin_left, width - margin_right);
    // axes
    os << "<line x1=\"" << margin_left << "\" y1=\"" << margin_top << "\" x2=\"" << margin_left << "\" y2=\""
       << height - margin_bottom << "\" stroke=\"black\" stroke-width=\"1\"/>\n";
    os << "<line x1=\"" << margin_left << "\" y1=\"" << height - margin_bottom << "\" x2=\"" << width - margin_right
       << "\" y2=\"" << height - margin_bottom << "\" stroke=\"black\" stroke-width=\"1\"/>\n";
    // dashed reference line at the true effect
    os << "<line x1=\"" << margin_left << "\" y1=\"" << detail::fmt(sc.y(beta_true), "%.2f") << "\" x2=\""
       << width - margin_right << "\" y2=\"" << detail::fmt(sc.y(beta_true), "%.2f")
       << "\" stroke=\"#555555\" stroke-width=\"1\" stroke-dasharray=\"6,4\"/>\n";

    for (int c = 0; c < n; ++c) {
        const auto& s = *cols[c];
        const double cx = margin_left + slot * (c + 0.5);
        const double half = slot * 0.28;
        os << "<text x=\"" << detail::fmt(cx, "%.2f") << "\" y=\"" << height - margin_bottom + 16
           << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\" transform=\"rotate(-40 "
           << detail::fmt(cx, "%.2f") << " " << height - margin_bottom + 16 << ")\">" << s.method << "</text>\n";
        if (s.n == 0) continue;
        const double yq1 = sc.y(s.q1), yq3 = sc.y(s.q3), ymed = sc.y(s.median);
        const double ylo = sc.y(s.whisker_lo), yhi = sc.y(s.whisker_hi);
        os << "<line x1=\"" << detail::fmt(cx, "%.2f") << "\" y1=\"" << detail::fmt(ylo, "%.2f") << "\" x2=\""
           << detail::fmt(cx, "%.2f") << "\" y2=\"" << detail::fmt(yq1, "%.2f")
           << "\" stroke=\"black\" stroke-width=\"1\"/>\n";
        os << "<line x1=\"" << detail::fmt(cx, "%.2f") << "\" y1=\"" << detail::fmt(yq3, "%.2f") << "\" x2=\""
           << detail::fmt(cx, "%.2f") << "\" y2=\"" << detail::fmt(yhi, "%.2f")
           << "\" stroke=\"black\" stroke-width=\"1\"/>\n";
        os << "<rect x=\"" << detail::fmt(cx - half, "%.2f") << "\" y=\"" << detail::fmt(yq3, "%.2f") << "\" width=\""
           << detail::fmt(2 * half, "%.2f") << "\" height=\"" << detail::fmt(yq1 - yq3, "%.2f")
           << "\" fill=\"#9ecae1\" stroke=\"black\" stroke-width=\"1\"/>\n";
        os << "<line x1=\"" << detail::fmt(cx - half, "%.2f") << "\" y1=\"" << detail::fmt(ymed, "%.2f")
           << "\" x2=\"" << detail::fmt(cx + half, "%.2f") << "\" y2=\"" << detail::fmt(ymed, "%.2f")
           << "\" stroke=\"black\" stroke-width=\"2\"/>\n";
        // outliers beyond the whiskers
        for (const auto& r : rows) {
            if (r.setting != setting || r.method != s.method || !r.error.empty()) continue;
            if (r.beta_hat < s.whisker_lo || r.beta_hat > s.whisker_hi)
                os << "<circle cx=\"" << detail::fmt(cx, "%.2f") << "\" cy=\"" << detail::fmt(sc.y(r.beta_hat), "%.2f")
                   << "\" r=\"2\" fill=\"none\" stroke=\"black\" stroke-width=\"1\"/>\n";
        }
    }
    os << "</svg>\n";
    return os.str();
}

/// MAE against the swept parameter, one polyline per method. Settings without
/// a sweep value are skipped.
inline std::string mae_lines_svg(const std::vector<MethodSummary>& summaries, const std::string& x_label = "sweep") {
    std::vector<const MethodSummary*> pts;
    for (const auto& s : summaries)
        if (std::isfinite(s.sweep) && s.n > 0) pts.push_back(&s);

    std::vector<std::string> methods;
    std::vector<double> xs;
    for (const auto* p : pts) {
        if (std::find(methods.begin(), methods.end(), p->method) == methods.end()) methods.push_back(p->method);
        if (std::find(xs.begin(), xs.end(), p->sweep) == xs.end()) xs.push_back(p->sweep);
    }
    std::sort(xs.begin(), xs.end());

    const int margin_left = 70, margin_right = 190, margin_top = 30, margin_bottom = 55;
    const int width = 760, height = 420;

    detail::SvgScale sc;
    sc.pix_top = margin_top;
    sc.pix_bottom = height - margin_bottom;
    double lo = 0.0, hi = 0.0;
    for (const auto* p : pts) hi = std::max(hi, p->mae);
    if (!(hi > lo)) hi = 1.0;
    sc.lo = lo;
    sc.hi = hi * 1.05;

    const double x_lo = xs.empty() ? 0.0 : xs.front();
    const double x_hi = xs.empty() || xs.back() == xs.front() ? x_lo + 1.0 : xs.back();
    auto px = [&](double v) {
        return margin_left + (v - x_lo) / (x_hi - x_lo) * (width - margin_left - margin_right);
    };

    static const char* palette[] = {"#1b9e77", "#d95f02", "#7570b3", "#e7298a", "#66a61e",
                                    "#e6ab02", "#a6761d", "#666666", "#1f78b4", "#b2182b", "#542788"};

    std::ostringstream os;
    os << detail::svg_header(width, height);
    os << detail::axis_ticks(sc, margin_left, width - margin_right);
    os << "<line x1=\"" << margin_left << "\" y1=\"" << margin_top << "\" x2=\"" << margin_left << "\" y2=\""
       << height - margin_bottom << "\" stroke=\"black\" stroke-width=\"1\"/>\n";
    os << "<line x1=\"" << margin_left << "\" y1=\"" << height - margin_bottom << "\" x2=\"" << width - margin_right
       << "\" y2=\"" << height - margin_bottom << "\" stroke=\"black\" stroke-width=\"1\"/>\n";
    os << "<text x=\"" << (margin_left + width - margin_right) / 2 << "\" y=\"" << height - 14
       << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">" << x_label << "</text>\n";
    os << "<text x=\"18\" y=\"" << (margin_top + height - margin_bottom) / 2
       << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\" transform=\"rotate(-90 18 "
       << (margin_top + height - margin_bottom) / 2 << ")\">MAE</text>\n";
    for (double x : xs) {
        os << "<text x=\"" << detail::fmt(px(x), "%.2f") << "\" y=\"" << height - margin_bottom + 16
           << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" << detail::fmt(x, "%.4g")
           << "</text>\n";
    }

    for (std::size_t m = 0; m < methods.size(); ++m) {
        const char* color = palette[m % (sizeof(palette) / sizeof(palette[0]))];
        std::ostringstream poly;
        for (double x : xs) {
            for (const auto* p : pts)
                if (p->method == methods[m] && p->sweep == x)
                    poly << detail::fmt(px(x), "%.2f") << ',' << detail::fmt(sc.y(p->mae), "%.2f") << ' ';
        }
        os << "<polyline points=\"" << poly.str() << "\" fill=\"none\" stroke=\"" << color
           << "\" stroke-width=\"2\"/>\n";
        const int ly = margin_top + 16 * static_cast<int>(m);
        os << "<line x1=\"" << width - margin_right + 10 << "\" y1=\"" << ly << "\" x2=\""
           << width - margin_right + 30 << "\" y2=\"" << ly << "\" stroke=\"" << color
           << "\" stroke-width=\"2\"/>\n";
        os << "<text x=\"" << width - margin_right + 36 << "\" y=\"" << ly + 4
           << "\" font-family=\"sans-serif\" font-size=\"11\">" << methods[m] << "</text>\n";
    }
    os << "</svg>\n";
    return os.str();
}

/// Writes the requested artifact kind into out_dir. File names are stable:
/// results.csv, summary.csv, results.json, boxplot_<setting>.svg, mae_lines.svg.
inline std::vector<std::string> emit_report(const ExperimentResult& result, ReportKind kind,
                                            const std::string& out_dir) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    std::vector<std::string> written;
    auto write_file = [&](const std::string& name, const std::string& content) {
        const std::string path = (fs::path(out_dir) / name).string();
        std::ofstream os(path, std::ios::binary);
        if (!os) throw std::runtime_error("cannot open for writing: " + path);
        os << content;
        written.push_back(path);
    };

    switch (kind) {
        case ReportKind::Csv: {
            std::ostringstream r, s;
            write_results_csv(result.rows, r);
            write_summary_csv(result.summaries, s);
            write_file("results.csv", r.str());
            write_file("summary.csv", s.str());
            break;
        }
        case ReportKind::Json: {
            nlohmann::json j;
            j["rows"] = nlohmann::json::array();
            for (const auto& r : result.rows) {
                nlohmann::json row;
                row["setting"] = r.setting;
                row["method"] = r.method;
                row["rep"] = r.rep;
                if (r.error.empty()) row["beta_hat"] = r.beta_hat;
                else row["error"] = r.error;
                row["wall_time_s"] = r.wall_time_s;
                j["rows"].push_back(std::move(row));
            }
            j["summaries"] = nlohmann::json::array();
            for (const auto& s : result.summaries) {
                nlohmann::json sj;
                sj["setting"] = s.setting;
                sj["method"] = s.method;
                if (std::isfinite(s.sweep)) sj["sweep"] = s.sweep;
                sj["n"] = s.n;
                sj["n_failed"] = s.n_failed;
                if (s.n > 0) {
                    sj["mean"] = s.mean;
                    sj["bias"] = s.bias;
                    sj["mae"] = s.mae;
                    sj["median"] = s.median;
                    sj["q1"] = s.q1;
                    sj["q3"] = s.q3;
                    sj["whisker_lo"] = s.whisker_lo;
                    sj["whisker_hi"] = s.whisker_hi;
                }
                j["summaries"].push_back(std::move(sj));
            }
            write_file("results.json", j.dump(2) + "\n");
            break;
        }
        case ReportKind::BoxplotGrid: {
            std::vector<std::string> settings;
            for (const auto& r : result.rows)
                if (std::find(settings.begin(), settings.end(), r.setting) == settings.end())
                    settings.push_back(r.setting);
            if (settings.empty())
                for (const auto& s : result.summaries)
                    if (std::find(settings.begin(), settings.end(), s.setting) == settings.end())
                        settings.push_back(s.setting);
            if (settings.empty()) {
                write_file("boxplot_empty.svg", boxplot_svg("(empty)", result.summaries, result.rows));
                break;
            }
            for (const auto& s : settings)
                write_file("boxplot_" + detail::sanitize_filename(s) + ".svg",
                           boxplot_svg(s, result.summaries, result.rows));
            break;
        }
        case ReportKind::MaeLines:
            write_file("mae_lines.svg", mae_lines_svg(result.summaries));
            break;
    }
    return written;
}

} // namespace paneldml
