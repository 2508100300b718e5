#pragma once

// CSV, SVG heatmap and JSON manifest emission. Numbers are printed with a
// fixed format so reruns produce byte-identical files.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "dqpe/errors.hpp"

namespace dqpe::harness {

/// Shortest round-trip decimal form ("10", not "1e+01"); "nan" for NaN.
inline std::string fmt(double x) {
    if (std::isnan(x)) return "nan";
    std::string best;
    char buf[64];
    for (int prec = 1; prec <= 17; ++prec) {
        std::snprintf(buf, sizeof buf, "%.*g", prec, x);
        if (std::strtod(buf, nullptr) == x && (best.empty() || std::strlen(buf) < best.size())) best = buf;
    }
    return best;
}

inline std::string fmt(long long x) { return std::to_string(x); }
inline std::string fmt(int x) { return std::to_string(x); }
inline std::string fmt(const std::string& s) { return s; }

/// A CSV table held in memory and written in one piece; filled by one thread after the parallel phase.
class CsvTable {
public:
    explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

    template <class... T>
    void row(const T&... v) {
        std::vector<std::string> r{fmt(v)...};
        if (r.size() != header_.size()) throw StructuralError("CsvTable: row width does not match header");
        rows_.push_back(std::move(r));
    }

    void sort_rows() {
        std::sort(rows_.begin(), rows_.end(), [](const auto& a, const auto& b) {
            for (std::size_t i = 0; i < a.size(); ++i) {
                if (a[i] == b[i]) continue;
                char* ea = nullptr;
                char* eb = nullptr;
                const double x = std::strtod(a[i].c_str(), &ea);
                const double y = std::strtod(b[i].c_str(), &eb);
                if (*ea == '\0' && *eb == '\0' && x != y) return x < y;
                return a[i] < b[i];
            }
            return false;
        });
    }

    std::string str() const {
        std::ostringstream os;
        auto line = [&](const std::vector<std::string>& r) {
            for (std::size_t i = 0; i < r.size(); ++i) os << (i ? "," : "") << r[i];
            os << '\n';
        };
        line(header_);
        for (const auto& r : rows_) line(r);
        return os.str();
    }

    const std::vector<std::vector<std::string>>& rows() const { return rows_; }
    const std::vector<std::string>& header() const { return header_; }

private:
    std::vector<std::string> header_;
    std::vector<std::vector<std::string>> rows_;
};

inline void write_file(const std::filesystem::path& path, const std::string& text) {
    std::error_code ec;
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write " + path.string());
    out << text;
    if (!out) throw ConfigError("write failed for " + path.string());
}

// ---------------------------------------------------------------------------
// Heatmap

struct Rgb {
    int r, g, b;
};

/// Piecewise-linear viridis-like map on [0, 1]; NaN renders grey.
inline Rgb colormap(double t) {
    static constexpr std::array<std::array<double, 3>, 6> stops{{{68, 1, 84},
                                                                   {65, 68, 135},
                                                                   {42, 120, 142},
                                                                   {34, 168, 132},
                                                                   {122, 209, 81},
                                                                   {253, 231, 37}}};
    if (std::isnan(t)) return {160, 160, 160};
    t = std::clamp(t, 0.0, 1.0) * (stops.size() - 1);
    const auto i = std::min<std::size_t>(static_cast<std::size_t>(t), stops.size() - 2);
    const double w = t - static_cast<double>(i);
    auto mix = [&](int c) { return static_cast<int>(std::lround((1 - w) * stops[i][c] + w * stops[i + 1][c])); };
    return {mix(0), mix(1), mix(2)};
}

/// Rect-grid SVG; values[r][c] with row labels on the y axis (first row at the bottom).
inline std::string heatmap_svg(const std::string& title, const std::string& x_label, const std::string& y_label,
                               const std::vector<std::string>& x_ticks, const std::vector<std::string>& y_ticks,
                               const std::vector<std::vector<double>>& values, double lo = 0.0, double hi = 1.0) {
    const int cell = 48, left = 90, top = 40, bottom = 60;
    const int nx = static_cast<int>(x_ticks.size()), ny = static_cast<int>(y_ticks.size());
    const int w = left + nx * cell + 20, h = top + ny * cell + bottom;
    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
    os << "<text x=\"" << left << "\" y=\"20\" font-size=\"14\">" << title << "</text>\n";
    for (int r = 0; r < ny; ++r) {
        for (int c = 0; c < nx; ++c) {
            const double v = values[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
            const Rgb col = colormap(hi > lo ? (v - lo) / (hi - lo) : 0.0);
            const int x = left + c * cell, y = top + (ny - 1 - r) * cell;
            os << "<rect x=\"" << x << "\" y=\"" << y << "\" width=\"" << cell << "\" height=\"" << cell << "\" fill=\"rgb("
               << col.r << "," << col.g << "," << col.b << ")\"/>\n";
            char buf[32];
            std::snprintf(buf, sizeof buf, "%.2f", v);
            os << "<text x=\"" << x + cell / 2 << "\" y=\"" << y + cell / 2 + 4 << "\" text-anchor=\"middle\" fill=\""
               << (std::isnan(v) || (v - lo) / (hi - lo) < 0.6 ? "white" : "black") << "\">" << (std::isnan(v) ? "-" : buf) << "</text>\n";
        }
    }
    for (int c = 0; c < nx; ++c) {
        os << "<text x=\"" << left + c * cell + cell / 2 << "\" y=\"" << top + ny * cell + 16 << "\" text-anchor=\"middle\">"
           << x_ticks[static_cast<std::size_t>(c)] << "</text>\n";
    }
    for (int r = 0; r < ny; ++r) {
        os << "<text x=\"" << left - 6 << "\" y=\"" << top + (ny - 1 - r) * cell + cell / 2 + 4 << "\" text-anchor=\"end\">"
           << y_ticks[static_cast<std::size_t>(r)] << "</text>\n";
    }
    os << "<text x=\"" << left + nx * cell / 2 << "\" y=\"" << h - 14 << "\" text-anchor=\"middle\">" << x_label << "</text>\n";
    os << "<text x=\"16\" y=\"" << top + ny * cell / 2 << "\" transform=\"rotate(-90 16 " << top + ny * cell / 2
       << ")\" text-anchor=\"middle\">" << y_label << "</text>\n";
    os << "</svg>\n";
    return os.str();
}

/// Heatmap of `value_col` over the distinct values of `x_col` and `y_col`, read back from a CSV table.
inline std::string heatmap_from_csv(const CsvTable& t, const std::string& x_col, const std::string& y_col,
                                    const std::string& value_col, const std::string& title) {
    auto col = [&](const std::string& name) {
        auto it = std::find(t.header().begin(), t.header().end(), name);
        if (it == t.header().end()) throw StructuralError("heatmap: no column " + name);
        return static_cast<std::size_t>(it - t.header().begin());
    };
    const auto cx = col(x_col), cy = col(y_col), cv = col(value_col);
    auto distinct = [&](std::size_t c) {
        std::vector<double> v;
        for (const auto& r : t.rows()) v.push_back(std::strtod(r[c].c_str(), nullptr));
        std::sort(v.begin(), v.end());
        v.erase(std::unique(v.begin(), v.end()), v.end());
        return v;
    };
    const auto xs = distinct(cx), ys = distinct(cy);
    std::vector<std::vector<double>> grid(ys.size(), std::vector<double>(xs.size(), std::nan("")));
    for (const auto& r : t.rows()) {
        const auto xi = std::lower_bound(xs.begin(), xs.end(), std::strtod(r[cx].c_str(), nullptr)) - xs.begin();
        const auto yi = std::lower_bound(ys.begin(), ys.end(), std::strtod(r[cy].c_str(), nullptr)) - ys.begin();
        grid[static_cast<std::size_t>(yi)][static_cast<std::size_t>(xi)] = std::strtod(r[cv].c_str(), nullptr);
    }
    std::vector<std::string> xt, yt;
    for (double x : xs) xt.push_back(fmt(x));
    for (double y : ys) yt.push_back(fmt(y));
    return heatmap_svg(title, x_col, y_col, xt, yt, grid);
}

// ---------------------------------------------------------------------------
// Manifest

using Json = nlohmann::ordered_json;

inline const char* library_version() { return "0.1.0"; }

}  // namespace dqpe::harness
