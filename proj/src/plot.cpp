/*
 * SPDX-FileCopyrightText: Copyright (c) 2026 The noma-sic contributors. All rights reserved.
 * SPDX-License-Identifier: Apache-2.0
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "noma/plot.hpp"

#include "noma/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

namespace noma {

std::size_t CsvTable::column(const std::string& name, const std::string& what) const {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw ConfigError(what + ": CSV has no '" + name + "' column");
    return static_cast<std::size_t>(it - header.begin());
}

CsvTable parse_csv(const std::string& text) {
    CsvTable t;
    std::istringstream in(text);
    std::string line;
    auto split = [](const std::string& s) {
        std::vector<std::string> out;
        std::string cell;
        std::istringstream ls(s);
        while (std::getline(ls, cell, ',')) out.push_back(cell);
        if (!s.empty() && s.back() == ',') out.emplace_back();
        return out;
    };
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line[0] == '#') {
            t.comments.push_back(line);
            continue;
        }
        if (t.header.empty()) {
            t.header = split(line);
            continue;
        }
        auto row = split(line);
        if (row.size() != t.header.size())
            throw ConfigError("CSV row has " + std::to_string(row.size()) + " fields, header has " +
                              std::to_string(t.header.size()));
        t.rows.push_back(std::move(row));
    }
    return t;
}

CsvTable read_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_csv(ss.str());
}

namespace {

const char* const kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"};

double number(const std::string& s, const std::string& what) {
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        if (s == "nan") return std::nan("");
        throw ConfigError(what + ": '" + s + "' is not a number");
    }
}

struct Frame {
    double x0, x1, y0, y1;
    static constexpr double W = 640, H = 420, L = 80, R = 160, T = 30, B = 60;
    double px(double x) const { return L + (x - x0) / (x1 - x0) * (W - L - R); }
    double py(double y) const { return H - B - (y - y0) / (y1 - y0) * (H - T - B); }
};

void pad(double& lo, double& hi) {
    if (!(hi > lo)) {
        const double d = std::max(std::abs(lo) * 0.05, 1e-9);
        lo -= d;
        hi += d;
        return;
    }
    const double d = 0.05 * (hi - lo);
    lo -= d;
    hi += d;
}

std::string num_label(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4g", v);
    return buf;
}

std::string escape(const std::string& s) {
    std::string o;
    for (char c : s) {
        if (c == '<') o += "&lt;";
        else if (c == '>') o += "&gt;";
        else if (c == '&') o += "&amp;";
        else o += c;
    }
    return o;
}

void axes(std::ostringstream& svg, const Frame& f, const std::string& xl, const std::string& yl,
          const std::vector<std::pair<double, std::string>>& xticks) {
    svg << "<line x1='" << Frame::L << "' y1='" << Frame::H - Frame::B << "' x2='" << Frame::W - Frame::R
        << "' y2='" << Frame::H - Frame::B << "' stroke='black'/>\n";
    svg << "<line x1='" << Frame::L << "' y1='" << Frame::T << "' x2='" << Frame::L << "' y2='"
        << Frame::H - Frame::B << "' stroke='black'/>\n";
    for (int i = 0; i <= 4; ++i) {
        const double v = f.y0 + (f.y1 - f.y0) * i / 4.0;
        const double y = f.py(v);
        svg << "<line x1='" << Frame::L - 4 << "' y1='" << y << "' x2='" << Frame::L << "' y2='" << y
            << "' stroke='black'/><text x='" << Frame::L - 6 << "' y='" << y + 4
            << "' font-size='11' text-anchor='end'>" << num_label(v) << "</text>\n";
    }
    for (const auto& [v, label] : xticks) {
        const double x = f.px(v);
        svg << "<line x1='" << x << "' y1='" << Frame::H - Frame::B << "' x2='" << x << "' y2='"
            << Frame::H - Frame::B + 4 << "' stroke='black'/><text x='" << x << "' y='" << Frame::H - Frame::B + 18
            << "' font-size='11' text-anchor='middle'>" << escape(label) << "</text>\n";
    }
    svg << "<text x='" << (Frame::L + Frame::W - Frame::R) / 2 << "' y='" << Frame::H - 15
        << "' font-size='13' text-anchor='middle'>" << escape(xl) << "</text>\n";
    svg << "<text x='18' y='" << (Frame::T + Frame::H - Frame::B) / 2 << "' font-size='13' text-anchor='middle' "
        << "transform='rotate(-90 18 " << (Frame::T + Frame::H - Frame::B) / 2 << ")'>" << escape(yl) << "</text>\n";
}

void legend(std::ostringstream& svg, const std::vector<std::string>& names) {
    for (std::size_t i = 0; i < names.size(); ++i) {
        const double y = Frame::T + 10 + 18.0 * static_cast<double>(i);
        const double x = Frame::W - Frame::R + 15;
        svg << "<rect x='" << x << "' y='" << y - 8 << "' width='12' height='12' fill='" << kPalette[i % 8]
            << "'/><text x='" << x + 18 << "' y='" << y + 2 << "' font-size='12'>" << escape(names[i]) << "</text>\n";
    }
}

std::string open_svg() {
    std::ostringstream s;
    s << "<svg xmlns='http://www.w3.org/2000/svg' width='" << Frame::W << "' height='" << Frame::H
      << "' font-family='sans-serif'>\n<rect width='100%' height='100%' fill='white'/>\n";
    return s.str();
}

std::string line_plot(const std::map<std::string, std::vector<std::pair<double, double>>>& series,
                      const std::vector<std::string>& order, const std::string& xl, const std::string& yl) {
    double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
    std::vector<double> xs;
    for (const auto& [k, pts] : series)
        for (const auto& [x, y] : pts) {
            x0 = std::min(x0, x), x1 = std::max(x1, x);
            if (std::isfinite(y)) y0 = std::min(y0, y), y1 = std::max(y1, y);
            if (std::find(xs.begin(), xs.end(), x) == xs.end()) xs.push_back(x);
        }
    if (!std::isfinite(y0)) throw ConfigError("plot: no finite values to draw");
    pad(x0, x1);
    pad(y0, y1);
    const Frame f{x0, x1, y0, y1};
    std::sort(xs.begin(), xs.end());
    if (xs.size() > 12) {
        std::vector<double> thin;
        const std::size_t step = (xs.size() + 9) / 10;
        for (std::size_t i = 0; i < xs.size(); i += step) thin.push_back(xs[i]);
        xs = thin;
    }
    std::vector<std::pair<double, std::string>> ticks;
    for (double x : xs) ticks.emplace_back(x, num_label(x));

    std::ostringstream svg;
    svg << open_svg();
    axes(svg, f, xl, yl, ticks);
    for (std::size_t i = 0; i < order.size(); ++i) {
        auto pts = series.at(order[i]);
        std::sort(pts.begin(), pts.end());
        svg << "<polyline fill='none' stroke-width='2' stroke='" << kPalette[i % 8] << "' points='";
        for (const auto& [x, y] : pts)
            if (std::isfinite(y)) svg << f.px(x) << ',' << f.py(y) << ' ';
        svg << "'/>\n";
        for (const auto& [x, y] : pts)
            if (std::isfinite(y))
                svg << "<circle cx='" << f.px(x) << "' cy='" << f.py(y) << "' r='3' fill='" << kPalette[i % 8]
                    << "'/>\n";
    }
    legend(svg, order);
    svg << "</svg>\n";
    return svg.str();
}

double quantile(std::vector<double> v, double q) {
    std::sort(v.begin(), v.end());
    const double pos = q * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

std::string box_plot(const CsvTable& t) {
    const std::size_t ca = t.column("algorithm", "box plot"), cn = t.column("normalized", "box plot");
    std::vector<std::string> order;
    std::map<std::string, std::vector<double>> groups;
    for (const auto& r : t.rows) {
        const double v = number(r[cn], "box plot");
        if (!std::isfinite(v)) continue;
        if (!groups.count(r[ca])) order.push_back(r[ca]);
        groups[r[ca]].push_back(v);
    }
    if (groups.empty()) throw ConfigError("box plot: no finite normalized utilities");
    double y0 = std::numeric_limits<double>::infinity(), y1 = -y0;
    for (const auto& [k, v] : groups)
        for (double x : v) y0 = std::min(y0, x), y1 = std::max(y1, x);
    pad(y0, y1);
    const Frame f{0.0, static_cast<double>(order.size()) + 1.0, y0, y1};
    std::vector<std::pair<double, std::string>> ticks;
    for (std::size_t i = 0; i < order.size(); ++i) ticks.emplace_back(static_cast<double>(i + 1), order[i]);

    std::ostringstream svg;
    svg << open_svg();
    axes(svg, f, "algorithm", "normalized utility", ticks);
    const double half = 0.3 * (f.px(1.0) - f.px(0.0));
    for (std::size_t i = 0; i < order.size(); ++i) {
        const auto& v = groups.at(order[i]);
        const double q1 = quantile(v, 0.25), med = quantile(v, 0.5), q3 = quantile(v, 0.75);
        // Whiskers at the most extreme points within 1.5 IQR.
        const double iqr = q3 - q1;
        double lo = med, hi = med;
        for (double x : v) {
            if (x >= q1 - 1.5 * iqr) lo = std::min(lo, x);
            if (x <= q3 + 1.5 * iqr) hi = std::max(hi, x);
        }
        const double cx = f.px(static_cast<double>(i + 1));
        const char* col = kPalette[i % 8];
        svg << "<line x1='" << cx << "' y1='" << f.py(lo) << "' x2='" << cx << "' y2='" << f.py(hi)
            << "' stroke='" << col << "'/>\n";
        svg << "<rect x='" << cx - half << "' y='" << f.py(q3) << "' width='" << 2 * half << "' height='"
            << std::max(f.py(q1) - f.py(q3), 0.5) << "' fill='white' stroke='" << col << "' stroke-width='2'/>\n";
        svg << "<line x1='" << cx - half << "' y1='" << f.py(med) << "' x2='" << cx + half << "' y2='" << f.py(med)
            << "' stroke='" << col << "' stroke-width='2'/>\n";
        for (double x : v)
            if (x < lo || x > hi)
                svg << "<circle cx='" << cx << "' cy='" << f.py(x) << "' r='2' fill='none' stroke='" << col
                    << "'/>\n";
    }
    svg << "</svg>\n";
    return svg.str();
}

}  // namespace

std::string render_plot(const CsvTable& t, const std::string& kind, const std::string& y) {
    if (t.rows.empty()) throw ConfigError("plot: empty input (no data rows)");
    if (kind == "lines") {
        const std::string ycol = y.empty() ? "mean_utility" : y;
        const std::size_t ca = t.column("algorithm", "line plot"), cv = t.column("value", "line plot"),
                          cy = t.column(ycol, "line plot");
        std::string xl = "value";
        if (const auto it = std::find(t.header.begin(), t.header.end(), "variable"); it != t.header.end())
            xl = t.rows.front()[static_cast<std::size_t>(it - t.header.begin())];
        std::map<std::string, std::vector<std::pair<double, double>>> series;
        std::vector<std::string> order;
        for (const auto& r : t.rows) {
            if (!series.count(r[ca])) order.push_back(r[ca]);
            series[r[ca]].emplace_back(number(r[cv], "line plot"), number(r[cy], "line plot"));
        }
        return line_plot(series, order, xl, ycol);
    }
    if (kind == "box") return box_plot(t);
    if (kind == "convergence") {
        const std::size_t ce = t.column("epoch", "convergence plot"),
                          cu = t.column(y.empty() ? "mean_val_utility" : y, "convergence plot");
        std::map<std::string, std::vector<std::pair<double, double>>> series;
        for (const auto& r : t.rows)
            series["validation"].emplace_back(number(r[ce], "convergence plot"), number(r[cu], "convergence plot"));
        return line_plot(series, {"validation"}, "epoch", y.empty() ? "mean validation utility" : y);
    }
    throw ConfigError("unknown plot kind '" + kind + "' (expected lines|box|convergence)");
}

void plot_csv(const std::filesystem::path& csv, const std::string& kind, const std::filesystem::path& out,
              const std::string& y) {
    const std::string svg = render_plot(read_csv(csv), kind, y);
    std::ofstream o(out);
    if (!o) throw ConfigError("cannot write " + out.string());
    o << svg;
}

}  // namespace noma
