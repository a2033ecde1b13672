#pragma once

// Minimal SVG charts: multi-series line plots with an optional secondary axis,
// and min/mean/max error-bar plots over categories. Output depends only on the
// input data, so identical data gives identical bytes.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <string>
#include <utility>
#include <vector>

namespace dendrevo::svg {

struct Series {
    std::string name;
    std::vector<std::pair<double, double>> points;
};

struct LineChart {
    std::string title;
    std::string x_label;
    std::string y_label;
    std::string y2_label; ///< secondary axis, used when `secondary` is nonempty
    std::vector<Series> primary;
    std::vector<Series> secondary;
    bool log_y = false;
};

struct Bar {
    double mean = 0.0;
    double min = 0.0;
    double max = 0.0;
};

struct BarSeries {
    std::string name;
    std::vector<Bar> bars; ///< one per category
};

struct ErrorBarChart {
    std::string title;
    std::string x_label;
    std::string y_label;
    std::vector<std::string> categories;
    std::vector<BarSeries> series;
    bool log_y = false;
};

namespace detail {

inline constexpr const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b",
                                          "#e377c2", "#7f7f7f"};

inline std::string num(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

inline std::string label(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

inline std::string escape(const std::string& s)
{
    std::string out;
    for (char c : s) {
        switch (c) {
        case '&': out += "&amp;"; break;
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '"': out += "&quot;"; break;
        default: out += c;
        }
    }
    return out;
}

struct Axis {
    double lo = 0.0;
    double hi = 1.0;
    bool log = false;

    double t(double v) const
    {
        if (log) {
            const double l = std::log10(std::max(v, 1e-300));
            return (l - std::log10(lo)) / (std::log10(hi) - std::log10(lo));
        }
        return (v - lo) / (hi - lo);
    }
};

inline Axis fit_axis(double lo, double hi, bool log)
{
    if (!(lo <= hi)) {
        lo = 0.0;
        hi = 1.0;
    }
    if (log && lo > 0.0) {
        lo = std::pow(10.0, std::floor(std::log10(lo)));
        hi = std::pow(10.0, std::ceil(std::log10(hi)));
        if (hi <= lo)
            hi = lo * 10.0;
        return {lo, hi, true};
    }
    if (hi == lo) {
        const double pad = lo == 0.0 ? 1.0 : std::fabs(lo) * 0.1;
        lo -= pad;
        hi += pad;
    } else {
        const double pad = (hi - lo) * 0.05;
        lo -= pad;
        hi += pad;
    }
    return {lo, hi, false};
}

inline std::vector<double> ticks(const Axis& a)
{
    std::vector<double> out;
    if (a.log) {
        for (double v = a.lo; v <= a.hi * 1.0000001; v *= 10.0)
            out.push_back(v);
        return out;
    }
    for (int i = 0; i <= 5; ++i)
        out.push_back(a.lo + (a.hi - a.lo) * i / 5.0);
    return out;
}

struct Frame {
    double width = 720, height = 440;
    double left = 80, right = 80, top = 40, bottom = 60;
    double plot_w() const { return width - left - right; }
    double plot_h() const { return height - top - bottom; }
    double x(double t) const { return left + t * plot_w(); }
    double y(double t) const { return top + (1.0 - t) * plot_h(); }
};

inline void open(std::string& out, const Frame& f, const std::string& title)
{
    out += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(f.width) + "\" height=\"" + num(f.height) +
           "\" viewBox=\"0 0 " + num(f.width) + " " + num(f.height) + "\">\n";
    out += "<rect x=\"0\" y=\"0\" width=\"" + num(f.width) + "\" height=\"" + num(f.height) + "\" fill=\"white\"/>\n";
    out += "<text x=\"" + num(f.width / 2) + "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" "
           "font-size=\"15\">" + escape(title) + "</text>\n";
    out += "<rect x=\"" + num(f.left) + "\" y=\"" + num(f.top) + "\" width=\"" + num(f.plot_w()) + "\" height=\"" +
           num(f.plot_h()) + "\" fill=\"none\" stroke=\"black\"/>\n";
}

inline void y_axis(std::string& out, const Frame& f, const Axis& a, const std::string& name, bool right_side)
{
    const double x = right_side ? f.left + f.plot_w() : f.left;
    for (double v : ticks(a)) {
        const double y = f.y(a.t(v));
        const double x2 = right_side ? x + 5 : x - 5;
        out += "<line x1=\"" + num(x) + "\" y1=\"" + num(y) + "\" x2=\"" + num(x2) + "\" y2=\"" + num(y) +
               "\" stroke=\"black\"/>\n";
        out += "<text x=\"" + num(right_side ? x + 8 : x - 8) + "\" y=\"" + num(y + 4) + "\" text-anchor=\"" +
               (right_side ? "start" : "end") + "\" font-family=\"sans-serif\" font-size=\"11\">" + label(v) +
               "</text>\n";
    }
    const double lx = right_side ? f.width - 16 : 16;
    const double ly = f.top + f.plot_h() / 2;
    out += "<text x=\"" + num(lx) + "\" y=\"" + num(ly) + "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
           "font-size=\"12\" transform=\"rotate(-90 " + num(lx) + " " + num(ly) + ")\">" + escape(name) + "</text>\n";
}

inline void x_label(std::string& out, const Frame& f, const std::string& name)
{
    out += "<text x=\"" + num(f.left + f.plot_w() / 2) + "\" y=\"" + num(f.height - 14) +
           "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">" + escape(name) + "</text>\n";
}

inline void legend(std::string& out, const Frame& f, std::size_t index, const std::string& name, const char* color,
                   bool dashed)
{
    const double x = f.left + 10;
    const double y = f.top + 14 + 16 * static_cast<double>(index);
    out += "<line x1=\"" + num(x) + "\" y1=\"" + num(y - 4) + "\" x2=\"" + num(x + 22) + "\" y2=\"" + num(y - 4) +
           "\" stroke=\"" + color + "\" stroke-width=\"2\"" + (dashed ? " stroke-dasharray=\"5,3\"" : "") + "/>\n";
    out += "<text x=\"" + num(x + 28) + "\" y=\"" + num(y) + "\" font-family=\"sans-serif\" font-size=\"11\">" +
           escape(name) + "</text>\n";
}

} // namespace detail

inline std::string render(const LineChart& chart)
{
    using namespace detail;
    Frame f;
    double xlo = std::numeric_limits<double>::infinity(), xhi = -xlo;
    double ylo = xlo, yhi = -xlo, y2lo = xlo, y2hi = -xlo;
    bool positive = true;
    for (const auto& s : chart.primary)
        for (auto [x, y] : s.points) {
            xlo = std::min(xlo, x), xhi = std::max(xhi, x);
            ylo = std::min(ylo, y), yhi = std::max(yhi, y);
            positive = positive && y > 0.0;
        }
    for (const auto& s : chart.secondary)
        for (auto [x, y] : s.points) {
            xlo = std::min(xlo, x), xhi = std::max(xhi, x);
            y2lo = std::min(y2lo, y), y2hi = std::max(y2hi, y);
        }
    if (!(xlo <= xhi)) {
        xlo = 0.0;
        xhi = 1.0;
    }
    if (xhi == xlo)
        xhi = xlo + 1.0;
    const Axis ax{xlo, xhi, false};
    const Axis ay = fit_axis(ylo, yhi, chart.log_y && positive);
    const Axis ay2 = fit_axis(std::min(0.0, y2lo), y2hi, false);

    std::string out;
    open(out, f, chart.title);
    for (int i = 0; i <= 5; ++i) {
        const double v = xlo + (xhi - xlo) * i / 5.0;
        const double x = f.x(ax.t(v));
        const double y = f.top + f.plot_h();
        out += "<line x1=\"" + num(x) + "\" y1=\"" + num(y) + "\" x2=\"" + num(x) + "\" y2=\"" + num(y + 5) +
               "\" stroke=\"black\"/>\n";
        out += "<text x=\"" + num(x) + "\" y=\"" + num(y + 18) +
               "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" + label(v) + "</text>\n";
    }
    x_label(out, f, chart.x_label);
    y_axis(out, f, ay, chart.y_label, false);
    if (!chart.secondary.empty())
        y_axis(out, f, ay2, chart.y2_label, true);

    std::size_t idx = 0;
    auto polyline = [&](const Series& s, const Axis& ya, bool dashed, const char* color) {
        out += "<polyline fill=\"none\" stroke=\"" + std::string(color) + "\" stroke-width=\"1.5\"" +
               (dashed ? " stroke-dasharray=\"5,3\"" : "") + " points=\"";
        bool first = true;
        for (auto [x, y] : s.points) {
            if (!first)
                out += ' ';
            first = false;
            out += num(f.x(ax.t(x))) + "," + num(f.y(std::clamp(ya.t(y), 0.0, 1.0)));
        }
        out += "\"><title>" + escape(s.name) + "</title></polyline>\n";
    };
    for (std::size_t i = 0; i < chart.primary.size(); ++i) {
        const char* c = palette[i % std::size(palette)];
        polyline(chart.primary[i], ay, false, c);
        legend(out, f, idx++, chart.primary[i].name, c, false);
    }
    for (std::size_t i = 0; i < chart.secondary.size(); ++i) {
        const char* c = palette[i % std::size(palette)];
        polyline(chart.secondary[i], ay2, true, c);
        legend(out, f, idx++, chart.secondary[i].name, c, true);
    }
    out += "</svg>\n";
    return out;
}

inline std::string render(const ErrorBarChart& chart)
{
    using namespace detail;
    Frame f;
    double ylo = std::numeric_limits<double>::infinity(), yhi = -ylo;
    bool positive = true;
    for (const auto& s : chart.series)
        for (const auto& b : s.bars) {
            ylo = std::min(ylo, b.min);
            yhi = std::max(yhi, b.max);
            positive = positive && b.min > 0.0;
        }
    const Axis ay = fit_axis(ylo, yhi, chart.log_y && positive);
    const std::size_t C = std::max<std::size_t>(chart.categories.size(), 1);
    const std::size_t S = std::max<std::size_t>(chart.series.size(), 1);

    std::string out;
    open(out, f, chart.title);
    const double slot = f.plot_w() / static_cast<double>(C);
    for (std::size_t c = 0; c < chart.categories.size(); ++c) {
        const double x = f.left + slot * (static_cast<double>(c) + 0.5);
        out += "<text x=\"" + num(x) + "\" y=\"" + num(f.top + f.plot_h() + 18) +
               "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" +
               escape(chart.categories[c]) + "</text>\n";
    }
    x_label(out, f, chart.x_label);
    y_axis(out, f, ay, chart.y_label, false);

    for (std::size_t s = 0; s < chart.series.size(); ++s) {
        const char* color = palette[s % std::size(palette)];
        const auto& series = chart.series[s];
        const double offset = (static_cast<double>(s) + 0.5) / static_cast<double>(S) - 0.5;
        std::string pts;
        for (std::size_t c = 0; c < series.bars.size() && c < C; ++c) {
            const auto& b = series.bars[c];
            const double x = f.left + slot * (static_cast<double>(c) + 0.5 + 0.6 * offset);
            const double ym = f.y(std::clamp(ay.t(b.mean), 0.0, 1.0));
            const double y0 = f.y(std::clamp(ay.t(b.min), 0.0, 1.0));
            const double y1 = f.y(std::clamp(ay.t(b.max), 0.0, 1.0));
            out += "<line x1=\"" + num(x) + "\" y1=\"" + num(y0) + "\" x2=\"" + num(x) + "\" y2=\"" + num(y1) +
                   "\" stroke=\"" + color + "\"/>\n";
            out += "<line x1=\"" + num(x - 4) + "\" y1=\"" + num(y0) + "\" x2=\"" + num(x + 4) + "\" y2=\"" + num(y0) +
                   "\" stroke=\"" + color + "\"/>\n";
            out += "<line x1=\"" + num(x - 4) + "\" y1=\"" + num(y1) + "\" x2=\"" + num(x + 4) + "\" y2=\"" + num(y1) +
                   "\" stroke=\"" + color + "\"/>\n";
            out += "<circle cx=\"" + num(x) + "\" cy=\"" + num(ym) + "\" r=\"3\" fill=\"" + color + "\"/>\n";
            if (!pts.empty())
                pts += ' ';
            pts += num(x) + "," + num(ym);
        }
        out += "<polyline fill=\"none\" stroke=\"" + std::string(color) + "\" stroke-width=\"1\" points=\"" + pts +
               "\"><title>" + escape(series.name) + "</title></polyline>\n";
        legend(out, f, s, series.name, color, false);
    }
    out += "</svg>\n";
    return out;
}

} // namespace dendrevo::svg
