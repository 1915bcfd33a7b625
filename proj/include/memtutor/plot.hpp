#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <string>
#include <vector>

#include "memtutor/csv.hpp"

namespace memtutor {

struct PlotSeries {
    std::string label;
    std::vector<double> mean;
    std::vector<double> band;  // one standard deviation, same length (may be empty)
};

namespace plot_detail {

inline std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

inline std::string escape_xml(const std::string& s) {
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

}  // namespace plot_detail

// Renders session curves with +-1 sd bands as a standalone SVG document.
// X is the 1-based session index.
inline std::string render_curves_svg(const std::vector<PlotSeries>& series,
                                     const std::string& title, const std::string& x_label,
                                     const std::string& y_label) {
    using plot_detail::escape_xml;
    using plot_detail::num;
    if (series.empty()) throw std::invalid_argument("render_curves_svg: no series");
    size_t n = 0;
    for (const auto& s : series) {
        if (s.mean.empty()) throw std::invalid_argument("render_curves_svg: empty series");
        if (!s.band.empty() && s.band.size() != s.mean.size())
            throw std::invalid_argument("render_curves_svg: band length mismatch");
        n = std::max(n, s.mean.size());
    }

    const double W = 860, H = 540, ml = 70, mr = 30, mt = 50, mb = 60;
    const double pw = W - ml - mr, ph = H - mt - mb;

    double lo = 1e300, hi = -1e300;
    for (const auto& s : series)
        for (size_t i = 0; i < s.mean.size(); ++i) {
            const double b = s.band.empty() ? 0.0 : s.band[i];
            lo = std::min(lo, s.mean[i] - b);
            hi = std::max(hi, s.mean[i] + b);
        }
    if (!(hi > lo)) {
        lo -= 0.5;
        hi += 0.5;
    }
    const double pad = 0.05 * (hi - lo);
    lo -= pad;
    hi += pad;

    auto x_of = [&](size_t i, size_t len) {
        return len < 2 ? ml + pw / 2 : ml + pw * static_cast<double>(i) / (len - 1);
    };
    auto y_of = [&](double v) { return mt + ph * (1.0 - (v - lo) / (hi - lo)); };

    static const char* palette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728",
                                    "#9467bd", "#8c564b"};
    const int n_colors = 6;

    std::string svg;
    svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(W) + "\" height=\"" +
           num(H) + "\" viewBox=\"0 0 " + num(W) + " " + num(H) + "\">\n";
    svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    svg += "<text x=\"" + num(W / 2) + "\" y=\"28\" font-size=\"18\" text-anchor=\"middle\" "
           "font-family=\"sans-serif\">" + escape_xml(title) + "</text>\n";

    // Grid and ticks.
    for (int t = 0; t <= 5; ++t) {
        const double v = lo + (hi - lo) * t / 5.0;
        const double y = y_of(v);
        svg += "<line x1=\"" + num(ml) + "\" y1=\"" + num(y) + "\" x2=\"" + num(ml + pw) +
               "\" y2=\"" + num(y) + "\" stroke=\"#dddddd\"/>\n";
        svg += "<text x=\"" + num(ml - 8) + "\" y=\"" + num(y + 4) +
               "\" font-size=\"12\" text-anchor=\"end\" font-family=\"sans-serif\">" +
               num(std::round(v * 1000) / 1000) + "</text>\n";
    }
    const int x_ticks = std::min<size_t>(n, 7) > 1 ? static_cast<int>(std::min<size_t>(n, 7)) : 2;
    for (int t = 0; t < x_ticks; ++t) {
        const size_t i = n < 2 ? 0 : static_cast<size_t>(std::llround(
                                          static_cast<double>(t) * (n - 1) / (x_ticks - 1)));
        const double x = x_of(i, n);
        svg += "<text x=\"" + num(x) + "\" y=\"" + num(mt + ph + 20) +
               "\" font-size=\"12\" text-anchor=\"middle\" font-family=\"sans-serif\">" +
               std::to_string(i + 1) + "</text>\n";
    }
    svg += "<line x1=\"" + num(ml) + "\" y1=\"" + num(mt + ph) + "\" x2=\"" + num(ml + pw) +
           "\" y2=\"" + num(mt + ph) + "\" stroke=\"black\"/>\n";
    svg += "<line x1=\"" + num(ml) + "\" y1=\"" + num(mt) + "\" x2=\"" + num(ml) + "\" y2=\"" +
           num(mt + ph) + "\" stroke=\"black\"/>\n";
    svg += "<text x=\"" + num(ml + pw / 2) + "\" y=\"" + num(H - 18) +
           "\" font-size=\"14\" text-anchor=\"middle\" font-family=\"sans-serif\">" +
           escape_xml(x_label) + "</text>\n";
    svg += "<text x=\"20\" y=\"" + num(mt + ph / 2) +
           "\" font-size=\"14\" text-anchor=\"middle\" font-family=\"sans-serif\" "
           "transform=\"rotate(-90 20 " + num(mt + ph / 2) + ")\">" + escape_xml(y_label) +
           "</text>\n";

    for (size_t si = 0; si < series.size(); ++si) {
        const auto& s = series[si];
        const char* color = palette[si % n_colors];
        const size_t len = s.mean.size();
        if (!s.band.empty()) {
            std::string pts;
            for (size_t i = 0; i < len; ++i)
                pts += num(x_of(i, len)) + "," + num(y_of(s.mean[i] + s.band[i])) + " ";
            for (size_t i = len; i-- > 0;)
                pts += num(x_of(i, len)) + "," + num(y_of(s.mean[i] - s.band[i])) + " ";
            svg += "<polygon points=\"" + pts + "\" fill=\"" + color +
                   "\" fill-opacity=\"0.15\" stroke=\"none\"/>\n";
        }
        std::string pts;
        for (size_t i = 0; i < len; ++i)
            pts += num(x_of(i, len)) + "," + num(y_of(s.mean[i])) + " ";
        svg += "<polyline points=\"" + pts + "\" fill=\"none\" stroke=\"" + color +
               "\" stroke-width=\"2\"/>\n";
        const double ly = mt + 16 + 18 * static_cast<double>(si);
        svg += "<line x1=\"" + num(ml + pw - 150) + "\" y1=\"" + num(ly - 4) + "\" x2=\"" +
               num(ml + pw - 120) + "\" y2=\"" + num(ly - 4) + "\" stroke=\"" + color +
               "\" stroke-width=\"3\"/>\n";
        svg += "<text x=\"" + num(ml + pw - 112) + "\" y=\"" + num(ly) +
               "\" font-size=\"13\" font-family=\"sans-serif\">" + escape_xml(s.label) +
               "</text>\n";
    }
    svg += "</svg>\n";
    return svg;
}

inline void write_plot(const std::vector<PlotSeries>& series, const std::string& title,
                       const std::string& x_label, const std::string& y_label,
                       const std::string& path) {
    write_file(path, render_curves_svg(series, title, x_label, y_label));
}

}  // namespace memtutor
