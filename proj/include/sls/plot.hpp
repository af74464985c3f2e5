#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <ostream>
#include <string>
#include <vector>

#include "sls/bench.hpp"
#include "sls/error.hpp"

namespace sls {

struct PlotOptions {
    Metric metric = Metric::L2;
    std::string title = "relative error";
    std::string x_label = "sweep value";
    double width = 640;
    double height = 420;
};

namespace detail {

inline std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

inline std::string tick_label(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

inline std::string xml_escape(const std::string& s) {
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

}  // namespace detail

/// Log-log SVG of the mean error per sweep value with min/max whiskers.
/// A single sweep value gives one marker and no connecting line.
inline void write_svg_plot(const std::vector<ExperimentRecord>& records, std::ostream& out,
                           const PlotOptions& opt = {}) {
    std::vector<SweepSummary> pts;
    for (const auto& s : summarize(records, opt.metric))
        if (s.count > 0 && s.min > 0 && s.sweep_value > 0) pts.push_back(s);
    if (pts.empty()) throw Error("plot: no sweep value with a positive finite error");

    double xlo = std::log10(pts.front().sweep_value), xhi = std::log10(pts.back().sweep_value);
    double ylo = std::log10(pts.front().min), yhi = ylo;
    for (const auto& s : pts) {
        ylo = std::min(ylo, std::log10(s.min));
        yhi = std::max(yhi, std::log10(s.max));
    }
    auto pad = [](double& lo, double& hi) {
        double span = hi - lo;
        if (span <= 0) span = 1.0;
        lo -= 0.08 * span;
        hi += 0.08 * span;
    };
    pad(xlo, xhi);
    pad(ylo, yhi);

    const double left = 70, right = 20, top = 40, bottom = 50;
    const double pw = opt.width - left - right, ph = opt.height - top - bottom;
    auto sx = [&](double v) { return left + (std::log10(v) - xlo) / (xhi - xlo) * pw; };
    auto sy = [&](double v) { return top + (yhi - std::log10(v)) / (yhi - ylo) * ph; };

    out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << detail::fmt(opt.width) << "\" height=\""
        << detail::fmt(opt.height) << "\" viewBox=\"0 0 " << detail::fmt(opt.width) << ' '
        << detail::fmt(opt.height) << "\">\n";
    out << "<rect x=\"0\" y=\"0\" width=\"" << detail::fmt(opt.width) << "\" height=\"" << detail::fmt(opt.height)
        << "\" fill=\"white\"/>\n";
    out << "<text x=\"" << detail::fmt(opt.width / 2) << "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">"
        << detail::xml_escape(opt.title) << "</text>\n";
    out << "<g stroke=\"black\" fill=\"none\">\n";
    out << "<rect x=\"" << detail::fmt(left) << "\" y=\"" << detail::fmt(top) << "\" width=\"" << detail::fmt(pw)
        << "\" height=\"" << detail::fmt(ph) << "\"/>\n";
    out << "</g>\n";

    out << "<g font-size=\"11\" fill=\"black\">\n";
    for (const auto& s : pts)
        out << "<text x=\"" << detail::fmt(sx(s.sweep_value)) << "\" y=\"" << detail::fmt(top + ph + 16)
            << "\" text-anchor=\"middle\">" << detail::tick_label(s.sweep_value) << "</text>\n";
    for (int e = static_cast<int>(std::ceil(ylo)); e <= static_cast<int>(std::floor(yhi)); ++e) {
        double v = std::pow(10.0, e);
        out << "<text x=\"" << detail::fmt(left - 6) << "\" y=\"" << detail::fmt(sy(v) + 4)
            << "\" text-anchor=\"end\">" << detail::tick_label(v) << "</text>\n";
    }
    out << "<text x=\"" << detail::fmt(left + pw / 2) << "\" y=\"" << detail::fmt(opt.height - 10)
        << "\" text-anchor=\"middle\">" << detail::xml_escape(opt.x_label) << " (log)</text>\n";
    out << "</g>\n";

    if (pts.size() > 1) {
        out << "<polyline fill=\"none\" stroke=\"steelblue\" stroke-width=\"2\" points=\"";
        for (std::size_t i = 0; i < pts.size(); ++i)
            out << (i ? " " : "") << detail::fmt(sx(pts[i].sweep_value)) << ',' << detail::fmt(sy(pts[i].mean));
        out << "\"/>\n";
    }
    out << "<g stroke=\"gray\" stroke-width=\"1\">\n";
    for (const auto& s : pts) {
        double x = sx(s.sweep_value);
        out << "<line x1=\"" << detail::fmt(x) << "\" y1=\"" << detail::fmt(sy(s.min)) << "\" x2=\"" << detail::fmt(x)
            << "\" y2=\"" << detail::fmt(sy(s.max)) << "\"/>\n";
    }
    out << "</g>\n";
    out << "<g fill=\"steelblue\">\n";
    for (const auto& s : pts)
        out << "<circle cx=\"" << detail::fmt(sx(s.sweep_value)) << "\" cy=\"" << detail::fmt(sy(s.mean))
            << "\" r=\"4\"/>\n";
    out << "</g>\n";
    out << "</svg>\n";
}

inline void emit_plot(const std::vector<ExperimentRecord>& records, const std::string& path,
                      const PlotOptions& opt = {}) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    write_svg_plot(records, out, opt);
    out.flush();
    if (!out) throw IoError("failed writing '" + path + "'");
}

}  // namespace sls
