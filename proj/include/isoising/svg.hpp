#ifndef ISOISING_SVG_HPP
#define ISOISING_SVG_HPP

#include <cstdio>
#include <fstream>
#include <sstream>

#include "isoising/fields.hpp"

namespace isoising {

namespace detail {

inline std::string fmt6(double x) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.6f", x);
    return buf;
}

/// Blue-white-red map on [0,1].
inline std::string heat_color(double t) {
    t = std::min(1.0, std::max(0.0, t));
    int r, g, b;
    if (t < 0.5) {
        double s = t * 2;
        r = static_cast<int>(30 + 225 * s);
        g = static_cast<int>(60 + 195 * s);
        b = 255;
    } else {
        double s = (t - 0.5) * 2;
        r = 255;
        g = static_cast<int>(255 - 195 * s);
        b = static_cast<int>(255 - 225 * s);
    }
    char buf[16];
    std::snprintf(buf, sizeof(buf), "#%02x%02x%02x", r, g, b);
    return buf;
}

}  // namespace detail

/// Heat map of per-face scalar values: one polygon per face (rhombus or kept
/// triangle), colored on the [lo, hi] scale.  Byte-deterministic.
inline std::string svg_face_heatmap(const DiscreteDomain& dom, const std::vector<double>& values,
                                    double lo, double hi, int pixels = 640) {
    if (values.size() != dom.faces.size()) fail(ErrorKind::BadInput, "svg_face_heatmap: size mismatch");
    const IsoradialGraph& g = dom.graph;
    double x0 = 1e300, x1 = -1e300, y0 = 1e300, y1 = -1e300;
    for (int v : dom.vertices()) {
        x0 = std::min(x0, std::real(g.pos(v)));
        x1 = std::max(x1, std::real(g.pos(v)));
        y0 = std::min(y0, std::imag(g.pos(v)));
        y1 = std::max(y1, std::imag(g.pos(v)));
    }
    double span = std::max(x1 - x0, y1 - y0);
    double scale = pixels / (span > 0 ? span : 1.0);
    auto px = [&](cplx p) {
        return std::pair<double, double>((std::real(p) - x0) * scale,
                                         (y1 - std::imag(p)) * scale);
    };
    std::ostringstream out;
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << pixels << "\" height=\""
        << pixels << "\">\n";
    for (std::size_t f = 0; f < dom.faces.size(); ++f) {
        const Face& face = dom.faces[f];
        std::vector<cplx> corners;
        if (face.kind == FaceKind::Inner) {
            const Rhombus& r = g.rh(face.rhombus);
            corners = {g.pos(r.u1), g.pos(r.w1), g.pos(r.u2), g.pos(r.w2)};
        } else {
            corners = {g.pos(face.apex), g.pos(face.d1), g.pos(face.d2)};
        }
        double t = (values[f] - lo) / (hi > lo ? hi - lo : 1.0);
        out << "<polygon points=\"";
        for (std::size_t k = 0; k < corners.size(); ++k) {
            auto [x, y] = px(corners[k]);
            out << detail::fmt6(x) << "," << detail::fmt6(y)
                << (k + 1 < corners.size() ? " " : "");
        }
        out << "\" fill=\"" << detail::heat_color(t) << "\" stroke=\"#404040\" stroke-width=\"0.4\"/>\n";
    }
    out << "</svg>\n";
    return out.str();
}

/// Simple line plot of one or more series with a legend.
struct PlotSeries {
    std::string label;
    std::string color = "#1f5fbf";
    std::vector<std::pair<double, double>> points;
};

inline std::string svg_line_plot(const std::vector<PlotSeries>& series, int width = 720,
                                 int height = 480) {
    if (series.empty()) fail(ErrorKind::BadInput, "svg_line_plot: nothing to plot");
    double x0 = 1e300, x1 = -1e300, y0 = 1e300, y1 = -1e300;
    for (const auto& s : series)
        for (auto [x, y] : s.points) {
            x0 = std::min(x0, x);
            x1 = std::max(x1, x);
            y0 = std::min(y0, y);
            y1 = std::max(y1, y);
        }
    if (!(x1 >= x0)) fail(ErrorKind::BadInput, "svg_line_plot: empty series");
    if (x1 == x0) x1 = x0 + 1;
    if (y1 == y0) y1 = y0 + 1;
    const double mgn = 48;
    auto px = [&](double x, double y) {
        return std::pair<double, double>(mgn + (x - x0) / (x1 - x0) * (width - 2 * mgn),
                                         height - mgn - (y - y0) / (y1 - y0) * (height - 2 * mgn));
    };
    std::ostringstream out;
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
        << height << "\">\n";
    out << "<rect x=\"" << detail::fmt6(mgn) << "\" y=\"" << detail::fmt6(mgn) << "\" width=\""
        << detail::fmt6(width - 2 * mgn) << "\" height=\"" << detail::fmt6(height - 2 * mgn)
        << "\" fill=\"none\" stroke=\"#333333\"/>\n";
    int li = 0;
    for (const auto& s : series) {
        out << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.5\" points=\"";
        for (std::size_t k = 0; k < s.points.size(); ++k) {
            auto [x, y] = px(s.points[k].first, s.points[k].second);
            out << detail::fmt6(x) << "," << detail::fmt6(y) << (k + 1 < s.points.size() ? " " : "");
        }
        out << "\"/>\n";
        out << "<text x=\"" << detail::fmt6(mgn + 8) << "\" y=\"" << detail::fmt6(mgn + 16 + 16 * li)
            << "\" fill=\"" << s.color << "\" font-size=\"12\">" << s.label << "</text>\n";
        ++li;
    }
    char lab[128];
    std::snprintf(lab, sizeof(lab), "x: [%.6g, %.6g]  y: [%.6g, %.6g]", x0, x1, y0, y1);
    out << "<text x=\"" << detail::fmt6(mgn) << "\" y=\"" << detail::fmt6(height - 12.0)
        << "\" fill=\"#333333\" font-size=\"12\">" << lab << "</text>\n";
    out << "</svg>\n";
    return out.str();
}

inline void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(ErrorKind::BadInput, "write_text: cannot open " + path);
    out << text;
}

}  // namespace isoising

#endif
