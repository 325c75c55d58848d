#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <string>
#include <vector>

namespace iclab {

struct ChartSeries {
    std::string name;
    std::vector<double> x;
    std::vector<double> y;
};

namespace detail {

inline std::string fmt2(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return std::string(buf);
}

inline std::string fmt_tick(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.4g", v);
    return std::string(buf);
}

inline const char* chart_color(std::size_t i) {
    static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                    "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};
    return palette[i % (sizeof(palette) / sizeof(palette[0]))];
}

inline std::string xml_escape(const std::string& s) {
    std::string out;
    for (char ch : s) {
        switch (ch) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out.push_back(ch);
        }
    }
    return out;
}

}  // namespace detail

// Standalone SVG line chart; output bytes depend only on the inputs.
inline std::string svg_line_chart(const std::string& title, const std::string& x_label,
                                  const std::string& y_label,
                                  const std::vector<ChartSeries>& series) {
    constexpr double width = 720, height = 480;
    constexpr double ml = 70, mr = 150, mt = 48, mb = 56;
    const double pw = width - ml - mr, ph = height - mt - mb;

    double xmin = 0, xmax = 1, ymin = 0, ymax = 1;
    bool first = true;
    for (const auto& s : series) {
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
            if (first) {
                xmin = xmax = s.x[i];
                ymin = ymax = s.y[i];
                first = false;
            } else {
                xmin = std::min(xmin, s.x[i]);
                xmax = std::max(xmax, s.x[i]);
                ymin = std::min(ymin, s.y[i]);
                ymax = std::max(ymax, s.y[i]);
            }
        }
    }
    if (xmax - xmin < 1e-12) xmax = xmin + 1.0;
    if (ymax - ymin < 1e-12) ymax = ymin + 1.0;

    auto px = [&](double x) { return ml + (x - xmin) / (xmax - xmin) * pw; };
    auto py = [&](double y) { return mt + ph - (y - ymin) / (ymax - ymin) * ph; };

    std::ostringstream out;
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
        << "\" viewBox=\"0 0 " << width << " " << height << "\">\n";
    out << "<rect width=\"" << width << "\" height=\"" << height << "\" fill=\"white\"/>\n";
    out << "<text x=\"" << width / 2 << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" "
           "font-size=\"16\">"
        << detail::xml_escape(title) << "</text>\n";

    // frame and ticks
    out << "<rect x=\"" << ml << "\" y=\"" << mt << "\" width=\"" << pw << "\" height=\"" << ph
        << "\" fill=\"none\" stroke=\"#333333\"/>\n";
    constexpr int n_ticks = 5;
    for (int i = 0; i <= n_ticks; ++i) {
        const double xv = xmin + (xmax - xmin) * i / n_ticks;
        const double yv = ymin + (ymax - ymin) * i / n_ticks;
        const double gx = px(xv), gy = py(yv);
        out << "<line x1=\"" << detail::fmt2(gx) << "\" y1=\"" << mt + ph << "\" x2=\""
            << detail::fmt2(gx) << "\" y2=\"" << mt + ph + 5 << "\" stroke=\"#333333\"/>\n";
        out << "<text x=\"" << detail::fmt2(gx) << "\" y=\"" << mt + ph + 20
            << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">"
            << detail::fmt_tick(xv) << "</text>\n";
        out << "<line x1=\"" << ml - 5 << "\" y1=\"" << detail::fmt2(gy) << "\" x2=\"" << ml
            << "\" y2=\"" << detail::fmt2(gy) << "\" stroke=\"#333333\"/>\n";
        out << "<text x=\"" << ml - 8 << "\" y=\"" << detail::fmt2(gy + 4)
            << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">"
            << detail::fmt_tick(yv) << "</text>\n";
    }
    out << "<text x=\"" << ml + pw / 2 << "\" y=\"" << height - 14
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">"
        << detail::xml_escape(x_label) << "</text>\n";
    out << "<text x=\"18\" y=\"" << mt + ph / 2
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\" transform=\"rotate(-90 18 "
        << mt + ph / 2 << ")\">" << detail::xml_escape(y_label) << "</text>\n";

    for (std::size_t s = 0; s < series.size(); ++s) {
        const auto& sr = series[s];
        std::ostringstream pts;
        bool anything = false;
        for (std::size_t i = 0; i < sr.x.size(); ++i) {
            if (!std::isfinite(sr.x[i]) || !std::isfinite(sr.y[i])) continue;
            if (anything) pts << ' ';
            pts << detail::fmt2(px(sr.x[i])) << ',' << detail::fmt2(py(sr.y[i]));
            anything = true;
        }
        if (anything)
            out << "<polyline fill=\"none\" stroke=\"" << detail::chart_color(s)
                << "\" stroke-width=\"1.5\" points=\"" << pts.str() << "\"/>\n";
        const double ly = mt + 16 + 18 * static_cast<double>(s);
        out << "<line x1=\"" << ml + pw + 10 << "\" y1=\"" << detail::fmt2(ly - 4) << "\" x2=\""
            << ml + pw + 34 << "\" y2=\"" << detail::fmt2(ly - 4) << "\" stroke=\""
            << detail::chart_color(s) << "\" stroke-width=\"2\"/>\n";
        out << "<text x=\"" << ml + pw + 40 << "\" y=\"" << detail::fmt2(ly)
            << "\" font-family=\"sans-serif\" font-size=\"12\">" << detail::xml_escape(sr.name)
            << "</text>\n";
    }
    out << "</svg>\n";
    return out.str();
}

}  // namespace iclab
