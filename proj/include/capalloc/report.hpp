#pragma once

// CSV and self-contained SVG renderings for study outputs. No plotting
// dependency: heatmaps and line charts are emitted as standalone SVG text.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "capalloc/core.hpp"

namespace capalloc {

inline std::string format_number(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

inline std::string csv_join(const std::vector<std::string>& cells) {
    std::string line;
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) line += ',';
        line += cells[i];
    }
    return line;
}

inline void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("write_text_file: cannot open '" + path + "'");
    f << content;
}

namespace svg {

inline std::string color_diverging(double v, double lo, double hi) {
    // Blue (negative) through white (zero) to red (positive).
    const double amax = std::max(std::abs(lo), std::abs(hi));
    const double t = amax > 0.0 ? std::clamp(v / amax, -1.0, 1.0) : 0.0;
    int r = 255, g = 255, b = 255;
    if (t > 0) {
        g = static_cast<int>(255 * (1.0 - t));
        b = g;
    } else if (t < 0) {
        r = static_cast<int>(255 * (1.0 + t));
        g = r;
    }
    char buf[16];
    std::snprintf(buf, sizeof buf, "#%02x%02x%02x", r, g, b);
    return buf;
}

inline std::string heatmap(const Matrix& m, const std::vector<std::string>& row_labels,
                           const std::vector<std::string>& col_labels, const std::string& title) {
    const int cell = 48, margin = 110, top = 60;
    const int width = margin + cell * static_cast<int>(m.cols()) + 20;
    const int height = top + cell * static_cast<int>(m.rows()) + 40;
    double lo = 0.0, hi = 0.0;
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j) {
            lo = std::min(lo, m(i, j));
            hi = std::max(hi, m(i, j));
        }
    std::ostringstream s;
    s << "<svg xmlns='http://www.w3.org/2000/svg' width='" << width << "' height='" << height
      << "' font-family='monospace' font-size='11'>\n";
    s << "<text x='10' y='20' font-size='14'>" << title << "</text>\n";
    for (std::size_t j = 0; j < m.cols(); ++j)
        s << "<text x='" << margin + cell * static_cast<int>(j) + 4 << "' y='" << top - 8
          << "'>" << (j < col_labels.size() ? col_labels[j] : "") << "</text>\n";
    for (std::size_t i = 0; i < m.rows(); ++i) {
        s << "<text x='8' y='" << top + cell * static_cast<int>(i) + cell / 2 << "'>"
          << (i < row_labels.size() ? row_labels[i] : "") << "</text>\n";
        for (std::size_t j = 0; j < m.cols(); ++j) {
            const double v = m(i, j);
            s << "<rect x='" << margin + cell * static_cast<int>(j) << "' y='"
              << top + cell * static_cast<int>(i) << "' width='" << cell << "' height='" << cell
              << "' fill='" << color_diverging(v, lo, hi) << "' stroke='#888'/>\n";
            char buf[24];
            std::snprintf(buf, sizeof buf, "%.2f", v);
            s << "<text x='" << margin + cell * static_cast<int>(j) + 4 << "' y='"
              << top + cell * static_cast<int>(i) + cell / 2 + 4 << "'>" << buf << "</text>\n";
        }
    }
    s << "</svg>\n";
    return s.str();
}

inline std::string line_chart(const Vec& x, const std::map<std::string, Vec>& series,
                              const std::string& title, const std::string& xlabel,
                              const std::string& ylabel) {
    const int width = 640, height = 420, ml = 70, mr = 140, mt = 50, mb = 50;
    double xlo = x.empty() ? 0 : x.front(), xhi = x.empty() ? 1 : x.back();
    double ylo = 0, yhi = 1;
    bool first = true;
    for (const auto& [name, ys] : series)
        for (double v : ys) {
            if (first) {
                ylo = yhi = v;
                first = false;
            }
            ylo = std::min(ylo, v);
            yhi = std::max(yhi, v);
        }
    if (yhi == ylo) yhi = ylo + 1.0;
    if (xhi == xlo) xhi = xlo + 1.0;
    const double pad = 0.05 * (yhi - ylo);
    ylo -= pad;
    yhi += pad;
    auto px = [&](double v) { return ml + (v - xlo) / (xhi - xlo) * (width - ml - mr); };
    auto py = [&](double v) { return height - mb - (v - ylo) / (yhi - ylo) * (height - mt - mb); };

    static const char* palette[] = {"#d62728", "#1f77b4", "#2ca02c", "#9467bd",
                                    "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};
    std::ostringstream s;
    s << "<svg xmlns='http://www.w3.org/2000/svg' width='" << width << "' height='" << height
      << "' font-family='monospace' font-size='11'>\n";
    s << "<text x='10' y='22' font-size='14'>" << title << "</text>\n";
    s << "<line x1='" << ml << "' y1='" << height - mb << "' x2='" << width - mr << "' y2='"
      << height - mb << "' stroke='#333'/>\n";
    s << "<line x1='" << ml << "' y1='" << mt << "' x2='" << ml << "' y2='" << height - mb
      << "' stroke='#333'/>\n";
    s << "<text x='" << (width - mr + ml) / 2 << "' y='" << height - 14 << "'>" << xlabel
      << "</text>\n";
    s << "<text x='12' y='" << mt - 8 << "'>" << ylabel << "</text>\n";
    for (double v : x) {
        char buf[24];
        std::snprintf(buf, sizeof buf, "%g", v);
        s << "<text x='" << px(v) - 8 << "' y='" << height - mb + 16 << "'>" << buf << "</text>\n";
    }
    for (double frac : {0.0, 0.5, 1.0}) {
        const double v = ylo + frac * (yhi - ylo);
        char buf[24];
        std::snprintf(buf, sizeof buf, "%.3g", v);
        s << "<text x='" << ml - 55 << "' y='" << py(v) + 4 << "'>" << buf << "</text>\n";
    }
    int k = 0;
    for (const auto& [name, ys] : series) {
        const char* color = palette[k % 8];
        std::ostringstream pts;
        for (std::size_t i = 0; i < ys.size() && i < x.size(); ++i)
            pts << px(x[i]) << ',' << py(ys[i]) << ' ';
        s << "<polyline points='" << pts.str() << "' fill='none' stroke='" << color
          << "' stroke-width='2'/>\n";
        s << "<text x='" << width - mr + 10 << "' y='" << mt + 16 * k << "' fill='" << color
          << "'>" << name << "</text>\n";
        ++k;
    }
    s << "</svg>\n";
    return s.str();
}

}  // namespace svg

}  // namespace capalloc
