#pragma once

// Minimal static SVG line chart: one polyline per trajectory component.

#include "r0fde/semigroup.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <string>
#include <vector>

namespace r0fde::plot {

inline void write_svg(std::ostream& os, const DdeTrajectory& traj,
                      const std::vector<std::string>& labels = {}, double width = 800.0,
                      double height = 480.0)
{
    static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                    "#ff7f0e", "#8c564b", "#e377c2", "#17becf"};
    const double margin = 50.0;
    const double t_min = 0.0;
    const double t_max = traj.end_time();
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < traj.size(); ++j) {
        for (double v : traj.state(j)) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    }
    if (!(hi > lo)) {
        hi = lo + 1.0;
    }
    const double plot_w = width - 2.0 * margin;
    const double plot_h = height - 2.0 * margin;
    auto x_of = [&](double t) { return margin + (t - t_min) / (t_max - t_min) * plot_w; };
    auto y_of = [&](double v) { return height - margin - (v - lo) / (hi - lo) * plot_h; };

    char buf[128];
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
       << "\" viewBox=\"0 0 " << width << ' ' << height << "\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    // axes
    os << "<g stroke=\"black\" stroke-width=\"1\">\n";
    std::snprintf(buf, sizeof buf, "<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\"/>\n",
                  margin, height - margin, width - margin, height - margin);
    os << buf;
    std::snprintf(buf, sizeof buf, "<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\"/>\n",
                  margin, margin, margin, height - margin);
    os << buf << "</g>\n";
    os << "<g font-family=\"sans-serif\" font-size=\"11\">\n";
    std::snprintf(buf, sizeof buf, "<text x=\"%.1f\" y=\"%.1f\">%.4g</text>\n", margin,
                  height - margin + 16.0, t_min);
    os << buf;
    std::snprintf(buf, sizeof buf, "<text x=\"%.1f\" y=\"%.1f\" text-anchor=\"end\">%.4g</text>\n",
                  width - margin, height - margin + 16.0, t_max);
    os << buf;
    std::snprintf(buf, sizeof buf, "<text x=\"%.1f\" y=\"%.1f\" text-anchor=\"end\">%.4g</text>\n",
                  margin - 4.0, height - margin, lo);
    os << buf;
    std::snprintf(buf, sizeof buf, "<text x=\"%.1f\" y=\"%.1f\" text-anchor=\"end\">%.4g</text>\n",
                  margin - 4.0, margin + 4.0, hi);
    os << buf << "</g>\n";

    // At most ~2000 vertices per line.
    const std::size_t stride = std::max<std::size_t>(1, traj.size() / 2000);
    for (std::size_t i = 0; i < traj.dim(); ++i) {
        os << "<polyline fill=\"none\" stroke-width=\"1.5\" stroke=\"" << palette[i % 8]
           << "\" points=\"";
        for (std::size_t j = 0; j < traj.size(); j += stride) {
            std::snprintf(buf, sizeof buf, "%.2f,%.2f ", x_of(traj.time(j)), y_of(traj.state(j)[i]));
            os << buf;
        }
        const std::size_t last = traj.size() - 1;
        std::snprintf(buf, sizeof buf, "%.2f,%.2f", x_of(traj.time(last)), y_of(traj.state(last)[i]));
        os << buf << "\"/>\n";
        const std::string label = i < labels.size() ? labels[i] : "u" + std::to_string(i + 1);
        std::snprintf(buf, sizeof buf,
                      "<text x=\"%.1f\" y=\"%.1f\" font-family=\"sans-serif\" font-size=\"12\" "
                      "fill=\"%s\">",
                      width - margin + 6.0, margin + 14.0 * static_cast<double>(i), palette[i % 8]);
        os << buf << label << "</text>\n";
    }
    os << "</svg>\n";
}

} // namespace r0fde::plot
