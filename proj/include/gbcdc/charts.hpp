#pragma once

#include <string>
#include <vector>

namespace gbcdc {

struct ChartSeries {
    std::string label;
    std::vector<double> xs;
    std::vector<double> ys;
};

/// Self-contained SVG line chart (no external assets): axes with tick
/// labels, one polyline + marker set per series, inline legend.
std::string line_chart_svg(const std::string& title, const std::string& x_label, const std::string& y_label,
                           const std::vector<ChartSeries>& series);

}  // namespace gbcdc
