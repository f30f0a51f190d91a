#pragma once

#include <string>
#include <vector>

namespace skillmem {

struct SvgSeries {
    std::string name;
    std::vector<double> y;  // x is the 1-based index
};

/// Self-contained line chart: axes, y range [y_min, y_max], one polyline per
/// series and a legend.
std::string svg_line_chart(const std::vector<SvgSeries>& series, const std::string& title, const std::string& x_label,
                           const std::string& y_label, double y_min = 0.0, double y_max = 1.0);

}  // namespace skillmem
