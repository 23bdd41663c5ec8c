#pragma once

#include <string>
#include <vector>

namespace condlr {

struct SvgSeries {
    std::string name;
    std::vector<double> x;
    std::vector<double> y;
};

// Minimal polyline chart: axes, ticks, legend, one colored line per series.
void write_svg_chart(const std::string& path, const std::string& title,
                     const std::string& x_label, const std::string& y_label,
                     const std::vector<SvgSeries>& series);

} // namespace condlr
