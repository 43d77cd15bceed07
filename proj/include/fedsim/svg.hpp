#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace fedsim {

struct ChartSeries {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
};

/// Minimal SVG line chart: axes, ticks, legend, one polyline per series.
void write_line_chart(const std::filesystem::path& path, const std::string& title,
                      const std::string& x_label, const std::string& y_label,
                      const std::vector<ChartSeries>& series);

}  // namespace fedsim
