#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace lsmcf {

struct ChartSeries {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
  bool dashed = false;
};

/// Self-contained SVG line chart with linear axes, tick labels and a legend.
void write_line_chart(const std::filesystem::path& path, const std::string& title,
                      const std::string& x_label, const std::string& y_label,
                      const std::vector<ChartSeries>& series);

}  // namespace lsmcf
