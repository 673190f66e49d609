#pragma once

#include <string>
#include <vector>

namespace eegwl {

// Minimal static SVG emission; deterministic output for identical input.

struct BarGroup {
  std::string name;                  // e.g. band name
  std::vector<double> values;        // one per series
};

void write_grouped_bar_svg(const std::string& path, const std::string& title,
                           const std::vector<std::string>& series_names,
                           const std::vector<BarGroup>& groups);

struct LineSeries {
  std::string name;
  std::vector<double> x, y;
};

void write_line_svg(const std::string& path, const std::string& title,
                    const std::vector<LineSeries>& series);

}  // namespace eegwl
