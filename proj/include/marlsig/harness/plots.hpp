#pragma once

#include <map>
#include <string>
#include <vector>

#include "marlsig/harness/outputs.hpp"

namespace marlsig::harness {

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

struct BoxGroup {
  std::string label;
  std::vector<double> values;
};

struct BarCategory {
  std::string label;
  std::vector<double> values;  // one per series
};

std::string svg_line_plot(const std::string& title, const std::string& xlabel, const std::string& ylabel,
                          const std::vector<Series>& series);
// Box from quartiles, whiskers to min/max, median line, mean drawn as a red square.
std::string svg_box_plot(const std::string& title, const std::string& ylabel, const std::vector<BoxGroup>& groups);
std::string svg_bar_chart(const std::string& title, const std::string& ylabel,
                          const std::vector<std::string>& series_labels, const std::vector<BarCategory>& categories);

// File name -> SVG text for a metrics table: delay box plots per movement and run label,
// side-street window delays, and paired bars of mean bus travel time per section.
std::map<std::string, std::string> emit_plots(const std::vector<MetricRow>& rows);

}  // namespace marlsig::harness
