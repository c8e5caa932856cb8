#pragma once

#include <string>
#include <utility>
#include <vector>

namespace stallsched {

struct PlotSeries {
  std::string label;
  std::vector<std::pair<double, double>> points;
};

struct ChartData {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<PlotSeries> series;
};

// Shapes one of the harness CSV outputs into chart series. The header row
// decides the interpretation: a timeseries file (policy,t,total_queue) maps
// each policy to its queue trajectory; a summary file groups rows by policy,
// averaging mean_queue over replications per sweep point (or plotting one
// point per replication when the file has no sweep axis).
ChartData chart_from_csv(const std::string& csv_text);

// Renders a self-contained SVG line chart (no external references).
std::string render_line_chart(const ChartData& chart);

}  // namespace stallsched
