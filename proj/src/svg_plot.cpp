#include "stallsched/svg_plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <sstream>
#include <string>

#include "stallsched/model.hpp"

namespace stallsched {
namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  for (char c : line) {
    if (c == ',') {
      out.push_back(field);
      field.clear();
    } else if (c != '\r') {
      field += c;
    }
  }
  out.push_back(field);
  return out;
}

double parse_field(const std::string& s, const char* what) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos == s.size()) return v;
  } catch (const std::exception&) {
  }
  throw ValidationError(std::string("bad ") + what + " value in CSV: '" + s + "'");
}

PlotSeries& series_for(ChartData& chart, const std::string& label) {
  for (auto& s : chart.series)
    if (s.label == label) return s;
  chart.series.push_back({label, {}});
  return chart.series.back();
}

ChartData shape_timeseries(const std::vector<std::vector<std::string>>& rows) {
  ChartData chart;
  chart.title = "total queue over time";
  chart.x_label = "time";
  chart.y_label = "total queue length";
  for (const auto& row : rows) {
    if (row.size() != 3) throw ValidationError("timeseries CSV row needs 3 fields");
    series_for(chart, row[0])
        .points.emplace_back(parse_field(row[1], "time"),
                             parse_field(row[2], "queue"));
  }
  return chart;
}

// Sweep axis labels look like "servers=40"; the value part becomes the x
// coordinate and the key part names the axis.
double axis_coordinate(const std::string& axis, std::string& axis_name) {
  const auto eq = axis.find('=');
  if (eq == std::string::npos)
    throw ValidationError("summary CSV axis '" + axis + "' has no value");
  axis_name = axis.substr(0, eq);
  return parse_field(axis.substr(eq + 1), "axis");
}

ChartData shape_summary(const std::vector<std::string>& header,
                        const std::vector<std::vector<std::string>>& rows) {
  ChartData chart;
  chart.y_label = "mean queue length";
  // Accumulate (policy, x) -> sum/count so replications average out.
  std::map<std::pair<std::string, double>, std::pair<double, int>> cells;
  std::vector<std::string> policy_order;
  std::string axis_name;
  bool swept = false;
  for (const auto& row : rows) {
    if (row.size() != header.size())
      throw ValidationError("summary CSV row width does not match its header");
    if (chart.title.empty()) chart.title = row[0];
    const std::string& policy = row[1];
    double x = 0.0;
    if (row[2] == "-") {
      x = parse_field(row[3], "replication");
    } else {
      x = axis_coordinate(row[2], axis_name);
      swept = true;
    }
    auto& cell = cells[{policy, x}];
    cell.first += parse_field(row[4], "mean_queue");
    ++cell.second;
    if (std::find(policy_order.begin(), policy_order.end(), policy) ==
        policy_order.end())
      policy_order.push_back(policy);
  }
  chart.x_label = swept ? axis_name : "replication";
  for (const auto& policy : policy_order) {
    PlotSeries& s = series_for(chart, policy);
    for (const auto& [key, cell] : cells)
      if (key.first == policy)
        s.points.emplace_back(key.second, cell.first / cell.second);
  }
  return chart;
}

std::string escape_text(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&apos;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string fmt(double v, const char* spec = "%.2f") {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

// Tick spacing from the 1-2-5 ladder, aiming for about six intervals.
double tick_step(double range) {
  const double raw = range / 6.0;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  const double norm = raw / mag;
  double mult = 10.0;
  if (norm <= 1.0) mult = 1.0;
  else if (norm <= 2.0) mult = 2.0;
  else if (norm <= 5.0) mult = 5.0;
  return mult * mag;
}

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c",
                                    "#ff7f0e", "#9467bd", "#8c564b"};
constexpr int kPaletteSize = 6;

}  // namespace

ChartData chart_from_csv(const std::string& csv_text) {
  std::istringstream in(csv_text);
  std::string line;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    auto fields = split_csv_line(line);
    if (header.empty())
      header = std::move(fields);
    else
      rows.push_back(std::move(fields));
  }
  if (header.empty()) throw ValidationError("no data to plot");
  if (rows.empty()) throw ValidationError("no data to plot");

  if (header == std::vector<std::string>{"policy", "t", "total_queue"})
    return shape_timeseries(rows);
  if (header.size() >= 5 && header[0] == "name" && header[1] == "policy" &&
      header[2] == "axis" && header[3] == "replication" &&
      header[4] == "mean_queue")
    return shape_summary(header, rows);
  throw ValidationError("unrecognized CSV header for plotting");
}

std::string render_line_chart(const ChartData& chart) {
  bool any = false;
  for (const auto& s : chart.series)
    if (!s.points.empty()) any = true;
  if (!any) throw ValidationError("no data to plot");

  double x_min = std::numeric_limits<double>::infinity();
  double x_max = -x_min, y_min = x_min, y_max = -x_min;
  for (const auto& s : chart.series)
    for (const auto& [x, y] : s.points) {
      x_min = std::min(x_min, x);
      x_max = std::max(x_max, x);
      y_min = std::min(y_min, y);
      y_max = std::max(y_max, y);
    }
  if (x_max <= x_min) { x_min -= 1.0; x_max += 1.0; }
  if (y_max <= y_min) { y_min -= 1.0; y_max += 1.0; }

  constexpr double kWidth = 960, kHeight = 540;
  constexpr double kLeft = 72, kRight = 24, kTop = 48, kBottom = 56;
  const double plot_w = kWidth - kLeft - kRight;
  const double plot_h = kHeight - kTop - kBottom;
  const auto sx = [&](double x) {
    return kLeft + (x - x_min) / (x_max - x_min) * plot_w;
  };
  const auto sy = [&](double y) {
    return kTop + plot_h - (y - y_min) / (y_max - y_min) * plot_h;
  };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth
      << "\" height=\"" << kHeight << "\" viewBox=\"0 0 " << kWidth << " "
      << kHeight << "\">\n";
  svg << "<rect width=\"" << kWidth << "\" height=\"" << kHeight
      << "\" fill=\"white\"/>\n";
  if (!chart.title.empty())
    svg << "<text x=\"" << kWidth / 2
        << "\" y=\"28\" text-anchor=\"middle\" font-family=\"sans-serif\" "
           "font-size=\"18\">"
        << escape_text(chart.title) << "</text>\n";

  // Grid and ticks.
  const double xs = tick_step(x_max - x_min);
  const double ys = tick_step(y_max - y_min);
  for (double t = std::ceil(x_min / xs) * xs; t <= x_max + 1e-9 * xs; t += xs) {
    const double px = sx(t);
    svg << "<line x1=\"" << fmt(px) << "\" y1=\"" << fmt(kTop) << "\" x2=\""
        << fmt(px) << "\" y2=\"" << fmt(kTop + plot_h)
        << "\" stroke=\"#e0e0e0\"/>\n";
    svg << "<text x=\"" << fmt(px) << "\" y=\"" << fmt(kTop + plot_h + 18)
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
           "font-size=\"12\">"
        << fmt(t, "%.6g") << "</text>\n";
  }
  for (double t = std::ceil(y_min / ys) * ys; t <= y_max + 1e-9 * ys; t += ys) {
    const double py = sy(t);
    svg << "<line x1=\"" << fmt(kLeft) << "\" y1=\"" << fmt(py) << "\" x2=\""
        << fmt(kLeft + plot_w) << "\" y2=\"" << fmt(py)
        << "\" stroke=\"#e0e0e0\"/>\n";
    svg << "<text x=\"" << fmt(kLeft - 8) << "\" y=\"" << fmt(py + 4)
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" "
           "font-size=\"12\">"
        << fmt(t, "%.6g") << "</text>\n";
  }
  svg << "<rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\"" << plot_w
      << "\" height=\"" << plot_h
      << "\" fill=\"none\" stroke=\"#404040\"/>\n";
  if (!chart.x_label.empty())
    svg << "<text x=\"" << kLeft + plot_w / 2 << "\" y=\"" << kHeight - 12
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
           "font-size=\"14\">"
        << escape_text(chart.x_label) << "</text>\n";
  if (!chart.y_label.empty())
    svg << "<text x=\"20\" y=\"" << kTop + plot_h / 2
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
           "font-size=\"14\" transform=\"rotate(-90 20 " << kTop + plot_h / 2
        << ")\">" << escape_text(chart.y_label) << "</text>\n";

  int color = 0;
  for (const auto& s : chart.series) {
    if (s.points.empty()) continue;
    auto pts = s.points;
    std::sort(pts.begin(), pts.end());
    const char* stroke = kPalette[color % kPaletteSize];
    if (pts.size() > 1) {
      svg << "<polyline fill=\"none\" stroke=\"" << stroke
          << "\" stroke-width=\"1.5\" points=\"";
      for (const auto& [x, y] : pts) svg << fmt(sx(x)) << "," << fmt(sy(y)) << " ";
      svg << "\"/>\n";
    }
    if (pts.size() <= 24)
      for (const auto& [x, y] : pts)
        svg << "<circle cx=\"" << fmt(sx(x)) << "\" cy=\"" << fmt(sy(y))
            << "\" r=\"3\" fill=\"" << stroke << "\"/>\n";
    ++color;
  }

  // Legend, top-right corner of the plot area.
  double ly = kTop + 16;
  color = 0;
  for (const auto& s : chart.series) {
    if (s.points.empty()) continue;
    const char* stroke = kPalette[color % kPaletteSize];
    const double lx = kLeft + plot_w - 150;
    svg << "<line x1=\"" << fmt(lx) << "\" y1=\"" << fmt(ly - 4) << "\" x2=\""
        << fmt(lx + 24) << "\" y2=\"" << fmt(ly - 4) << "\" stroke=\"" << stroke
        << "\" stroke-width=\"2\"/>\n";
    svg << "<text x=\"" << fmt(lx + 30) << "\" y=\"" << fmt(ly)
        << "\" font-family=\"sans-serif\" font-size=\"12\">"
        << escape_text(s.label) << "</text>\n";
    ly += 18;
    ++color;
  }

  svg << "</svg>\n";
  return svg.str();
}

}  // namespace stallsched
