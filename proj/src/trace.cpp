#include "stallsched/trace.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace stallsched {

namespace {

// Trims ASCII whitespace from both ends.
std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

bool parse_double(const std::string& field, double& out) {
  const std::string t = trim(field);
  if (t.empty()) return false;
  char* end = nullptr;
  out = std::strtod(t.c_str(), &end);
  return end == t.c_str() + t.size() && std::isfinite(out);
}

}  // namespace

TraceJobStream load_trace(const std::string& path, const TraceWindow& window,
                          BelowFloor mode) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open trace file: " + path);

  std::string line;
  if (!std::getline(in, line)) throw ValidationError("trace file is empty: " + path);
  if (trim(line) != "arrival_time,duration,cpu,mem")
    throw ValidationError("trace header must be arrival_time,duration,cpu,mem");

  TraceJobStream stream;
  constexpr double kFloor = 1.0 / 128.0;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    ++stream.stats.rows;
    std::stringstream row(line);
    std::string field;
    double vals[4];
    bool ok = true;
    for (int i = 0; i < 4; ++i) {
      if (!std::getline(row, field, ',') || !parse_double(field, vals[i])) ok = false;
    }
    if (ok && std::getline(row, field, ',')) ok = false;  // extra columns
    if (!ok || vals[0] < 0.0 || vals[2] < 0.0 || vals[3] < 0.0) {
      ++stream.stats.malformed;
      continue;
    }
    if (vals[1] <= 0.0) {
      ++stream.stats.nonpositive_duration;
      continue;
    }
    const auto type = map_type(vals[2], vals[3]);
    if (!type) {
      ++stream.stats.oversize_rejected;
      continue;
    }
    if (std::max(vals[2], vals[3]) < kFloor) {
      ++stream.stats.below_floor;
      if (mode == BelowFloor::Drop) continue;
    }
    stream.jobs.push_back({vals[0], *type, vals[1]});
  }

  std::stable_sort(stream.jobs.begin(), stream.jobs.end(),
                   [](const TraceJob& a, const TraceJob& b) { return a.time < b.time; });

  std::size_t keep = stream.jobs.size();
  if (window.time_limit) {
    keep = static_cast<std::size_t>(
        std::upper_bound(stream.jobs.begin(), stream.jobs.end(), *window.time_limit,
                         [](double t, const TraceJob& j) { return t < j.time; }) -
        stream.jobs.begin());
  }
  if (window.count) keep = std::min<std::size_t>(keep, *window.count);
  stream.jobs.resize(keep);

  std::array<double, kTraceTypeCount> total_duration{};
  for (const auto& job : stream.jobs) {
    ++stream.type_counts[static_cast<std::size_t>(job.type)];
    total_duration[static_cast<std::size_t>(job.type)] += job.duration;
  }
  for (int i = 0; i < kTraceTypeCount; ++i) {
    if (stream.type_counts[static_cast<std::size_t>(i)] > 0)
      stream.mean_duration[static_cast<std::size_t>(i)] =
          total_duration[static_cast<std::size_t>(i)] /
          static_cast<double>(stream.type_counts[static_cast<std::size_t>(i)]);
  }
  return stream;
}

std::vector<JobType> trace_job_types(const TraceJobStream& stream) {
  std::vector<JobType> types;
  types.reserve(kTraceTypeCount);
  for (int i = 0; i < kTraceTypeCount; ++i) {
    const double mean = stream.mean_duration[static_cast<std::size_t>(i)];
    JobType t;
    t.name = "size_2e-" + std::to_string(i);
    t.demand = {std::ldexp(1.0, -i)};
    t.service = Exponential{mean > 0.0 ? 1.0 / mean : 1.0};
    types.push_back(std::move(t));
  }
  return types;
}

}  // namespace stallsched
