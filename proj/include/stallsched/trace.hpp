#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "stallsched/model.hpp"

namespace stallsched {

inline constexpr int kTraceTypeCount = 8;

struct TraceJob {
  double time = 0.0;
  std::int32_t type = 0;  // index i, job size 2^-i
  double duration = 0.0;

  bool operator==(const TraceJob&) const = default;
};

// Smallest power-of-two size 2^-i (i in 0..7) that covers max(cpu, mem);
// demands below the 2^-7 floor (including zero) clamp to the floor.
// Returns nullopt when the demand exceeds a whole server.
inline std::optional<std::int32_t> map_type(double cpu, double mem) {
  const double m = std::max(cpu, mem);
  if (m > 1.0) return std::nullopt;
  for (int i = kTraceTypeCount - 1; i > 0; --i)
    if (std::ldexp(1.0, -i) >= m) return i;
  return 0;
}

enum class BelowFloor { Clamp, Drop };

// Prefix window over the sorted stream: first `count` jobs and/or jobs with
// arrival time <= time_limit. Unset fields leave that dimension open.
struct TraceWindow {
  std::optional<std::uint64_t> count;
  std::optional<double> time_limit;

  bool operator==(const TraceWindow&) const = default;
};

struct TraceStats {
  std::uint64_t rows = 0;
  std::uint64_t malformed = 0;
  std::uint64_t oversize_rejected = 0;
  std::uint64_t nonpositive_duration = 0;
  std::uint64_t below_floor = 0;  // clamped or dropped depending on the mode
};

struct TraceJobStream {
  std::vector<TraceJob> jobs;  // sorted by arrival time
  TraceStats stats;
  std::array<std::uint64_t, kTraceTypeCount> type_counts{};
  std::array<double, kTraceTypeCount> mean_duration{};  // 0 for unseen types
};

// CSV with header `arrival_time,duration,cpu,mem`. Rows with unparsable
// fields or nonpositive durations are dropped and counted, never fatal.
TraceJobStream load_trace(const std::string& path, const TraceWindow& window = {},
                          BelowFloor mode = BelowFloor::Clamp);

// The eight dyadic job types for unit-capacity servers. Service laws are
// exponential with the stream's per-type empirical mean duration (trace
// replay uses recorded durations; the laws matter only for token lifetimes
// and as documentation of the workload).
std::vector<JobType> trace_job_types(const TraceJobStream& stream);

}  // namespace stallsched
