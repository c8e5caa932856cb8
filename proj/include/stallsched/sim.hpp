#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <variant>
#include <vector>

#include "stallsched/model.hpp"
#include "stallsched/policy.hpp"
#include "stallsched/trace.hpp"

namespace stallsched {

struct PoissonArrivals {
  std::vector<double> rates;  // per type

  bool operator==(const PoissonArrivals&) const = default;
};

// Independent per-type renewal streams with log-normal gaps, mean-matched so
// the long-run rate of type j is rates[j].
struct LogNormalArrivals {
  std::vector<double> rates;
  double sigma = 1.0;

  bool operator==(const LogNormalArrivals&) const = default;
};

struct BatchVector {
  std::vector<std::int32_t> counts;
  double probability = 0.0;

  bool operator==(const BatchVector&) const = default;
};

// One Poisson stream of batch instants; each batch brings counts[j] jobs of
// every type j, the vector drawn from the support. A batch is one event.
struct BatchArrivals {
  double rate = 0.0;
  std::vector<BatchVector> support;

  bool operator==(const BatchArrivals&) const = default;
};

// Replay of a recorded stream; service times are the recorded durations.
struct TraceArrivals {
  std::vector<TraceJob> jobs;

  bool operator==(const TraceArrivals&) const = default;
};

using ArrivalProcess =
    std::variant<PoissonArrivals, LogNormalArrivals, BatchArrivals, TraceArrivals>;

struct RunSpec {
  std::vector<ServerSpec> servers;
  std::vector<JobType> types;
  ArrivalProcess arrivals;
  PolicyConfig policy;
  std::uint64_t event_budget = 200000;
  double warmup_fraction = 0.25;
  std::uint64_t seed = 1;
  // Overrides the seed for the G16 sampling streams only; arrivals and
  // service draws are untouched by construction.
  std::optional<std::uint64_t> sampling_seed;
  QueueVector initial_queues;  // empty means all zero
  std::size_t timeseries_points = 512;
};

struct TimeSeriesPoint {
  double t = 0.0;
  std::int64_t total_queue = 0;

  bool operator==(const TimeSeriesPoint&) const = default;
};

struct EventCounts {
  std::uint64_t arrivals = 0;  // individual jobs, including batch members
  std::uint64_t batches = 0;
  std::uint64_t completions = 0;
  std::uint64_t samples = 0;
  std::uint64_t token_expiries = 0;

  bool operator==(const EventCounts&) const = default;
};

struct RunReport {
  double t_end = 0.0;
  double t_warmup = 0.0;
  double mean_queue = 0.0;  // time average of the total queue after warmup
  std::vector<double> per_type_mean_queue;
  std::int64_t max_total_queue = 0;              // over the whole run
  std::int64_t max_total_queue_post_warmup = 0;  // after the warmup cutoff
  double mean_in_service = 0.0;
  double stall_fraction = 0.0;  // time-averaged stalled-server fraction
  std::uint64_t resets = 0;     // configuration adoptions after t = 0
  std::uint64_t stall_evaluations = 0;
  std::uint64_t processed_events = 0;
  EventCounts events;
  std::vector<std::uint64_t> per_type_arrivals;
  // Snapshots and windowed means at the event-count quartiles.
  std::array<std::int64_t, 4> queue_at_quarter{};
  std::array<double, 4> quarter_mean_queue{};
  std::int64_t queue_at_end = 0;
  std::vector<TimeSeriesPoint> timeseries;
};

// Executes one fully deterministic run: processes spec.event_budget events
// (fewer if the event heap drains first). Throws ValidationError on bad
// input and InvariantViolation with a state digest on internal corruption.
RunReport run(const RunSpec& spec);

}  // namespace stallsched
