#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "stallsched/sim.hpp"

namespace stallsched {

// Workload placement. Intensity form scales a direction onto the zeta
// fraction of the capacity boundary; the explicit form gives arrival rates
// directly. Batch and trace arrival laws carry their own job mix, so they
// use Intensity without a direction (batch) or no workload section (trace).
struct IntensityWorkload {
  double zeta = 0.0;
  ResourceVector direction;  // per type; empty for batch laws

  bool operator==(const IntensityWorkload&) const = default;
};

struct ExplicitWorkload {
  std::vector<double> lambda;  // per type

  bool operator==(const ExplicitWorkload&) const = default;
};

struct NoWorkload {
  bool operator==(const NoWorkload&) const = default;
};

using WorkloadSpec = std::variant<NoWorkload, IntensityWorkload, ExplicitWorkload>;

// Arrival law shapes. Rates are filled in later from the workload, so these
// carry only the law-specific knobs.
struct PoissonLaw {
  bool operator==(const PoissonLaw&) const = default;
};

struct LogNormalLaw {
  double sigma = 1.0;

  bool operator==(const LogNormalLaw&) const = default;
};

struct BatchLaw {
  std::optional<double> rate;  // unset: derived from the workload intensity
  std::vector<BatchVector> support;

  bool operator==(const BatchLaw&) const = default;
};

struct TraceLaw {
  std::string path;
  TraceWindow window;
  BelowFloor below_floor = BelowFloor::Clamp;

  bool operator==(const TraceLaw&) const = default;
};

using ArrivalLaw = std::variant<PoissonLaw, LogNormalLaw, BatchLaw, TraceLaw>;

struct PolicyEntry {
  std::string name;  // row label in outputs; unique within the experiment
  PolicyConfig config;
  std::optional<std::uint64_t> event_budget;  // overrides the experiment budget

  bool operator==(const PolicyEntry&) const = default;
};

// Optional embedded sweep so a file fully describes one figure; the sweep
// subcommand can override axis and values from the command line.
struct SweepPlan {
  std::string axis;  // "servers" or "zeta"
  std::vector<double> values;

  bool operator==(const SweepPlan&) const = default;
};

struct ExperimentSpec {
  std::string name;
  std::vector<std::string> resource_names;  // optional labels, length R when set
  std::vector<ServerSpec> servers;
  std::vector<JobType> types;  // empty for trace laws (types come from the trace)
  WorkloadSpec workload;
  ArrivalLaw arrivals;
  std::vector<PolicyEntry> policies;
  std::uint64_t event_budget = 200000;
  bool auto_budget = false;  // trace only: budget derived from the window size
  std::uint32_t replications = 1;
  std::uint64_t seed = 1;
  double warmup_fraction = 0.25;
  std::uint32_t timeseries_points = 512;
  std::string output_dir;  // empty: out/<name>
  std::optional<SweepPlan> sweep;

  bool operator==(const ExperimentSpec&) const = default;
};

// Parses the sectioned key=value format documented in the README. Throws
// ValidationError with a line number on malformed input. The result has
// passed validate_experiment_spec.
ExperimentSpec parse_spec(const std::string& text);
ExperimentSpec load_spec_file(const std::string& path);

// Inverse of parse_spec: parse_spec(serialize_spec(s)) == s. Doubles are
// printed shortest-round-trip so values survive exactly.
std::string serialize_spec(const ExperimentSpec& spec);

// Structural checks that need no capacity math: dimensions agree, laws and
// policies are self-consistent, the workload form matches the arrival law.
void validate_experiment_spec(const ExperimentSpec& spec);

// Shortest decimal that parses back to exactly the same double.
std::string format_double(double value);

}  // namespace stallsched
