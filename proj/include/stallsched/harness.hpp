#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "stallsched/capacity.hpp"
#include "stallsched/sim.hpp"
#include "stallsched/spec_file.hpp"

namespace stallsched {

// Experiment spec resolved into engine inputs: concrete job types, a ready
// arrival process, and the capacity diagnostics the CLI prints.
struct MaterializedWorkload {
  std::vector<JobType> types;
  ArrivalProcess arrivals;
  std::vector<double> lambda;  // per-type job arrival rate; empty for traces
  double t_star = 0.0;         // boundary scale along the direction; 0 for traces
};

// Resolves the workload section against the capacity region (intensity form
// and batch rates need t_star). Trace laws load and window the trace here.
MaterializedWorkload materialize_workload(const ExperimentSpec& spec,
                                          MaximalSetCache& cache);

struct ReplicationResult {
  std::uint32_t replication = 0;
  std::uint64_t seed = 0;
  RunReport report;
};

struct PolicyResult {
  std::string policy;
  std::vector<ReplicationResult> replications;
  double mean_queue = 0.0;  // arithmetic mean of the replication means
};

// One sweep point (or the single point of a plain run, axis "-").
struct AxisPointResult {
  std::string axis;
  std::vector<PolicyResult> policies;
};

struct ExperimentResult {
  std::string name;
  std::vector<AxisPointResult> points;
};

// Runs every (policy, replication) combination of the spec's single point.
// Replication i uses seed + i. Work is spread over up to STALLSCHED_THREADS
// threads (default: hardware concurrency); results merge in spec order, so
// output is independent of scheduling.
ExperimentResult run_experiment(const ExperimentSpec& spec);

// Reruns the spec at each axis value ("servers" resizes a homogeneous fleet
// and rescales arrival rates with it; "zeta" moves the workload along its
// direction). One AxisPointResult per value, labeled "<axis>=<value>".
ExperimentResult run_sweep(const ExperimentSpec& spec, const SweepPlan& plan);

// Event budget for one policy: per-policy override, else the auto rule for
// trace runs (twice the windowed job count, doubled again for g16 because
// sampling events share the budget), else the experiment budget.
std::uint64_t effective_budget(const ExperimentSpec& spec, const PolicyEntry& entry,
                               std::size_t trace_jobs);

// Schema: name,policy,axis,replication,mean_queue,max_queue,stall_fraction,
// resets,seed. max_queue is the post-warmup maximum, matching mean_queue's
// measurement window.
std::string summary_csv(const ExperimentResult& result);

// Schema: policy,t,total_queue. All policies of the point, in spec order.
std::string timeseries_csv(const AxisPointResult& point, std::uint32_t replication);

// Writes summary.csv plus timeseries_<rep>.csv files under dir (sweep points
// nest in "<axis>=<value>/" subdirectories). Returns the paths written.
std::vector<std::string> write_outputs(const ExperimentResult& result,
                                       const std::string& dir);

}  // namespace stallsched
