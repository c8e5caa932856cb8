#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <variant>
#include <vector>

#include "stallsched/kernels.hpp"
#include "stallsched/model.hpp"

namespace stallsched {

// All maximal feasible configurations of one server, in ascending
// lexicographic order, plus the packed SoA matrix the scan kernels consume.
struct MaximalSet {
  std::vector<Configuration> configs;
  kern::ConfigMatrix matrix;
  // Config with the greatest total job count (lex-largest among ties); used
  // when every queue is empty. -1 when the set is empty.
  std::int32_t zero_queue_index = -1;
};

// Depth-first enumeration over per-type counts. Types whose demand does not
// fit alone in the server are pinned at count zero. Throws SizingError when
// the maximal set would exceed max_set_size or the feasible space is too
// large to walk.
MaximalSet enumerate_maximal_configs(const ResourceVector& capacity,
                                     const std::vector<ResourceVector>& demands,
                                     std::size_t max_set_size = 1'000'000);

struct SolverResult {
  Configuration config;  // feasible and nonzero
  double ratio = 1.0;    // certified fraction of the max weight, in (0, 1]
};

// Scan of the maximal set; exact (ratio 1). Ties by lexicographically
// largest counts. All-zero queues fall back to the zero-queue rule.
SolverResult max_weight_exhaustive(const MaximalSet& set, const QueueVector& q);

// Grid-aligned instance for the dynamic program. Everything is expressed in
// integer step units per resource.
struct DpGrid {
  std::vector<double> step;
  std::vector<std::int32_t> dims;                       // capacity in units
  std::vector<std::vector<std::int32_t>> demand_units;  // [type][resource]
  std::size_t cells = 0;
};

// Per-resource default step: the greatest value <= 0.1 that divides the
// capacity and every demand within 1e-9 (found by decimal scaling). nullopt
// when no common decimal grid exists.
std::optional<std::vector<double>> default_grid_step(
    const ResourceVector& capacity, const std::vector<ResourceVector>& demands);

// Validates alignment (each step divides its capacity and demands within
// 1e-9) and sizes the table. Throws ValidationError on misalignment,
// SizingError when the table exceeds max_cells.
DpGrid make_dp_grid(const ResourceVector& capacity,
                    const std::vector<ResourceVector>& demands,
                    const std::vector<double>& step,
                    std::size_t max_cells = std::size_t(1) << 22);

// Exact max-weight via the table recursion, then residual top-up so the
// returned configuration is maximal. Weight always equals the exhaustive
// optimum; the configuration may differ from the exhaustive pick on ties.
SolverResult max_weight_dp(const DpGrid& grid, const QueueVector& q);

// Single-type base fill (the type maximizing Q_j times its max-alone count)
// plus residual fill by decreasing Q_j / max_n(demand_jn / capacity_n).
// Certified ratio N_f / (R * (N_f + 1)) with N_f the smallest max-alone
// count. Throws ValidationError when some demand does not fit the server.
SolverResult max_weight_greedy(const ResourceVector& capacity,
                               const std::vector<ResourceVector>& demands,
                               const QueueVector& q);

struct ExhaustiveSolver {
  std::size_t max_set_size = 1'000'000;
  bool operator==(const ExhaustiveSolver&) const = default;
};
struct DpSolver {
  std::optional<std::vector<double>> grid_step;  // unset: default rule per server
  std::size_t max_cells = std::size_t(1) << 22;
  bool operator==(const DpSolver&) const = default;
};
struct GreedySolver {
  bool operator==(const GreedySolver&) const = default;
};
using SolverChoice = std::variant<ExhaustiveSolver, DpSolver, GreedySolver>;

// Immutable per-fleet solver: enumerations, grids, and greedy bounds are
// prepared once (servers deduplicated by capacity), after which solve() is
// pure and safe to call from concurrent replications.
class ConfigSolver {
 public:
  ConfigSolver(const SolverChoice& choice, const std::vector<ServerSpec>& servers,
               const std::vector<ResourceVector>& demands);

  SolverResult solve(std::int32_t server, const QueueVector& q) const;
  double certified_ratio(std::int32_t server) const;
  // True when a DP choice fell back to exhaustive (no grid, or table too big).
  bool using_fallback(std::int32_t server) const;
  const MaximalSet& maximal_set(std::int32_t server) const;

 private:
  struct Prepared {
    std::optional<MaximalSet> maximal;
    std::optional<DpGrid> grid;
    std::vector<std::int64_t> alone_counts;  // greedy: max count of each type alone
    double ratio = 1.0;
  };

  int kind_;  // index into SolverChoice alternatives
  std::vector<ResourceVector> demands_;
  std::vector<ServerSpec> unique_specs_;
  std::vector<std::int32_t> spec_index_;  // server id -> unique spec
  std::vector<Prepared> prepared_;
};

// Keyed by (capacity, demands) bytes; safe to share across threads once the
// simulations it serves have been set up.
class MaximalSetCache {
 public:
  const MaximalSet& get(const ResourceVector& capacity,
                        const std::vector<ResourceVector>& demands,
                        std::size_t max_set_size = 1'000'000);

 private:
  std::map<std::string, std::unique_ptr<MaximalSet>> entries_;
  std::mutex mu_;
};

}  // namespace stallsched
