#pragma once

#include <vector>

namespace stallsched::lp {

enum class Status { Optimal, Infeasible, Unbounded };

enum class Rel { Le, Eq, Ge };

struct Constraint {
  std::vector<double> a;
  Rel rel = Rel::Le;
  double b = 0.0;
};

struct Result {
  Status status = Status::Infeasible;
  double objective = 0.0;
  std::vector<double> x;
};

// Dense two-phase tableau simplex, maximizing c.x over a.x {<=,=,>=} b,
// x >= 0. Bland's rule on both pivots, so it terminates on degenerate
// instances. feas_tol bounds the accepted phase-1 residual (scaled by the
// largest right-hand side).
Result maximize(const std::vector<double>& c, std::vector<Constraint> rows,
                double feas_tol = 1e-9);

}  // namespace stallsched::lp
