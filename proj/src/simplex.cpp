#include "stallsched/simplex.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace stallsched::lp {

namespace {
constexpr double kPivotEps = 1e-9;
}

Result maximize(const std::vector<double>& c, std::vector<Constraint> rows,
                double feas_tol) {
  const std::size_t n = c.size();
  const std::size_t m = rows.size();
  double b_scale = 1.0;
  for (auto& r : rows) {
    if (r.a.size() != n) throw std::invalid_argument("simplex: ragged constraint row");
    if (r.b < 0.0) {
      for (double& v : r.a) v = -v;
      r.b = -r.b;
      r.rel = r.rel == Rel::Le ? Rel::Ge : (r.rel == Rel::Ge ? Rel::Le : Rel::Eq);
    }
    b_scale = std::max(b_scale, r.b);
  }

  std::size_t num_slack = 0, num_artif = 0;
  for (const auto& r : rows) {
    if (r.rel != Rel::Eq) ++num_slack;
    if (r.rel != Rel::Le) ++num_artif;
  }
  const std::size_t total = n + num_slack + num_artif;
  const std::size_t rhs = total;  // rhs column index

  std::vector<std::vector<double>> t(m, std::vector<double>(total + 1, 0.0));
  std::vector<int> basis(m, -1);
  std::vector<bool> artificial(total, false);
  std::size_t next_slack = n;
  std::size_t next_artif = n + num_slack;
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) t[i][j] = rows[i].a[j];
    t[i][rhs] = rows[i].b;
    switch (rows[i].rel) {
      case Rel::Le:
        t[i][next_slack] = 1.0;
        basis[i] = static_cast<int>(next_slack++);
        break;
      case Rel::Ge:
        t[i][next_slack++] = -1.0;
        [[fallthrough]];
      case Rel::Eq:
        t[i][next_artif] = 1.0;
        artificial[next_artif] = true;
        basis[i] = static_cast<int>(next_artif++);
        break;
    }
  }

  auto pivot = [&](std::vector<double>& obj, std::size_t prow, std::size_t pcol) {
    const double p = t[prow][pcol];
    for (double& v : t[prow]) v /= p;
    t[prow][pcol] = 1.0;  // kill roundoff on the pivot itself
    for (std::size_t i = 0; i < m; ++i) {
      if (i == prow) continue;
      const double f = t[i][pcol];
      if (f == 0.0) continue;
      for (std::size_t j = 0; j <= total; ++j) t[i][j] -= f * t[prow][j];
      t[i][pcol] = 0.0;
    }
    const double f = obj[pcol];
    if (f != 0.0) {
      for (std::size_t j = 0; j <= total; ++j) obj[j] -= f * t[prow][j];
      obj[pcol] = 0.0;
    }
    basis[prow] = static_cast<int>(pcol);
  };

  // Bland: lowest eligible entering column, lowest basic index on ratio ties.
  auto run = [&](std::vector<double>& obj, bool allow_artificial) -> bool {
    while (true) {
      std::size_t pcol = total;
      for (std::size_t j = 0; j < total; ++j) {
        if (!allow_artificial && artificial[j]) continue;
        if (obj[j] > kPivotEps) {
          pcol = j;
          break;
        }
      }
      if (pcol == total) return true;
      std::size_t prow = m;
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < m; ++i) {
        if (t[i][pcol] <= kPivotEps) continue;
        const double ratio = std::max(t[i][rhs], 0.0) / t[i][pcol];
        if (ratio < best - 1e-12 ||
            (ratio < best + 1e-12 && prow < m && basis[i] < basis[prow])) {
          best = ratio;
          prow = i;
        }
      }
      if (prow == m) return false;  // unbounded
      pivot(obj, prow, pcol);
    }
  };

  Result res;
  if (num_artif > 0) {
    // Phase 1: maximize minus the sum of artificials.
    std::vector<double> obj(total + 1, 0.0);
    for (std::size_t j = 0; j < total; ++j)
      if (artificial[j]) obj[j] = -1.0;
    for (std::size_t i = 0; i < m; ++i) {
      if (basis[i] >= 0 && artificial[static_cast<std::size_t>(basis[i])]) {
        for (std::size_t j = 0; j <= total; ++j) obj[j] += t[i][j];
      }
    }
    if (!run(obj, true)) throw std::logic_error("simplex: phase 1 unbounded");
    const double infeasibility = -obj[rhs];  // objective value = -obj[rhs]
    if (std::abs(infeasibility) > feas_tol * b_scale) {
      res.status = Status::Infeasible;
      return res;
    }
    // Push surviving artificials out of the basis where possible.
    for (std::size_t i = 0; i < m; ++i) {
      if (basis[i] < 0 || !artificial[static_cast<std::size_t>(basis[i])]) continue;
      for (std::size_t j = 0; j < total; ++j) {
        if (artificial[j]) continue;
        if (std::abs(t[i][j]) > kPivotEps) {
          pivot(obj, i, j);
          break;
        }
      }
    }
  }

  std::vector<double> obj(total + 1, 0.0);
  for (std::size_t j = 0; j < n; ++j) obj[j] = c[j];
  for (std::size_t i = 0; i < m; ++i) {
    const int b = basis[i];
    if (b >= 0 && obj[static_cast<std::size_t>(b)] != 0.0) {
      const double f = obj[static_cast<std::size_t>(b)];
      for (std::size_t j = 0; j <= total; ++j) obj[j] -= f * t[i][j];
      obj[static_cast<std::size_t>(b)] = 0.0;
    }
  }
  if (!run(obj, false)) {
    res.status = Status::Unbounded;
    return res;
  }

  res.status = Status::Optimal;
  res.objective = -obj[rhs];
  res.x.assign(n, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    if (basis[i] >= 0 && static_cast<std::size_t>(basis[i]) < n)
      res.x[static_cast<std::size_t>(basis[i])] = std::max(t[i][rhs], 0.0);
  }
  return res;
}

}  // namespace stallsched::lp
