#include "stallsched/solver.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <numeric>

namespace stallsched {

namespace {

void validate_instance(const ResourceVector& capacity,
                       const std::vector<ResourceVector>& demands) {
  for (double c : capacity) {
    if (!(c >= 0.0) || !std::isfinite(c))
      throw ValidationError("server capacity must be nonnegative and finite");
  }
  for (const auto& d : demands) {
    if (d.size() != capacity.size())
      throw ValidationError("demand vector length does not match resource count");
    double mx = 0.0;
    for (double v : d) {
      if (!(v >= 0.0) || !std::isfinite(v))
        throw ValidationError("job demand must be nonnegative and finite");
      mx = std::max(mx, v);
    }
    if (mx <= kFeasibilitySlack)
      throw ValidationError("job demand must be positive in at least one resource");
  }
}

// How many extra copies of demand d fit on top of `used`.
std::int64_t max_additional(const ResourceVector& capacity, const ResourceVector& used,
                            const ResourceVector& d) {
  std::int64_t m = std::numeric_limits<std::int64_t>::max();
  for (std::size_t n = 0; n < capacity.size(); ++n) {
    if (d[n] <= 0.0) continue;
    const double room = capacity[n] - used[n] + kFeasibilitySlack;
    if (room < 0.0) return 0;
    m = std::min(m, static_cast<std::int64_t>(std::floor(room / d[n])));
  }
  return std::max<std::int64_t>(m, 0);
}

void finish_set(MaximalSet& set, std::int32_t num_types) {
  set.matrix = kern::pack_configs(set.configs, num_types);
  std::int64_t best = -1;
  for (std::int32_t i = 0; i < static_cast<std::int32_t>(set.configs.size()); ++i) {
    std::int64_t total = 0;
    for (std::int32_t c : set.configs[i]) total += c;
    if (total >= best) {  // later index wins: ascending lex order makes it lex-largest
      best = total;
      set.zero_queue_index = i;
    }
  }
}

bool all_zero(const QueueVector& q) {
  return std::all_of(q.begin(), q.end(), [](std::int64_t v) { return v == 0; });
}

}  // namespace

MaximalSet enumerate_maximal_configs(const ResourceVector& capacity,
                                     const std::vector<ResourceVector>& demands,
                                     std::size_t max_set_size) {
  validate_instance(capacity, demands);
  const std::size_t J = demands.size();
  const std::size_t R = capacity.size();
  MaximalSet set;
  if (J == 0) {
    finish_set(set, 0);
    return set;
  }

  constexpr std::size_t kNodeCap = 50'000'000;
  std::size_t visited = 0;
  Configuration cur(J, 0);
  std::vector<ResourceVector> used_at(J + 1, ResourceVector(R, 0.0));

  auto dfs = [&](auto&& self, std::size_t j) -> void {
    if (++visited > kNodeCap)
      throw SizingError("feasible configuration space too large to enumerate");
    if (j == J) {
      const ResourceVector& used = used_at[J];
      for (std::size_t jj = 0; jj < J; ++jj) {
        if (max_additional(capacity, used, demands[jj]) >= 1) return;  // not maximal
      }
      if (set.configs.size() >= max_set_size)
        throw SizingError("maximal configuration set exceeds its cap (" +
                          std::to_string(max_set_size) + ")");
      set.configs.push_back(cur);
      return;
    }
    const ResourceVector& base = used_at[j];
    const ResourceVector& d = demands[j];
    const std::int64_t maxc = max_additional(capacity, base, d);
    for (std::int64_t c = 0; c <= maxc; ++c) {
      ResourceVector& nxt = used_at[j + 1];
      for (std::size_t n = 0; n < R; ++n) nxt[n] = base[n] + c * d[n];
      cur[j] = static_cast<std::int32_t>(c);
      self(self, j + 1);
    }
    cur[j] = 0;
  };
  dfs(dfs, 0);

  finish_set(set, static_cast<std::int32_t>(J));
  return set;
}

SolverResult max_weight_exhaustive(const MaximalSet& set, const QueueVector& q) {
  if (set.configs.empty())
    throw ValidationError("server has no nonzero feasible configuration");
  if (static_cast<std::int32_t>(q.size()) != set.matrix.num_types)
    throw std::invalid_argument("max_weight_exhaustive: queue vector length mismatch");
  if (all_zero(q)) return {set.configs[set.zero_queue_index], 1.0};
  const kern::ScanResult r = kern::weight_scan(set.matrix, q);
  return {set.configs[r.index], 1.0};
}

std::optional<std::vector<double>> default_grid_step(
    const ResourceVector& capacity, const std::vector<ResourceVector>& demands) {
  const std::size_t R = capacity.size();
  std::vector<double> step(R, 0.1);
  for (std::size_t n = 0; n < R; ++n) {
    std::vector<double> values;
    if (capacity[n] > kFeasibilitySlack) values.push_back(capacity[n]);
    for (const auto& d : demands)
      if (d[n] > kFeasibilitySlack) values.push_back(d[n]);
    if (values.empty()) continue;  // nothing constrains this resource

    // Find a decimal scale at which every value is an integer, then take the
    // gcd and shrink it to the greatest divisor <= 0.1.
    std::int64_t g = 0;
    bool found = false;
    for (double scale = 1.0; scale <= 1e9 + 0.5; scale *= 10.0) {
      bool ok = true;
      std::int64_t gg = 0;
      for (double v : values) {
        const double sv = v * scale;
        const double rv = std::round(sv);
        if (std::abs(sv - rv) > 1e-6 + sv * 1e-12 || rv < 1.0) {
          ok = false;
          break;
        }
        gg = std::gcd(gg, static_cast<std::int64_t>(rv));
      }
      if (ok) {
        g = gg;
        const double g_real = static_cast<double>(g) / scale;
        const double k = std::ceil(g_real / 0.1 - 1e-9);
        step[n] = g_real / std::max(k, 1.0);
        found = true;
        break;
      }
    }
    if (!found) return std::nullopt;
  }
  return step;
}

DpGrid make_dp_grid(const ResourceVector& capacity,
                    const std::vector<ResourceVector>& demands,
                    const std::vector<double>& step, std::size_t max_cells) {
  validate_instance(capacity, demands);
  const std::size_t R = capacity.size();
  if (step.size() != R)
    throw ValidationError("grid step must have one entry per resource");
  DpGrid g;
  g.step = step;
  g.dims.resize(R);
  g.cells = 1;
  for (std::size_t n = 0; n < R; ++n) {
    if (!(step[n] > 0.0) || !std::isfinite(step[n]))
      throw ValidationError("grid step must be positive and finite");
    const double units = std::round(capacity[n] / step[n]);
    if (std::abs(capacity[n] - units * step[n]) > 1e-9)
      throw ValidationError("grid step does not divide server capacity");
    g.dims[n] = static_cast<std::int32_t>(units);
    const std::size_t width = static_cast<std::size_t>(g.dims[n]) + 1;
    if (g.cells > max_cells / width)
      throw SizingError("dynamic-programming table exceeds its cell cap");
    g.cells *= width;
  }
  g.demand_units.reserve(demands.size());
  for (const auto& d : demands) {
    std::vector<std::int32_t> u(R);
    for (std::size_t n = 0; n < R; ++n) {
      const double units = std::round(d[n] / step[n]);
      if (std::abs(d[n] - units * step[n]) > 1e-9)
        throw ValidationError("grid step does not divide a job demand");
      u[n] = static_cast<std::int32_t>(units);
    }
    g.demand_units.push_back(std::move(u));
  }
  return g;
}

SolverResult max_weight_dp(const DpGrid& grid, const QueueVector& q) {
  const std::size_t J = grid.demand_units.size();
  const std::size_t R = grid.dims.size();
  if (q.size() != J) throw std::invalid_argument("max_weight_dp: queue vector length mismatch");

  // All-empty queues switch the objective to total job count, which realizes
  // the zero-queue rule (a count-maximal configuration is maximal).
  const bool zero_rule = all_zero(q);
  std::vector<std::int64_t> value(J);
  for (std::size_t j = 0; j < J; ++j) value[j] = zero_rule ? 1 : q[j];

  std::vector<std::size_t> stride(R, 1);
  for (std::size_t n = R; n-- > 1;)
    stride[n - 1] = stride[n] * (static_cast<std::size_t>(grid.dims[n]) + 1);
  std::vector<std::size_t> offset(J, 0);
  for (std::size_t j = 0; j < J; ++j)
    for (std::size_t n = 0; n < R; ++n)
      offset[j] += static_cast<std::size_t>(grid.demand_units[j][n]) * stride[n];

  std::vector<std::int64_t> table(grid.cells, 0);
  std::vector<std::int16_t> choice(grid.cells, -1);
  std::vector<std::int32_t> coords(R, 0);
  for (std::size_t idx = 0; idx < grid.cells; ++idx) {
    std::int64_t best = 0;
    std::int16_t bj = -1;
    for (std::size_t j = 0; j < J; ++j) {
      bool fits = true;
      for (std::size_t n = 0; n < R; ++n) {
        if (grid.demand_units[j][n] > coords[n]) {
          fits = false;
          break;
        }
      }
      if (!fits) continue;
      const std::int64_t cand = table[idx - offset[j]] + value[j];
      if (cand > best) {
        best = cand;
        bj = static_cast<std::int16_t>(j);
      }
    }
    table[idx] = best;
    choice[idx] = bj;
    for (std::size_t n = R; n-- > 0;) {
      if (++coords[n] <= grid.dims[n]) break;
      coords[n] = 0;
    }
  }

  Configuration k(J, 0);
  std::size_t idx = grid.cells - 1;
  while (choice[idx] >= 0) {
    const std::int16_t j = choice[idx];
    ++k[j];
    idx -= offset[j];
  }

  // Residual top-up: only zero-value types can still fit (otherwise the
  // optimum would be exceeded), so the weight is unchanged and the returned
  // configuration wastes no schedulable slot.
  std::vector<std::int64_t> resid(R);
  for (std::size_t n = 0; n < R; ++n) {
    std::int64_t used = 0;
    for (std::size_t j = 0; j < J; ++j)
      used += static_cast<std::int64_t>(k[j]) * grid.demand_units[j][n];
    resid[n] = grid.dims[n] - used;
  }
  for (std::size_t j = 0; j < J; ++j) {
    while (true) {
      bool fits = false;
      for (std::size_t n = 0; n < R; ++n) {
        if (grid.demand_units[j][n] > 0) fits = true;
        if (grid.demand_units[j][n] > resid[n]) {
          fits = false;
          break;
        }
      }
      if (!fits) break;
      ++k[j];
      for (std::size_t n = 0; n < R; ++n) resid[n] -= grid.demand_units[j][n];
    }
  }

  bool nonzero = std::any_of(k.begin(), k.end(), [](std::int32_t c) { return c > 0; });
  if (!nonzero) throw ValidationError("server has no nonzero feasible configuration");
  return {k, 1.0};
}

SolverResult max_weight_greedy(const ResourceVector& capacity,
                               const std::vector<ResourceVector>& demands,
                               const QueueVector& q) {
  validate_instance(capacity, demands);
  const std::size_t J = demands.size();
  const std::size_t R = capacity.size();
  if (q.size() != J)
    throw std::invalid_argument("max_weight_greedy: queue vector length mismatch");
  if (J == 0) throw ValidationError("greedy solver needs at least one job type");

  const ResourceVector zero(R, 0.0);
  std::vector<std::int64_t> alone(J);
  for (std::size_t j = 0; j < J; ++j) {
    alone[j] = max_additional(capacity, zero, demands[j]);
    if (alone[j] == 0)
      throw ValidationError("greedy solver requires every job type to fit the server");
  }
  const std::int64_t n_f = *std::min_element(alone.begin(), alone.end());
  const bool zero_rule = all_zero(q);

  std::size_t star = 0;
  std::int64_t vbest = -1;
  for (std::size_t j = 0; j < J; ++j) {
    const std::int64_t v = zero_rule ? alone[j] : q[j] * alone[j];
    if (v > vbest) {
      vbest = v;
      star = j;
    }
  }

  Configuration k(J, 0);
  k[star] = static_cast<std::int32_t>(alone[star]);
  ResourceVector used(R, 0.0);
  for (std::size_t n = 0; n < R; ++n) used[n] = alone[star] * demands[star][n];

  // Relative value: queue length over the normalized bottleneck demand.
  std::vector<double> relvalue(J, 0.0);
  for (std::size_t j = 0; j < J; ++j) {
    double maxw = 0.0;
    for (std::size_t n = 0; n < R; ++n) {
      if (capacity[n] > kFeasibilitySlack)
        maxw = std::max(maxw, demands[j][n] / capacity[n]);
    }
    relvalue[j] = zero_rule ? static_cast<double>(alone[j])
                            : static_cast<double>(q[j]) / maxw;
  }
  std::vector<std::size_t> order;
  for (std::size_t j = 0; j < J; ++j)
    if (j != star) order.push_back(j);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (relvalue[a] != relvalue[b]) return relvalue[a] > relvalue[b];
    return a < b;
  });
  for (std::size_t j : order) {
    const std::int64_t add = max_additional(capacity, used, demands[j]);
    if (add <= 0) continue;
    k[j] += static_cast<std::int32_t>(add);
    for (std::size_t n = 0; n < R; ++n) used[n] += add * demands[j][n];
  }

  const double ratio =
      static_cast<double>(n_f) / (static_cast<double>(R) * static_cast<double>(n_f + 1));
  return {k, ratio};
}

ConfigSolver::ConfigSolver(const SolverChoice& choice, const std::vector<ServerSpec>& servers,
                           const std::vector<ResourceVector>& demands)
    : kind_(static_cast<int>(choice.index())), demands_(demands) {
  if (servers.empty()) throw ValidationError("fleet has no servers");
  for (const auto& s : servers) {
    std::int32_t found = -1;
    for (std::size_t i = 0; i < unique_specs_.size(); ++i) {
      if (unique_specs_[i].capacity == s.capacity) {
        found = static_cast<std::int32_t>(i);
        break;
      }
    }
    if (found < 0) {
      unique_specs_.push_back(s);
      found = static_cast<std::int32_t>(unique_specs_.size()) - 1;
    }
    spec_index_.push_back(found);
  }

  prepared_.resize(unique_specs_.size());
  for (std::size_t i = 0; i < unique_specs_.size(); ++i) {
    const ResourceVector& cap = unique_specs_[i].capacity;
    Prepared& p = prepared_[i];
    if (const auto* ex = std::get_if<ExhaustiveSolver>(&choice)) {
      p.maximal = enumerate_maximal_configs(cap, demands_, ex->max_set_size);
      if (p.maximal->configs.empty())
        throw ValidationError("a server fits no job type");
    } else if (const auto* dp = std::get_if<DpSolver>(&choice)) {
      std::optional<std::vector<double>> step = dp->grid_step;
      if (step && step->size() != cap.size())
        throw ValidationError("grid step must have one entry per resource");
      if (!step) step = default_grid_step(cap, demands_);
      bool built = false;
      if (step) {
        try {
          p.grid = make_dp_grid(cap, demands_, *step, dp->max_cells);
          built = true;
        } catch (const SizingError&) {
          // fall back to exhaustive below
        } catch (const ValidationError&) {
          if (dp->grid_step) throw;  // explicit misaligned step is a hard error
        }
      }
      if (built) {
        bool any_fits = false;
        for (const auto& u : p.grid->demand_units) {
          bool fits = true;
          for (std::size_t n = 0; n < cap.size(); ++n)
            if (u[n] > p.grid->dims[n]) fits = false;
          if (fits) any_fits = true;
        }
        if (!any_fits) throw ValidationError("a server fits no job type");
      } else {
        p.grid.reset();
        p.maximal = enumerate_maximal_configs(cap, demands_);
        if (p.maximal->configs.empty())
          throw ValidationError("a server fits no job type");
      }
    } else {
      const ResourceVector zero(cap.size(), 0.0);
      p.alone_counts.resize(demands_.size());
      std::int64_t n_f = std::numeric_limits<std::int64_t>::max();
      for (std::size_t j = 0; j < demands_.size(); ++j) {
        p.alone_counts[j] = max_additional(cap, zero, demands_[j]);
        if (p.alone_counts[j] == 0)
          throw ValidationError("greedy solver requires every job type to fit every server");
        n_f = std::min(n_f, p.alone_counts[j]);
      }
      p.ratio = static_cast<double>(n_f) /
                (static_cast<double>(cap.size()) * static_cast<double>(n_f + 1));
    }
  }
}

SolverResult ConfigSolver::solve(std::int32_t server, const QueueVector& q) const {
  const Prepared& p = prepared_[spec_index_[server]];
  switch (kind_) {
    case 0:
      return max_weight_exhaustive(*p.maximal, q);
    case 1:
      if (p.grid) return max_weight_dp(*p.grid, q);
      return max_weight_exhaustive(*p.maximal, q);
    default:
      return max_weight_greedy(unique_specs_[spec_index_[server]].capacity, demands_, q);
  }
}

double ConfigSolver::certified_ratio(std::int32_t server) const {
  return kind_ == 2 ? prepared_[spec_index_[server]].ratio : 1.0;
}

bool ConfigSolver::using_fallback(std::int32_t server) const {
  const Prepared& p = prepared_[spec_index_[server]];
  return kind_ == 1 && !p.grid;
}

const MaximalSet& ConfigSolver::maximal_set(std::int32_t server) const {
  const Prepared& p = prepared_[spec_index_[server]];
  if (!p.maximal)
    throw std::logic_error("maximal_set: not prepared for this solver choice");
  return *p.maximal;
}

const MaximalSet& MaximalSetCache::get(const ResourceVector& capacity,
                                       const std::vector<ResourceVector>& demands,
                                       std::size_t max_set_size) {
  std::string key;
  key.reserve(16 + 8 * (capacity.size() + demands.size() * (demands.empty() ? 0 : demands[0].size())));
  auto append = [&key](const double* data, std::size_t count) {
    key.append(reinterpret_cast<const char*>(data), count * sizeof(double));
  };
  key.push_back(static_cast<char>(capacity.size()));
  append(capacity.data(), capacity.size());
  for (const auto& d : demands) {
    key.push_back('|');
    append(d.data(), d.size());
  }
  std::scoped_lock lock(mu_);
  auto it = entries_.find(key);
  if (it == entries_.end()) {
    auto set = std::make_unique<MaximalSet>(
        enumerate_maximal_configs(capacity, demands, max_set_size));
    it = entries_.emplace(std::move(key), std::move(set)).first;
  }
  return *it->second;
}

}  // namespace stallsched
