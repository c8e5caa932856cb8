#include "stallsched/capacity.hpp"

#include <algorithm>
#include <cmath>

#include "stallsched/simplex.hpp"

namespace stallsched {

namespace {

struct Group {
  ResourceVector capacity;
  double count = 0.0;
  const MaximalSet* set = nullptr;
};

// Identical servers are interchangeable, so their hulls aggregate into one
// block with convexity budget equal to the group size. This is also what
// keeps the LP small for thousand-server fleets.
std::vector<Group> group_servers(const std::vector<ServerSpec>& servers,
                                 const std::vector<ResourceVector>& demands,
                                 MaximalSetCache& cache) {
  if (servers.empty()) throw ValidationError("fleet has no servers");
  std::vector<Group> groups;
  for (const auto& s : servers) {
    bool found = false;
    for (auto& g : groups) {
      if (g.capacity == s.capacity) {
        g.count += 1.0;
        found = true;
        break;
      }
    }
    if (!found) groups.push_back(Group{s.capacity, 1.0, nullptr});
  }
  for (auto& g : groups) g.set = &cache.get(g.capacity, demands);
  return groups;
}

void validate_rho(const ResourceVector& rho, std::size_t num_types) {
  if (rho.size() != num_types)
    throw ValidationError("workload vector length does not match the job type count");
  for (double v : rho) {
    if (!(v >= 0.0) || !std::isfinite(v))
      throw ValidationError("workload entries must be nonnegative and finite");
  }
}

}  // namespace

bool region_membership(const ResourceVector& rho, const std::vector<ServerSpec>& servers,
                       const std::vector<ResourceVector>& demands, MaximalSetCache& cache,
                       double tol) {
  validate_rho(rho, demands.size());
  const std::size_t J = demands.size();
  const auto groups = group_servers(servers, demands, cache);

  std::size_t cols = 0;
  for (const auto& g : groups) cols += g.set->configs.size();
  if (cols == 0)
    return std::all_of(rho.begin(), rho.end(), [](double v) { return v == 0.0; });

  std::vector<lp::Constraint> rows;
  rows.reserve(J + groups.size());
  for (std::size_t j = 0; j < J; ++j) {
    lp::Constraint r;
    r.a.assign(cols, 0.0);
    std::size_t col = 0;
    for (const auto& g : groups)
      for (const auto& k : g.set->configs) r.a[col++] = static_cast<double>(k[j]);
    r.rel = lp::Rel::Ge;
    r.b = rho[j];
    rows.push_back(std::move(r));
  }
  std::size_t col0 = 0;
  for (const auto& g : groups) {
    lp::Constraint r;
    r.a.assign(cols, 0.0);
    for (std::size_t m = 0; m < g.set->configs.size(); ++m) r.a[col0 + m] = 1.0;
    col0 += g.set->configs.size();
    r.rel = lp::Rel::Le;
    r.b = g.count;
    rows.push_back(std::move(r));
  }

  const std::vector<double> c(cols, 0.0);
  return lp::maximize(c, std::move(rows), tol).status == lp::Status::Optimal;
}

namespace {

void validate_direction(const ResourceVector& direction, const std::vector<Group>& groups,
                        std::size_t J) {
  if (direction.size() != J)
    throw ValidationError("direction length does not match the job type count");
  bool any = false;
  for (double v : direction) {
    if (!(v >= 0.0) || !std::isfinite(v))
      throw ValidationError("direction entries must be nonnegative and finite");
    if (v > 0.0) any = true;
  }
  if (!any) throw ValidationError("direction must load at least one job type");
  for (std::size_t j = 0; j < J; ++j) {
    if (direction[j] <= 0.0) continue;
    bool hosted = false;
    for (const auto& g : groups) {
      for (const auto& k : g.set->configs) {
        if (k[j] > 0) {
          hosted = true;
          break;
        }
      }
      if (hosted) break;
    }
    if (!hosted)
      throw ValidationError("direction loads a job type that fits in no server");
  }
}

double upper_bound_t(const ResourceVector& direction, const std::vector<Group>& groups) {
  // t * d_j can never exceed the total count of type j across all servers.
  double hi = 0.0;
  for (std::size_t j = 0; j < direction.size(); ++j) {
    if (direction[j] <= 0.0) continue;
    double total = 0.0;
    for (const auto& g : groups) {
      std::int64_t best = 0;
      for (const auto& k : g.set->configs)
        best = std::max<std::int64_t>(best, k[j]);
      total += g.count * static_cast<double>(best);
    }
    hi = std::max(hi, total / direction[j]);
  }
  return hi + 1.0;
}

}  // namespace

double intensity_scale(const ResourceVector& direction, const std::vector<ServerSpec>& servers,
                       const std::vector<ResourceVector>& demands, MaximalSetCache& cache) {
  const std::size_t J = demands.size();
  const auto groups = group_servers(servers, demands, cache);
  validate_direction(direction, groups, J);

  std::size_t cols = 0;
  for (const auto& g : groups) cols += g.set->configs.size();
  const std::size_t tcol = cols;  // last variable is t

  std::vector<lp::Constraint> rows;
  for (std::size_t j = 0; j < J; ++j) {
    lp::Constraint r;
    r.a.assign(cols + 1, 0.0);
    std::size_t col = 0;
    for (const auto& g : groups)
      for (const auto& k : g.set->configs) r.a[col++] = static_cast<double>(k[j]);
    r.a[tcol] = -direction[j];
    r.rel = lp::Rel::Ge;
    r.b = 0.0;
    rows.push_back(std::move(r));
  }
  std::size_t col0 = 0;
  for (const auto& g : groups) {
    lp::Constraint r;
    r.a.assign(cols + 1, 0.0);
    for (std::size_t m = 0; m < g.set->configs.size(); ++m) r.a[col0 + m] = 1.0;
    col0 += g.set->configs.size();
    r.rel = lp::Rel::Le;
    r.b = g.count;
    rows.push_back(std::move(r));
  }

  std::vector<double> c(cols + 1, 0.0);
  c[tcol] = 1.0;
  const lp::Result res = lp::maximize(c, std::move(rows));
  if (res.status == lp::Status::Optimal) return res.objective;
  return intensity_scale_bisection(direction, servers, demands, cache);
}

double intensity_scale_bisection(const ResourceVector& direction,
                                 const std::vector<ServerSpec>& servers,
                                 const std::vector<ResourceVector>& demands,
                                 MaximalSetCache& cache, double rel_precision) {
  const auto groups = group_servers(servers, demands, cache);
  validate_direction(direction, groups, demands.size());
  double lo = 0.0;
  double hi = upper_bound_t(direction, groups);
  auto member = [&](double t) {
    ResourceVector rho(direction.size());
    for (std::size_t j = 0; j < rho.size(); ++j) rho[j] = t * direction[j];
    return region_membership(rho, servers, demands, cache);
  };
  for (int it = 0; it < 200 && (hi - lo) > rel_precision * std::max(1.0, lo); ++it) {
    const double mid = 0.5 * (lo + hi);
    if (member(mid)) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return lo;
}

std::vector<double> workload_for_intensity(double zeta, const ResourceVector& direction,
                                           const std::vector<ServerSpec>& servers,
                                           const std::vector<JobType>& types,
                                           MaximalSetCache& cache) {
  if (!(zeta > 0.0) || !std::isfinite(zeta))
    throw ValidationError("traffic intensity must be positive and finite");
  std::vector<ResourceVector> demands;
  demands.reserve(types.size());
  for (const auto& t : types) demands.push_back(t.demand);
  const double t_star = intensity_scale(direction, servers, demands, cache);
  std::vector<double> lambda(types.size());
  for (std::size_t j = 0; j < types.size(); ++j) {
    const double mu = 1.0 / service_mean(types[j].service);
    lambda[j] = zeta * t_star * direction[j] * mu;
  }
  return lambda;
}

}  // namespace stallsched
