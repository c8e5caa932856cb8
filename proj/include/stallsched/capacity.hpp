#pragma once

#include "stallsched/model.hpp"
#include "stallsched/solver.hpp"

namespace stallsched {

// The fleet capacity region is the Minkowski sum over servers of the convex
// hulls of their maximal configurations plus the origin; feasibility of
// configurations is monotone, so the region is downward closed and
// membership tests sum >= rho componentwise.
//
// rho is a per-type workload vector (jobs-in-service equivalents).
bool region_membership(const ResourceVector& rho, const std::vector<ServerSpec>& servers,
                       const std::vector<ResourceVector>& demands, MaximalSetCache& cache,
                       double tol = 1e-7);

// Largest t such that t * direction lies in the capacity region, via the LP
// (falls back to bisection on membership at relative precision 1e-6 if the
// LP does not converge). Throws ValidationError when the direction loads a
// type no server can host.
double intensity_scale(const ResourceVector& direction, const std::vector<ServerSpec>& servers,
                       const std::vector<ResourceVector>& demands, MaximalSetCache& cache);

// Bisection route, exposed so tests can cross-check the LP answer.
double intensity_scale_bisection(const ResourceVector& direction,
                                 const std::vector<ServerSpec>& servers,
                                 const std::vector<ResourceVector>& demands,
                                 MaximalSetCache& cache, double rel_precision = 1e-6);

// Arrival rates placing the workload at fraction zeta of the boundary along
// `direction`: lambda_j = zeta * t_star * direction_j * mu_j.
std::vector<double> workload_for_intensity(double zeta, const ResourceVector& direction,
                                           const std::vector<ServerSpec>& servers,
                                           const std::vector<JobType>& types,
                                           MaximalSetCache& cache);

}  // namespace stallsched
