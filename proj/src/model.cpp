#include "stallsched/model.hpp"

#include <cmath>

namespace stallsched {

double service_mean(const ServiceLaw& law) {
  if (const auto* e = std::get_if<Exponential>(&law)) return 1.0 / e->rate;
  const auto& h = std::get<HyperExponential>(law);
  double m = 0.0;
  for (std::size_t i = 0; i < h.probs.size(); ++i) m += h.probs[i] / h.rates[i];
  return m;
}

double service_variance(const ServiceLaw& law) {
  if (const auto* e = std::get_if<Exponential>(&law)) return 1.0 / (e->rate * e->rate);
  // E[X^2] = sum_i p_i * 2 / rate_i^2 for a mixture of exponentials.
  const auto& h = std::get<HyperExponential>(law);
  double m = 0.0, m2 = 0.0;
  for (std::size_t i = 0; i < h.probs.size(); ++i) {
    m += h.probs[i] / h.rates[i];
    m2 += h.probs[i] * 2.0 / (h.rates[i] * h.rates[i]);
  }
  return m2 - m * m;
}

void validate_service_law(const ServiceLaw& law, const std::string& context) {
  if (const auto* e = std::get_if<Exponential>(&law)) {
    if (!(e->rate > 0.0) || !std::isfinite(e->rate))
      throw ValidationError(context + ": exponential rate must be positive and finite");
    return;
  }
  const auto& h = std::get<HyperExponential>(law);
  if (h.probs.empty() || h.probs.size() != h.rates.size())
    throw ValidationError(context + ": hyperexponential needs matching, nonempty probs/rates");
  double sum = 0.0;
  for (double p : h.probs) {
    if (!(p >= 0.0) || !std::isfinite(p))
      throw ValidationError(context + ": branch probabilities must be nonnegative");
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-9)
    throw ValidationError(context + ": branch probabilities must sum to 1");
  for (double r : h.rates) {
    if (!(r > 0.0) || !std::isfinite(r))
      throw ValidationError(context + ": branch rates must be positive and finite");
  }
}

std::int64_t weight(const Configuration& k, const QueueVector& q) {
  if (k.size() != q.size())
    throw std::invalid_argument("weight: configuration and queue vector lengths differ");
  std::int64_t w = 0;
  for (std::size_t j = 0; j < k.size(); ++j) w += q[j] * static_cast<std::int64_t>(k[j]);
  return w;
}

bool is_feasible(const Configuration& k, const ResourceVector& capacity,
                 const std::vector<ResourceVector>& demands, double slack) {
  if (k.size() != demands.size())
    throw std::invalid_argument("is_feasible: configuration and demand list lengths differ");
  for (std::size_t n = 0; n < capacity.size(); ++n) {
    double used = 0.0;
    for (std::size_t j = 0; j < k.size(); ++j) used += k[j] * demands[j][n];
    if (used > capacity[n] + slack) return false;
  }
  return true;
}

ResourceVector usage(const Configuration& k, const std::vector<ResourceVector>& demands) {
  if (demands.empty()) return {};
  ResourceVector u(demands[0].size(), 0.0);
  for (std::size_t j = 0; j < k.size(); ++j)
    for (std::size_t n = 0; n < u.size(); ++n) u[n] += k[j] * demands[j][n];
  return u;
}

}  // namespace stallsched
