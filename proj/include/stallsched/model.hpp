#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace stallsched {

// Absolute slack used by every resource-feasibility comparison, so that
// decimal demands (17.1, 6.5, ...) accumulated additively do not flip a
// packing decision on the last bit.
inline constexpr double kFeasibilitySlack = 1e-9;

// Thrown for bad user input: malformed experiment files, inconsistent
// dimensions, parameters out of range. CLI maps this to exit code 2.
struct ValidationError : std::runtime_error {
  explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

// Thrown when a runtime self-check fails (capacity overshoot, queue
// accounting drift, a preempted job, ...). CLI maps this to exit code 3.
struct InvariantViolation : std::runtime_error {
  explicit InvariantViolation(const std::string& what) : std::runtime_error(what) {}
};

// Enumeration guards: the maximal-configuration set (or a DP table) would
// exceed its configured cap.
struct SizingError : ValidationError {
  explicit SizingError(const std::string& what) : ValidationError(what) {}
};

// Amounts of each resource (length R). Nonnegative, finite.
using ResourceVector = std::vector<double>;

// Per-type job counts hosted (or targeted) by one server (length J).
using Configuration = std::vector<std::int32_t>;

// Waiting jobs per type (length J). Jobs in service are not counted.
using QueueVector = std::vector<std::int64_t>;

struct Exponential {
  double rate = 1.0;
  bool operator==(const Exponential&) const = default;
};

// Mixture of exponentials: branch i is picked with probability probs[i],
// then the duration is Exp(rates[i]).
struct HyperExponential {
  std::vector<double> probs;
  std::vector<double> rates;
  bool operator==(const HyperExponential&) const = default;
};

using ServiceLaw = std::variant<Exponential, HyperExponential>;

double service_mean(const ServiceLaw& law);
double service_variance(const ServiceLaw& law);

// Validates probabilities sum to 1 (1e-9), rates positive; throws ValidationError.
void validate_service_law(const ServiceLaw& law, const std::string& context);

struct JobType {
  std::string name;
  ResourceVector demand;
  ServiceLaw service = Exponential{1.0};
  bool operator==(const JobType&) const = default;
};

struct ServerSpec {
  ResourceVector capacity;
  bool operator==(const ServerSpec&) const = default;
};

// Sum over types of queue length times hosted count. Both vectors must have
// equal length J; mismatch is a contract violation.
std::int64_t weight(const Configuration& k, const QueueVector& q);

// True when the configuration packs additively: for every resource n,
// sum_j k[j]*demands[j][n] <= capacity[n] + slack.
bool is_feasible(const Configuration& k, const ResourceVector& capacity,
                 const std::vector<ResourceVector>& demands,
                 double slack = kFeasibilitySlack);

// Total resource usage of a configuration, sum_j k[j]*demands[j].
ResourceVector usage(const Configuration& k, const std::vector<ResourceVector>& demands);

}  // namespace stallsched
