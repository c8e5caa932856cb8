#pragma once

#include <cmath>
#include <optional>
#include <variant>

#include "stallsched/solver.hpp"

namespace stallsched {

struct ConstantBeta {
  double beta = 0.9;

  bool operator==(const ConstantBeta&) const = default;
};

// Queue-dependent threshold beta_bar * (p + (1 - p) * tanh(z * total_queue)).
// Stays below beta_bar; p < 0 makes the threshold negative near empty queues,
// which disables stalling there entirely.
struct SigmoidBeta {
  double beta_bar = 0.9;
  double p = -0.05;
  double z = 0.005;

  bool operator==(const SigmoidBeta&) const = default;
};

using BetaPolicy = std::variant<ConstantBeta, SigmoidBeta>;

inline double beta_value(const BetaPolicy& policy, std::int64_t total_queue) {
  if (const auto* c = std::get_if<ConstantBeta>(&policy)) return c->beta;
  const auto& s = std::get<SigmoidBeta>(policy);
  return s.beta_bar *
         (s.p + (1.0 - s.p) * std::tanh(s.z * static_cast<double>(total_queue)));
}

// Multiplier on beta as a function of the stalled-server fraction s.
struct NoGate {
  bool operator==(const NoGate&) const = default;
};

struct HardLimitGate {
  double threshold = 0.1;

  bool operator==(const HardLimitGate&) const = default;
};

struct LinearGate {
  double threshold = 0.1;

  bool operator==(const LinearGate&) const = default;
};

using StallGate = std::variant<NoGate, HardLimitGate, LinearGate>;

inline double gate_value(const StallGate& gate, double stalled_fraction) {
  if (std::holds_alternative<NoGate>(gate)) return 1.0;
  if (const auto* h = std::get_if<HardLimitGate>(&gate))
    return stalled_fraction < h->threshold ? 1.0 : 0.0;
  const auto& l = std::get<LinearGate>(gate);
  return stalled_fraction < l.threshold ? 1.0 - stalled_fraction : 0.0;
}

struct Alg1Config {
  SolverChoice solver = ExhaustiveSolver{};
  BetaPolicy beta = SigmoidBeta{};
  StallGate gate = LinearGate{};
  bool early_reactivation = true;

  bool operator==(const Alg1Config&) const = default;
};

// Fixed-configuration MaxWeight: recomputes only at local refresh times
// (the instants a server drains completely).
struct M14Config {
  SolverChoice solver = ExhaustiveSolver{};

  bool operator==(const M14Config&) const = default;
};

// Randomized sampling with tokens: each nonempty queue j samples servers at
// rate eta * Q_j; a hit reserves capacity that a waiting job consumes.
struct G16Config {
  double sampling_rate_per_queued_job = 1.0;
  std::optional<double> token_lifetime_mean;  // default: mean service per type

  bool operator==(const G16Config&) const = default;
};

using PolicyConfig = std::variant<Alg1Config, M14Config, G16Config>;

inline const char* policy_name(const PolicyConfig& policy) {
  if (std::holds_alternative<Alg1Config>(policy)) return "alg1";
  if (std::holds_alternative<M14Config>(policy)) return "m14";
  return "g16";
}

inline void validate_policy(const PolicyConfig& policy) {
  auto check_beta = [](const BetaPolicy& b) {
    if (const auto* c = std::get_if<ConstantBeta>(&b)) {
      if (!(c->beta > 0.0 && c->beta < 1.0))
        throw ValidationError("constant beta must lie in (0,1)");
      return;
    }
    const auto& s = std::get<SigmoidBeta>(b);
    if (!(s.beta_bar > 0.0 && s.beta_bar < 1.0))
      throw ValidationError("sigmoid beta_bar must lie in (0,1)");
    if (!(s.p <= 1.0)) throw ValidationError("sigmoid p must be <= 1");
    if (!(s.z > 0.0)) throw ValidationError("sigmoid z must be positive");
  };
  auto check_gate = [](const StallGate& g) {
    double thr = 1.0;
    if (const auto* h = std::get_if<HardLimitGate>(&g)) thr = h->threshold;
    if (const auto* l = std::get_if<LinearGate>(&g)) thr = l->threshold;
    if (!(thr > 0.0 && thr <= 1.0))
      throw ValidationError("stall gate threshold must lie in (0,1]");
  };
  if (const auto* a = std::get_if<Alg1Config>(&policy)) {
    check_beta(a->beta);
    check_gate(a->gate);
    return;
  }
  if (const auto* g = std::get_if<G16Config>(&policy)) {
    if (!(g->sampling_rate_per_queued_job > 0.0))
      throw ValidationError("sampling rate per queued job must be positive");
    if (g->token_lifetime_mean && !(*g->token_lifetime_mean > 0.0))
      throw ValidationError("token lifetime mean must be positive");
  }
}

}  // namespace stallsched
