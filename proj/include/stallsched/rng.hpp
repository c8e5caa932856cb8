#pragma once

#include <cmath>
#include <cstdint>

#include "stallsched/model.hpp"

namespace stallsched {

// Deterministic, implementation-pinned generators. The standard library's
// distributions are implementation-defined, so replay guarantees (same seed,
// same trace, byte-identical output) are built on these instead.

struct SplitMix64 {
  std::uint64_t state;

  explicit SplitMix64(std::uint64_t seed) : state(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }
};

class Xoshiro256pp {
 public:
  explicit Xoshiro256pp(std::uint64_t seed) {
    SplitMix64 sm(seed);
    for (auto& w : s_) w = sm.next();
  }

  std::uint64_t next() {
    const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  // Uniform on (0, 1]: never returns 0, so log() stays finite.
  double uniform01() { return (static_cast<double>(next() >> 11) + 1.0) * 0x1.0p-53; }

  double exponential(double rate) { return -std::log(uniform01()) / rate; }

  // Box-Muller; the second variate is cached so draws come in a fixed order.
  double normal() {
    if (has_cached_) {
      has_cached_ = false;
      return cached_;
    }
    const double u1 = uniform01();
    const double u2 = uniform01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 6.283185307179586476925286766559 * u2;
    cached_ = r * std::sin(a);
    has_cached_ = true;
    return r * std::cos(a);
  }

  double lognormal(double mu, double sigma) { return std::exp(mu + sigma * normal()); }

  // Uniform index in [0, n).
  std::uint64_t uniform_index(std::uint64_t n) {
    const double u = uniform01();
    std::uint64_t i = static_cast<std::uint64_t>(u * static_cast<double>(n));
    return i >= n ? n - 1 : i;
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

  std::uint64_t s_[4];
  bool has_cached_ = false;
  double cached_ = 0.0;
};

// Independent stream families. Reseeding one family never perturbs another.
enum class StreamKind : std::uint64_t {
  Arrival = 1,
  Service = 2,
  Sampling = 3,
  TokenLife = 4,
  Batch = 5,
};

inline std::uint64_t derive_stream_seed(std::uint64_t base, StreamKind kind,
                                        std::uint64_t index) {
  SplitMix64 sm(base);
  const std::uint64_t root = sm.next();
  return root ^ (static_cast<std::uint64_t>(kind) * 0xA24BAED4963EE407ull) ^
         (index * 0x9FB21C651E98DF25ull);
}

// One service-time draw. Hyperexponential pick consumes one uniform for the
// branch, then one for the exponential.
inline double sample_service(Xoshiro256pp& g, const ServiceLaw& law) {
  if (const auto* e = std::get_if<Exponential>(&law)) return g.exponential(e->rate);
  const auto& h = std::get<HyperExponential>(law);
  const double u = g.uniform01();
  double cum = 0.0;
  std::size_t pick = h.probs.size() - 1;
  for (std::size_t i = 0; i < h.probs.size(); ++i) {
    cum += h.probs[i];
    if (u <= cum) {
      pick = i;
      break;
    }
  }
  return g.exponential(h.rates[pick]);
}

// Log-normal renewal gaps mean-matched to 1/rate: E[gap] = exp(mu + sigma^2/2).
inline double lognormal_gap_mu(double rate, double sigma) {
  return -std::log(rate) - 0.5 * sigma * sigma;
}

}  // namespace stallsched
