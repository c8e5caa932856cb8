#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "stallsched/model.hpp"

namespace stallsched::kern {

// Structure-of-arrays view of a configuration set: one contiguous row of
// per-config counts per job type, zero-padded to a multiple of the widest
// SIMD block so vector loads never read past initialized memory.
struct ConfigMatrix {
  std::int32_t num_configs = 0;
  std::int32_t num_types = 0;
  std::int32_t padded = 0;
  std::vector<std::uint32_t> counts;  // num_types rows of `padded` entries

  const std::uint32_t* row(std::int32_t j) const {
    return counts.data() + static_cast<std::size_t>(j) * padded;
  }
};

ConfigMatrix pack_configs(const std::vector<Configuration>& configs, std::int32_t num_types);

enum class Backend { Scalar, Avx2, Neon };

const char* backend_name(Backend b);
bool backend_supported(Backend b);

// Backend picked at first use: best supported vector unit, else scalar.
Backend active_backend();

// Test hook. Throws ValidationError if the backend is not supported here.
void force_backend(Backend b);
void reset_backend();

// Writes the weight of every configuration (sum_j q[j] * counts[j][i]) into
// out[0..num_configs). q must have num_types entries, each in [0, 2^32);
// larger values fall back to the scalar path so the arithmetic never
// truncates. out must hold at least num_configs entries.
void weights_into(const ConfigMatrix& m, std::span<const std::int64_t> q,
                  std::span<std::int64_t> out);

struct ScanResult {
  std::int32_t index = -1;  // last index achieving the max; -1 when empty
  std::int64_t weight = -1;
};

// Max-weight scan. Returns the LAST index attaining the maximum so that a
// matrix packed in ascending lexicographic order yields the
// lexicographically largest tied configuration.
ScanResult weight_scan(const ConfigMatrix& m, std::span<const std::int64_t> q);

// Internal entry points, exposed for equivalence tests.
namespace detail {
void weights_into_scalar(const ConfigMatrix& m, std::span<const std::int64_t> q,
                         std::span<std::int64_t> out);
#if defined(STALLSCHED_HAVE_AVX2)
void weights_into_avx2(const ConfigMatrix& m, std::span<const std::int64_t> q,
                       std::span<std::int64_t> out);
#endif
#if defined(STALLSCHED_HAVE_NEON)
void weights_into_neon(const ConfigMatrix& m, std::span<const std::int64_t> q,
                       std::span<std::int64_t> out);
#endif
}  // namespace detail

}  // namespace stallsched::kern
