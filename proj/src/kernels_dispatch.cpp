#include "stallsched/kernels.hpp"

#include <atomic>

namespace stallsched::kern {

namespace {

Backend detect_backend() {
#if defined(STALLSCHED_HAVE_AVX2)
  if (__builtin_cpu_supports("avx2")) return Backend::Avx2;
#endif
#if defined(STALLSCHED_HAVE_NEON)
  return Backend::Neon;  // baseline on aarch64
#endif
  return Backend::Scalar;
}

std::atomic<Backend> g_backend{detect_backend()};

bool fits_u32(std::span<const std::int64_t> q) {
  for (std::int64_t v : q) {
    if (v < 0 || v > 0xFFFFFFFFll) return false;
  }
  return true;
}

}  // namespace

const char* backend_name(Backend b) {
  switch (b) {
    case Backend::Scalar: return "scalar";
    case Backend::Avx2: return "avx2";
    case Backend::Neon: return "neon";
  }
  return "?";
}

bool backend_supported(Backend b) {
  switch (b) {
    case Backend::Scalar:
      return true;
    case Backend::Avx2:
#if defined(STALLSCHED_HAVE_AVX2)
      return __builtin_cpu_supports("avx2");
#else
      return false;
#endif
    case Backend::Neon:
#if defined(STALLSCHED_HAVE_NEON)
      return true;
#else
      return false;
#endif
  }
  return false;
}

Backend active_backend() { return g_backend.load(std::memory_order_relaxed); }

void force_backend(Backend b) {
  if (!backend_supported(b))
    throw ValidationError(std::string("kernel backend not supported on this host: ") +
                          backend_name(b));
  g_backend.store(b, std::memory_order_relaxed);
}

void reset_backend() { g_backend.store(detect_backend(), std::memory_order_relaxed); }

void weights_into(const ConfigMatrix& m, std::span<const std::int64_t> q,
                  std::span<std::int64_t> out) {
  if (static_cast<std::int32_t>(q.size()) != m.num_types)
    throw std::invalid_argument("weights_into: queue vector length mismatch");
  if (static_cast<std::int32_t>(out.size()) < m.num_configs)
    throw std::invalid_argument("weights_into: output buffer too small");
  Backend b = g_backend.load(std::memory_order_relaxed);
  // SIMD paths assume queue lengths fit in 32 bits; anything bigger is far
  // outside simulated regimes but must still compute correctly.
  if (b != Backend::Scalar && !fits_u32(q)) b = Backend::Scalar;
  switch (b) {
#if defined(STALLSCHED_HAVE_AVX2)
    case Backend::Avx2:
      detail::weights_into_avx2(m, q, out);
      return;
#endif
#if defined(STALLSCHED_HAVE_NEON)
    case Backend::Neon:
      detail::weights_into_neon(m, q, out);
      return;
#endif
    default:
      detail::weights_into_scalar(m, q, out);
      return;
  }
}

ScanResult weight_scan(const ConfigMatrix& m, std::span<const std::int64_t> q) {
  ScanResult r;
  if (m.num_configs == 0) return r;
  std::vector<std::int64_t> w(static_cast<std::size_t>(m.num_configs));
  weights_into(m, q, w);
  for (std::int32_t i = 0; i < m.num_configs; ++i) {
    if (w[i] >= r.weight) {  // >= keeps the last (lexicographically largest) tie
      r.weight = w[i];
      r.index = i;
    }
  }
  return r;
}

}  // namespace stallsched::kern
