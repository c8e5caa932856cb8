#include "stallsched/kernels.hpp"

#if defined(STALLSCHED_HAVE_AVX2)

#include <immintrin.h>

namespace stallsched::kern::detail {

// Per block of 4 configs: widen u32 counts to u64 lanes, multiply by the
// queue length (fits in 32 bits, checked by the dispatcher) with mul_epu32,
// accumulate in 64-bit lanes. Matches the scalar kernel bit for bit.
void weights_into_avx2(const ConfigMatrix& m, std::span<const std::int64_t> q,
                       std::span<std::int64_t> out) {
  const std::int32_t n = m.num_configs;
  for (std::int32_t base = 0; base < n; base += 4) {
    __m256i acc = _mm256_setzero_si256();
    for (std::int32_t j = 0; j < m.num_types; ++j) {
      __m128i c32 = _mm_loadu_si128(reinterpret_cast<const __m128i*>(m.row(j) + base));
      __m256i c64 = _mm256_cvtepu32_epi64(c32);
      __m256i qv = _mm256_set1_epi64x(q[j]);
      acc = _mm256_add_epi64(acc, _mm256_mul_epu32(c64, qv));
    }
    alignas(32) std::int64_t lanes[4];
    _mm256_store_si256(reinterpret_cast<__m256i*>(lanes), acc);
    const std::int32_t take = n - base < 4 ? n - base : 4;
    for (std::int32_t t = 0; t < take; ++t) out[base + t] = lanes[t];
  }
}

}  // namespace stallsched::kern::detail

#endif  // STALLSCHED_HAVE_AVX2
