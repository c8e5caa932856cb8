#include "stallsched/kernels.hpp"

#if defined(STALLSCHED_HAVE_NEON)

#include <arm_neon.h>

namespace stallsched::kern::detail {

// Same blocking as the AVX2 kernel: 4 configs per step, u32 x u32 -> u64
// multiply-accumulate via vmlal_u32 on each half.
void weights_into_neon(const ConfigMatrix& m, std::span<const std::int64_t> q,
                       std::span<std::int64_t> out) {
  const std::int32_t n = m.num_configs;
  for (std::int32_t base = 0; base < n; base += 4) {
    uint64x2_t acc_lo = vdupq_n_u64(0);
    uint64x2_t acc_hi = vdupq_n_u64(0);
    for (std::int32_t j = 0; j < m.num_types; ++j) {
      uint32x4_t c = vld1q_u32(m.row(j) + base);
      uint32x2_t qv = vdup_n_u32(static_cast<std::uint32_t>(q[j]));
      acc_lo = vmlal_u32(acc_lo, vget_low_u32(c), qv);
      acc_hi = vmlal_u32(acc_hi, vget_high_u32(c), qv);
    }
    std::int64_t lanes[4];
    vst1q_u64(reinterpret_cast<std::uint64_t*>(lanes), acc_lo);
    vst1q_u64(reinterpret_cast<std::uint64_t*>(lanes + 2), acc_hi);
    const std::int32_t take = n - base < 4 ? n - base : 4;
    for (std::int32_t t = 0; t < take; ++t) out[base + t] = lanes[t];
  }
}

}  // namespace stallsched::kern::detail

#endif  // STALLSCHED_HAVE_NEON
