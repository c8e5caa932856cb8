#include "stallsched/kernels.hpp"

namespace stallsched::kern {

ConfigMatrix pack_configs(const std::vector<Configuration>& configs, std::int32_t num_types) {
  ConfigMatrix m;
  m.num_configs = static_cast<std::int32_t>(configs.size());
  m.num_types = num_types;
  // Pad to 8 so both the 4-wide AVX2 and 4-wide NEON blocks can load a full
  // final block; padding counts are zero and contribute nothing.
  m.padded = (m.num_configs + 7) & ~7;
  if (m.padded == 0) m.padded = 8;
  m.counts.assign(static_cast<std::size_t>(m.num_types) * m.padded, 0u);
  for (std::int32_t i = 0; i < m.num_configs; ++i) {
    const Configuration& k = configs[i];
    if (static_cast<std::int32_t>(k.size()) != num_types)
      throw std::invalid_argument("pack_configs: ragged configuration list");
    for (std::int32_t j = 0; j < num_types; ++j) {
      if (k[j] < 0) throw std::invalid_argument("pack_configs: negative count");
      m.counts[static_cast<std::size_t>(j) * m.padded + i] = static_cast<std::uint32_t>(k[j]);
    }
  }
  return m;
}

namespace detail {

void weights_into_scalar(const ConfigMatrix& m, std::span<const std::int64_t> q,
                         std::span<std::int64_t> out) {
  for (std::int32_t i = 0; i < m.num_configs; ++i) {
    std::uint64_t acc = 0;
    for (std::int32_t j = 0; j < m.num_types; ++j) {
      acc += static_cast<std::uint64_t>(q[j]) * m.row(j)[i];
    }
    out[i] = static_cast<std::int64_t>(acc);
  }
}

}  // namespace detail

}  // namespace stallsched::kern
