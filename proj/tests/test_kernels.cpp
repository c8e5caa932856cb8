#include "doctest.h"
#include "stallsched/kernels.hpp"
#include "stallsched/rng.hpp"

using namespace stallsched;
using namespace stallsched::kern;

namespace {

struct BackendGuard {
  ~BackendGuard() { reset_backend(); }
};

}  // namespace

TEST_CASE("pack_configs lays out zero-padded SoA rows") {
  const std::vector<Configuration> configs{{0, 6}, {1, 2}};
  const ConfigMatrix m = pack_configs(configs, 2);
  CHECK(m.num_configs == 2);
  CHECK(m.num_types == 2);
  CHECK(m.padded % 8 == 0);
  CHECK(m.row(0)[0] == 0);
  CHECK(m.row(0)[1] == 1);
  CHECK(m.row(1)[0] == 6);
  CHECK(m.row(1)[1] == 2);
  for (std::int32_t i = m.num_configs; i < m.padded; ++i) {
    CHECK(m.row(0)[i] == 0);
    CHECK(m.row(1)[i] == 0);
  }
  CHECK_THROWS_AS(pack_configs({{1}}, 2), std::invalid_argument);
}

TEST_CASE("weights match hand computation") {
  const ConfigMatrix m = pack_configs({{0, 6}, {1, 2}}, 2);
  std::vector<std::int64_t> out(2);
  weights_into(m, std::vector<std::int64_t>{10, 1}, out);
  CHECK(out[0] == 6);
  CHECK(out[1] == 12);
}

TEST_CASE("scan returns the last max index, realizing lex-largest ties") {
  // Ascending lex order: (0,6) then (1,2); queue (4,1) ties both at 6.
  const ConfigMatrix m = pack_configs({{0, 6}, {1, 2}}, 2);
  const ScanResult r = weight_scan(m, std::vector<std::int64_t>{4, 1});
  CHECK(r.weight == 6);
  CHECK(r.index == 1);
}

TEST_CASE("empty matrix scans to a sentinel") {
  const ConfigMatrix m = pack_configs({}, 3);
  const ScanResult r = weight_scan(m, std::vector<std::int64_t>{1, 2, 3});
  CHECK(r.index == -1);
}

TEST_CASE("active backend equals the best supported one") {
  BackendGuard guard;
  reset_backend();
#if defined(STALLSCHED_HAVE_AVX2)
  if (backend_supported(Backend::Avx2)) CHECK(active_backend() == Backend::Avx2);
#elif defined(STALLSCHED_HAVE_NEON)
  CHECK(active_backend() == Backend::Neon);
#else
  CHECK(active_backend() == Backend::Scalar);
#endif
  CHECK(backend_supported(Backend::Scalar));
}

TEST_CASE("forcing an unsupported backend throws") {
  BackendGuard guard;
  for (Backend b : {Backend::Avx2, Backend::Neon}) {
    if (!backend_supported(b)) CHECK_THROWS_AS(force_backend(b), ValidationError);
  }
  CHECK_NOTHROW(force_backend(Backend::Scalar));
  CHECK(active_backend() == Backend::Scalar);
}

TEST_CASE("SIMD and scalar weights agree on random instances") {
  BackendGuard guard;
  Xoshiro256pp g(2024);
  for (int rep = 0; rep < 400; ++rep) {
    const std::int32_t types = 1 + static_cast<std::int32_t>(g.next() % 8);
    const std::int32_t n = static_cast<std::int32_t>(g.next() % 517);
    std::vector<Configuration> configs(n, Configuration(types));
    for (auto& k : configs)
      for (auto& v : k) v = static_cast<std::int32_t>(g.next() % 1000);
    const ConfigMatrix m = pack_configs(configs, types);
    std::vector<std::int64_t> q(types);
    for (auto& v : q) v = static_cast<std::int64_t>(g.next() % (std::uint64_t(1) << 31));

    std::vector<std::int64_t> ref(std::max(n, 1));
    detail::weights_into_scalar(m, q, ref);

    reset_backend();
    std::vector<std::int64_t> got(std::max(n, 1));
    weights_into(m, q, got);
    for (std::int32_t i = 0; i < n; ++i) CHECK(got[i] == ref[i]);

    const ScanResult fast = weight_scan(m, q);
    force_backend(Backend::Scalar);
    const ScanResult slow = weight_scan(m, q);
    reset_backend();
    CHECK(fast.index == slow.index);
    CHECK(fast.weight == slow.weight);
  }
}

TEST_CASE("queue lengths beyond 32 bits still compute exactly") {
  const ConfigMatrix m = pack_configs({{3, 1}, {2, 5}}, 2);
  const std::vector<std::int64_t> q{std::int64_t(1) << 33, 7};
  std::vector<std::int64_t> out(2);
  weights_into(m, q, out);  // dispatcher must route to scalar
  CHECK(out[0] == 3 * (std::int64_t(1) << 33) + 7);
  CHECK(out[1] == 2 * (std::int64_t(1) << 33) + 35);
}
