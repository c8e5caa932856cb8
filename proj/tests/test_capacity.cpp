#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "stallsched/capacity.hpp"
#include "stallsched/rng.hpp"

using namespace stallsched;

namespace {

const std::vector<ResourceVector> kDemands41{{4.0}, {1.0}};
const std::vector<ServerSpec> kOneServer6{{{6.0}}};

// Exact frontier oracle for two servers, one resource, two job types.
// Vertices of the summed region are pairwise sums of per-server maximal
// configurations (origin included); the supportable intensity along d is the
// best min-ratio over every edge between those vertices.
double two_server_intensity_oracle(double cap1, double cap2,
                                   const std::vector<ResourceVector>& demands,
                                   const ResourceVector& d) {
  auto vertices = [&](double cap) {
    std::vector<std::array<double, 2>> pts{{0.0, 0.0}};
    const MaximalSet set = enumerate_maximal_configs({cap}, demands);
    for (const auto& k : set.configs)
      pts.push_back({static_cast<double>(k[0]), static_cast<double>(k[1])});
    return pts;
  };
  const auto v1 = vertices(cap1);
  const auto v2 = vertices(cap2);
  std::vector<std::array<double, 2>> sums;
  for (const auto& a : v1)
    for (const auto& b : v2) sums.push_back({a[0] + b[0], a[1] + b[1]});

  auto ratio_at = [&](double y0, double y1) {
    double t = std::numeric_limits<double>::infinity();
    if (d[0] > 0.0) t = std::min(t, y0 / d[0]);
    if (d[1] > 0.0) t = std::min(t, y1 / d[1]);
    return t;
  };
  double best = 0.0;
  for (const auto& p : sums)
    for (const auto& q : sums) {
      best = std::max(best, ratio_at(p[0], p[1]));
      best = std::max(best, ratio_at(q[0], q[1]));
      // Interior crossing of the two coordinate ratios along the segment.
      const double fp = p[0] * d[1] - p[1] * d[0];
      const double fq = q[0] * d[1] - q[1] * d[0];
      if ((fp > 0.0) != (fq > 0.0) && fp != fq) {
        const double s = fp / (fp - fq);
        if (s >= 0.0 && s <= 1.0) {
          const double y0 = (1.0 - s) * p[0] + s * q[0];
          const double y1 = (1.0 - s) * p[1] + s * q[1];
          best = std::max(best, ratio_at(y0, y1));
        }
      }
    }
  return best;
}

}  // namespace

TEST_CASE("membership on the two-type example") {
  MaximalSetCache cache;
  auto member = [&](double a, double b) {
    return region_membership({a, b}, kOneServer6, kDemands41, cache);
  };
  CHECK(member(0.5, 4.0));        // midpoint of the frontier segment
  CHECK_FALSE(member(0.6, 4.0));  // above the segment
  CHECK(member(0.999 * 0.5, 0.999 * 4.0));
  CHECK_FALSE(member(1.001 * 0.5, 1.001 * 4.0));
  CHECK(member(0.9, 2.0));
  CHECK_FALSE(member(0.9, 2.5));
  CHECK(member(0.0, 0.0));
  CHECK(member(0.0, 6.0));
  CHECK_FALSE(member(0.0, 6.1));
}

TEST_CASE("the region is downward closed") {
  MaximalSetCache cache;
  // (1,0) sits below the maximal configuration (1,2), so it must be inside
  // even though no combination of maximal configs hits it exactly.
  CHECK(region_membership({1.0, 0.0}, kOneServer6, kDemands41, cache));
  CHECK(region_membership({1.0, 1.9}, kOneServer6, kDemands41, cache));
}

TEST_CASE("two identical servers double the region") {
  MaximalSetCache cache;
  const std::vector<ServerSpec> fleet{{{6.0}}, {{6.0}}};
  CHECK(region_membership({1.0, 8.0}, fleet, kDemands41, cache));
  CHECK_FALSE(region_membership({1.3, 8.0}, fleet, kDemands41, cache));
}

TEST_CASE("intensity along the worked directions") {
  MaximalSetCache cache;
  const double t = intensity_scale({0.5, 4.0}, kOneServer6, kDemands41, cache);
  CHECK(t == doctest::Approx(1.0).epsilon(1e-6));
  const double tb =
      intensity_scale_bisection({0.5, 4.0}, kOneServer6, kDemands41, cache);
  CHECK(std::abs(t - tb) <= 1e-5);

  CHECK(intensity_scale({0.0, 1.0}, kOneServer6, kDemands41, cache) ==
        doctest::Approx(6.0).epsilon(1e-6));
  CHECK(intensity_scale({1.0, 0.0}, kOneServer6, kDemands41, cache) ==
        doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("power-of-two fleet packs exactly at unit intensity") {
  MaximalSetCache cache;
  const std::vector<ServerSpec> fleet{{{1.0}}, {{2.0}}, {{4.0}}, {{8.0}}};
  const std::vector<ResourceVector> demands{{1.0}, {2.0}, {4.0}, {8.0}};
  const double t = intensity_scale({1.0, 1.0, 1.0, 1.0}, fleet, demands, cache);
  CHECK(t == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("three-VM fleet intensity scales with the server count") {
  MaximalSetCache cache;
  const ResourceVector cap{90.0, 90.0, 5000.0};
  const std::vector<ResourceVector> demands{
      {15.0, 8.0, 1690.0}, {17.1, 6.5, 420.0}, {7.0, 20.0, 1690.0}};
  const ResourceVector dir{2.0 / 3.0, 11.0 / 3.0, 2.0 / 3.0};

  const double one = intensity_scale(dir, {{cap}}, demands, cache);
  CHECK(one == doctest::Approx(1.0).epsilon(1e-6));

  std::vector<ServerSpec> twenty(20, ServerSpec{cap});
  const double many = intensity_scale(dir, twenty, demands, cache);
  CHECK(many == doctest::Approx(20.0).epsilon(1e-6));
}

TEST_CASE("directions loading an unhostable type are rejected") {
  MaximalSetCache cache;
  CHECK_THROWS_AS(
      intensity_scale({1.0, 1.0}, {{{3.0}}}, kDemands41, cache), ValidationError);
  // Zero load on the oversized type is fine.
  CHECK(intensity_scale({0.0, 1.0}, {{{3.0}}}, kDemands41, cache) ==
        doctest::Approx(3.0).epsilon(1e-6));
}

TEST_CASE("workload derivation from intensity fraction") {
  MaximalSetCache cache;
  const std::vector<JobType> types{
      {"big", {4.0}, Exponential{1.0}},
      {"small", {1.0}, Exponential{1.0}},
  };
  const auto lambda =
      workload_for_intensity(0.89, {0.5, 4.0}, kOneServer6, types, cache);
  REQUIRE(lambda.size() == 2);
  CHECK(lambda[0] == doctest::Approx(0.445).epsilon(1e-6));
  CHECK(lambda[1] == doctest::Approx(3.56).epsilon(1e-6));
}

TEST_CASE("lp intensity matches the exact two-server oracle") {
  Xoshiro256pp g(777);
  MaximalSetCache cache;
  int done = 0;
  while (done < 80) {
    const double cap1 = 2.0 + static_cast<double>(g.next() % 9);
    const double cap2 = 2.0 + static_cast<double>(g.next() % 9);
    std::vector<ResourceVector> demands(2, ResourceVector(1));
    for (auto& d : demands)
      d[0] = 1.0 + static_cast<double>(g.next() % 5);
    ResourceVector dir(2);
    dir[0] = static_cast<double>(g.next() % 4);
    dir[1] = static_cast<double>(g.next() % 4);
    if (dir[0] == 0.0 && dir[1] == 0.0) dir[1] = 1.0;
    const double maxcap = std::max(cap1, cap2);
    bool hosted = true;
    for (std::size_t j = 0; j < 2; ++j)
      if (dir[j] > 0.0 && demands[j][0] > maxcap) hosted = false;
    if (!hosted) continue;

    const std::vector<ServerSpec> fleet{{{cap1}}, {{cap2}}};
    const double t = intensity_scale(dir, fleet, demands, cache);
    const double oracle = two_server_intensity_oracle(cap1, cap2, demands, dir);
    CHECK(t == doctest::Approx(oracle).epsilon(1e-7));
    ++done;
  }
}

TEST_CASE("convex mixes of per-server maximal configs stay inside") {
  Xoshiro256pp g(2024);
  MaximalSetCache cache;
  for (int rep = 0; rep < 40; ++rep) {
    const std::size_t S = 1 + g.next() % 3;
    const std::size_t J = 1 + g.next() % 3;
    std::vector<ServerSpec> fleet;
    for (std::size_t s = 0; s < S; ++s)
      fleet.push_back({{4.0 + static_cast<double>(g.next() % 8)}});
    std::vector<ResourceVector> demands(J, ResourceVector(1));
    for (auto& d : demands) d[0] = 1.0 + static_cast<double>(g.next() % 4);

    ResourceVector mix(J, 0.0);
    for (const auto& srv : fleet) {
      const MaximalSet& set = cache.get(srv.capacity, demands);
      if (set.configs.empty()) continue;
      std::vector<double> w(set.configs.size());
      double total = 0.0;
      for (auto& v : w) {
        v = g.uniform01();
        total += v;
      }
      // Leave some slack toward the origin by under-normalizing.
      for (std::size_t ell = 0; ell < w.size(); ++ell)
        for (std::size_t j = 0; j < J; ++j)
          mix[j] += 0.999 * (w[ell] / total) *
                    static_cast<double>(set.configs[ell][j]);
    }
    CHECK(region_membership(mix, fleet, demands, cache));
  }
}
