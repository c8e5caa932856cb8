#include <cmath>

#include "doctest.h"
#include "stallsched/simplex.hpp"

using namespace stallsched;

TEST_CASE("one-constraint maximum") {
  const lp::Result r = lp::maximize({1.0, 1.0}, {{{1.0, 1.0}, lp::Rel::Le, 1.0}});
  REQUIRE(r.status == lp::Status::Optimal);
  CHECK(r.objective == doctest::Approx(1.0));
  CHECK(r.x[0] + r.x[1] == doctest::Approx(1.0));
}

TEST_CASE("box constraints") {
  const lp::Result r = lp::maximize({3.0, 2.0}, {
                                                    {{1.0, 0.0}, lp::Rel::Le, 2.0},
                                                    {{0.0, 1.0}, lp::Rel::Le, 3.0},
                                                    {{1.0, 1.0}, lp::Rel::Le, 4.0},
                                                });
  REQUIRE(r.status == lp::Status::Optimal);
  CHECK(r.objective == doctest::Approx(10.0));
  CHECK(r.x[0] == doctest::Approx(2.0));
  CHECK(r.x[1] == doctest::Approx(2.0));
}

TEST_CASE("infeasible system is flagged") {
  const lp::Result r = lp::maximize({1.0}, {
                                               {{1.0}, lp::Rel::Le, 2.0},
                                               {{1.0}, lp::Rel::Ge, 3.0},
                                           });
  CHECK(r.status == lp::Status::Infeasible);
}

TEST_CASE("unbounded objective is flagged") {
  const lp::Result r = lp::maximize({1.0}, {{{1.0}, lp::Rel::Ge, 1.0}});
  CHECK(r.status == lp::Status::Unbounded);
}

TEST_CASE("greater-equal rows push the optimum down") {
  const lp::Result r = lp::maximize({-1.0}, {{{1.0}, lp::Rel::Ge, 2.0}});
  REQUIRE(r.status == lp::Status::Optimal);
  CHECK(r.objective == doctest::Approx(-2.0));
  CHECK(r.x[0] == doctest::Approx(2.0));
}

TEST_CASE("equality rows bind exactly") {
  const lp::Result r = lp::maximize({1.0, 2.0}, {
                                                    {{1.0, 1.0}, lp::Rel::Eq, 3.0},
                                                    {{0.0, 1.0}, lp::Rel::Le, 2.0},
                                                });
  REQUIRE(r.status == lp::Status::Optimal);
  CHECK(r.x[0] + r.x[1] == doctest::Approx(3.0));
  CHECK(r.objective == doctest::Approx(5.0));
  CHECK(r.x[1] == doctest::Approx(2.0));
}

TEST_CASE("negative right-hand sides are normalized") {
  // x >= -1 written as -x <= 1 with b sign games: minimize nothing, just feasibility.
  const lp::Result r = lp::maximize({0.0, 0.0}, {
                                                    {{-1.0, 0.0}, lp::Rel::Le, -0.5},
                                                    {{1.0, 1.0}, lp::Rel::Le, 2.0},
                                                });
  REQUIRE(r.status == lp::Status::Optimal);
  CHECK(r.x[0] >= 0.5 - 1e-9);
}

TEST_CASE("degenerate corner still terminates and answers consistently") {
  // Classic cycling-prone instance; Bland's rule must terminate.
  const std::vector<double> c{0.75, -150.0, 0.02, -6.0};
  const std::vector<lp::Constraint> rows{
      {{0.25, -60.0, -1.0 / 25.0, 9.0}, lp::Rel::Le, 0.0},
      {{0.5, -90.0, -1.0 / 50.0, 3.0}, lp::Rel::Le, 0.0},
      {{0.0, 0.0, 1.0, 0.0}, lp::Rel::Le, 1.0},
  };
  const lp::Result r = lp::maximize(c, rows);
  REQUIRE(r.status == lp::Status::Optimal);
  double obj = 0.0;
  for (std::size_t j = 0; j < c.size(); ++j) {
    CHECK(r.x[j] >= -1e-9);
    obj += c[j] * r.x[j];
  }
  CHECK(obj == doctest::Approx(r.objective));
  for (const auto& row : rows) {
    double lhs = 0.0;
    for (std::size_t j = 0; j < row.a.size(); ++j) lhs += row.a[j] * r.x[j];
    CHECK(lhs <= row.b + 1e-7);
  }
  CHECK(r.objective == doctest::Approx(1.0 / 20.0));
}
