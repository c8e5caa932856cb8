#include <filesystem>
#include <fstream>
#include <unistd.h>

#include "doctest.h"
#include "stallsched/trace.hpp"

using namespace stallsched;

namespace {

struct TempCsv {
  std::filesystem::path path;

  explicit TempCsv(const std::string& content) {
    path = std::filesystem::temp_directory_path() /
           ("stallsched_trace_" + std::to_string(::getpid()) + "_" +
            std::to_string(counter++) + ".csv");
    std::ofstream out(path);
    out << content;
  }
  ~TempCsv() { std::filesystem::remove(path); }

  static int counter;
};

int TempCsv::counter = 0;

}  // namespace

TEST_CASE("type mapping rounds demands up to the covering power of two") {
  CHECK(map_type(0.3, 0.1) == 1);    // 0.25 < 0.3 <= 0.5
  CHECK(map_type(0.5, 0.5) == 1);    // exact powers map to themselves
  CHECK(map_type(0.25, 0.25) == 2);
  CHECK(map_type(0.25, 0.26) == 1);  // max of the pair drives the size
  CHECK(map_type(0.6, 0.7) == 0);
  CHECK(map_type(1.0, 0.0) == 0);
  CHECK(map_type(0.004, 0.0) == 7);  // clamped to the 2^-7 floor
  CHECK(map_type(0.0, 0.0) == 7);
  CHECK(map_type(1.0 / 128.0, 0.0) == 7);
  CHECK_FALSE(map_type(1.2, 0.0).has_value());
}

TEST_CASE("loading parses, filters, sorts and counts") {
  const TempCsv file(
      "arrival_time,duration,cpu,mem\n"
      "5.0,2.0,0.3,0.1\n"
      "1.0,4.0,0.5,0.5\n"
      "2.0,-1.0,0.2,0.2\n"      // nonpositive duration
      "3.0,1.0,1.5,0.0\n"       // oversize
      "4.0,oops,0.1,0.1\n"      // malformed
      "6.0,8.0,0.004,0.0\n"     // below floor, clamped
      "7.0,3.0,0.9,0.2\n");
  const TraceJobStream stream = load_trace(file.path.string());
  CHECK(stream.stats.rows == 7);
  CHECK(stream.stats.nonpositive_duration == 1);
  CHECK(stream.stats.oversize_rejected == 1);
  CHECK(stream.stats.malformed == 1);
  CHECK(stream.stats.below_floor == 1);
  REQUIRE(stream.jobs.size() == 4);
  CHECK(stream.jobs[0] == TraceJob{1.0, 1, 4.0});
  CHECK(stream.jobs[1] == TraceJob{5.0, 1, 2.0});
  CHECK(stream.jobs[2] == TraceJob{6.0, 7, 8.0});
  CHECK(stream.jobs[3] == TraceJob{7.0, 0, 3.0});
  CHECK(stream.type_counts[1] == 2);
  CHECK(stream.mean_duration[1] == doctest::Approx(3.0));
  CHECK(stream.mean_duration[0] == doctest::Approx(3.0));
  CHECK(stream.mean_duration[7] == doctest::Approx(8.0));
  CHECK(stream.mean_duration[4] == 0.0);
}

TEST_CASE("drop mode discards sub-floor jobs instead of clamping") {
  const TempCsv file(
      "arrival_time,duration,cpu,mem\n"
      "1.0,1.0,0.004,0.0\n"
      "2.0,1.0,0.5,0.5\n");
  const TraceJobStream stream = load_trace(file.path.string(), {}, BelowFloor::Drop);
  REQUIRE(stream.jobs.size() == 1);
  CHECK(stream.jobs[0].type == 1);
  CHECK(stream.stats.below_floor == 1);
}

TEST_CASE("window prefixes by count and by time") {
  const TempCsv file(
      "arrival_time,duration,cpu,mem\n"
      "1.0,1.0,0.5,0.5\n"
      "2.0,1.0,0.5,0.5\n"
      "3.0,1.0,0.5,0.5\n"
      "4.0,1.0,0.5,0.5\n");
  TraceWindow by_count;
  by_count.count = 2;
  CHECK(load_trace(file.path.string(), by_count).jobs.size() == 2);

  TraceWindow by_time;
  by_time.time_limit = 2.5;
  const auto timed = load_trace(file.path.string(), by_time);
  REQUIRE(timed.jobs.size() == 2);
  CHECK(timed.jobs.back().time == 2.0);

  TraceWindow both;
  both.count = 3;
  both.time_limit = 1.5;
  CHECK(load_trace(file.path.string(), both).jobs.size() == 1);
}

TEST_CASE("empty body yields an empty stream") {
  const TempCsv file("arrival_time,duration,cpu,mem\n");
  const TraceJobStream stream = load_trace(file.path.string());
  CHECK(stream.jobs.empty());
  CHECK(stream.stats.rows == 0);
}

TEST_CASE("bad header and missing file are fatal") {
  const TempCsv file("time,dur,cpu,mem\n1,1,0.5,0.5\n");
  CHECK_THROWS_AS(load_trace(file.path.string()), ValidationError);
  CHECK_THROWS_AS(load_trace("/nonexistent/trace.csv"), ValidationError);
}

TEST_CASE("derived job types carry dyadic demands and empirical service") {
  const TempCsv file(
      "arrival_time,duration,cpu,mem\n"
      "1.0,2.0,0.5,0.5\n"
      "2.0,4.0,0.5,0.5\n");
  const auto types = trace_job_types(load_trace(file.path.string()));
  REQUIRE(types.size() == 8);
  for (int i = 0; i < 8; ++i) {
    REQUIRE(types[static_cast<std::size_t>(i)].demand.size() == 1);
    CHECK(types[static_cast<std::size_t>(i)].demand[0] ==
          doctest::Approx(std::ldexp(1.0, -i)));
  }
  // Type 1 saw durations 2 and 4; its exponential law matches the mean 3.
  CHECK(service_mean(types[1].service) == doctest::Approx(3.0));
  // Unseen types default to unit mean.
  CHECK(service_mean(types[4].service) == doctest::Approx(1.0));
}
