#include <algorithm>
#include <filesystem>
#include <string>
#include <vector>

#include "doctest.h"
#include "stallsched/spec_file.hpp"

using namespace stallsched;

namespace {

const char* kFullSpec = R"(# one server, two job sizes
[experiment]
name = demo
event_budget = 50000
replications = 5
seed = 42
warmup = 0.25
timeseries_points = 256

[resources]
names = units

[servers]
count = 1
capacity = 6

[type big]
demand = 4
service = exp rate=1

[type small]
demand = 1
service = hyperexp p=0.5,0.5 rate=1,0.1111

[workload]
zeta = 0.89
direction = 0.5,4

[arrivals]
law = poisson

[policy alg1]
kind = alg1
solver = exhaustive
beta = sigmoid bar=0.9 p=-0.05 z=0.005
stall_gate = linear threshold=0.1
early_reactivation = true

[policy fixed]
kind = m14
solver = dp step=1

[policy sampler]
kind = g16
eta = 2
token_lifetime_mean = 1.5
event_budget = 100000

[output]
dir = out/demo
)";

ExperimentSpec minimal_spec() {
  return parse_spec(R"(
[experiment]
name = tiny
[servers]
count = 1
capacity = 6
[type a]
demand = 1
[workload]
lambda = 1
[arrivals]
law = poisson
[policy p]
kind = m14
)");
}

}  // namespace

TEST_CASE("a full experiment file parses into the expected structure") {
  const ExperimentSpec spec = parse_spec(kFullSpec);
  CHECK(spec.name == "demo");
  CHECK(spec.event_budget == 50000);
  CHECK_FALSE(spec.auto_budget);
  CHECK(spec.replications == 5);
  CHECK(spec.seed == 42);
  CHECK(spec.warmup_fraction == 0.25);
  CHECK(spec.timeseries_points == 256);
  CHECK(spec.resource_names == std::vector<std::string>{"units"});
  REQUIRE(spec.servers.size() == 1);
  CHECK(spec.servers[0].capacity == ResourceVector{6.0});
  REQUIRE(spec.types.size() == 2);
  CHECK(spec.types[0].name == "big");
  CHECK(spec.types[0].demand == ResourceVector{4.0});
  CHECK(spec.types[0].service == ServiceLaw{Exponential{1.0}});
  const auto& hyper = std::get<HyperExponential>(spec.types[1].service);
  CHECK(hyper.probs == std::vector<double>{0.5, 0.5});
  CHECK(hyper.rates == std::vector<double>{1.0, 0.1111});
  const auto& w = std::get<IntensityWorkload>(spec.workload);
  CHECK(w.zeta == 0.89);
  CHECK(w.direction == ResourceVector{0.5, 4.0});
  CHECK(std::holds_alternative<PoissonLaw>(spec.arrivals));
  REQUIRE(spec.policies.size() == 3);
  const auto& alg1 = std::get<Alg1Config>(spec.policies[0].config);
  CHECK(alg1.beta == BetaPolicy{SigmoidBeta{0.9, -0.05, 0.005}});
  CHECK(alg1.gate == StallGate{LinearGate{0.1}});
  CHECK(alg1.early_reactivation);
  const auto& m14 = std::get<M14Config>(spec.policies[1].config);
  const auto& dp = std::get<DpSolver>(m14.solver);
  REQUIRE(dp.grid_step.has_value());
  CHECK(*dp.grid_step == std::vector<double>{1.0});
  const auto& g16 = std::get<G16Config>(spec.policies[2].config);
  CHECK(g16.sampling_rate_per_queued_job == 2.0);
  CHECK(g16.token_lifetime_mean == 1.5);
  CHECK(spec.policies[2].event_budget == 100000);
  CHECK_FALSE(spec.policies[0].event_budget.has_value());
  CHECK(spec.output_dir == "out/demo");
  CHECK_FALSE(spec.sweep.has_value());
}

TEST_CASE("serialize then parse returns the identical spec") {
  SUBCASE("full example") {
    const ExperimentSpec spec = parse_spec(kFullSpec);
    CHECK(parse_spec(serialize_spec(spec)) == spec);
  }
  SUBCASE("minimal example") {
    const ExperimentSpec spec = minimal_spec();
    CHECK(parse_spec(serialize_spec(spec)) == spec);
  }
  SUBCASE("heterogeneous servers and batch law") {
    ExperimentSpec spec = minimal_spec();
    spec.servers = {ServerSpec{{1.0}}, ServerSpec{{2.5}}};
    spec.workload = IntensityWorkload{0.9, {}};
    spec.arrivals = BatchLaw{std::nullopt, {{{2}, 0.25}, {{0}, 0.75}}};
    validate_experiment_spec(spec);
    CHECK(parse_spec(serialize_spec(spec)) == spec);
  }
  SUBCASE("trace law with window and sweep") {
    ExperimentSpec spec;
    spec.name = "trace-run";
    spec.servers.assign(800, ServerSpec{{1.0}});
    spec.workload = NoWorkload{};
    TraceLaw law;
    law.path = "data/jobs.csv";
    law.window.count = 100000;
    law.below_floor = BelowFloor::Drop;
    spec.arrivals = law;
    spec.policies = {{"fixed", M14Config{DpSolver{}}, std::nullopt}};
    spec.auto_budget = true;
    spec.replications = 3;
    spec.sweep = SweepPlan{"servers", {800, 1000, 1250}};
    validate_experiment_spec(spec);
    CHECK(parse_spec(serialize_spec(spec)) == spec);
  }
  SUBCASE("awkward doubles survive exactly") {
    ExperimentSpec spec = minimal_spec();
    spec.workload = ExplicitWorkload{{0.1 + 0.2}};
    spec.types[0].demand = {5e-324};
    spec.warmup_fraction = 2.0 / 3.0;
    validate_experiment_spec(spec);
    CHECK(parse_spec(serialize_spec(spec)) == spec);
  }
}

TEST_CASE("shortest round-trip double formatting") {
  CHECK(format_double(1.0) == "1");
  CHECK(format_double(0.89) == "0.89");
  CHECK(format_double(-0.05) == "-0.05");
  for (const double v : {0.1 + 0.2, 1.0 / 3.0, 6.02e23, 5e-324}) {
    char* end = nullptr;
    CHECK(std::strtod(format_double(v).c_str(), &end) == v);
  }
}

TEST_CASE("parse failures carry line numbers and reasons") {
  auto fails_with = [](const std::string& text, const std::string& fragment) {
    try {
      parse_spec(text);
      FAIL_CHECK("expected ValidationError for fragment: " << fragment);
    } catch (const ValidationError& e) {
      CHECK(std::string(e.what()).find(fragment) != std::string::npos);
    }
  };
  fails_with("[experiment]\nname = x\nbogus_key = 1\n", "unknown experiment key");
  fails_with("[bogus]\n", "unknown section");
  fails_with("key_without_section = 1\n", "outside any section");
  fails_with("[experiment]\nname = has space\n", "name must be");
  fails_with("[experiment]\nname = x\n[servers]\ncount = 1\n[arrivals]\nlaw = poisson\n",
             "capacity");
  fails_with("[experiment]\nname = x\n[servers]\ncount = 1\ncapacity = 1\n"
             "[type a]\ndemand = 1\nservice = weibull k=2\n",
             "unknown service law");
  fails_with("[experiment]\nname = x\n[servers]\ncount = 1\ncapacity = 1\n"
             "[type a]\ndemand = 1\n[workload]\nlambda = 1\nzeta = 0.9\n"
             "[arrivals]\nlaw = poisson\n[policy p]\nkind = m14\n",
             "both lambda and zeta");
  fails_with("[experiment]\nname = x\n[servers]\ncount = 1\ncapacity = 1\n"
             "[type a]\ndemand = 1\n[workload]\nlambda = 1\n[arrivals]\nlaw = poisson\n"
             "[policy p]\nsolver = greedy\n",
             "missing kind");
  fails_with("[experiment]\nname = x\n[servers]\ncount = 1\ncapacity = 1\n"
             "[type a]\ndemand = 1\n[workload]\nlambda = 1\n[arrivals]\nlaw = poisson\n"
             "[policy p]\nkind = m14\nbeta = constant value=0.5\n",
             "does not apply");
  fails_with("[experiment]\nname = x\n[servers]\ncount = 1\ncapacity = 1\n"
             "[type a]\ndemand = 1\n[workload]\nlambda = 1\n[arrivals]\nlaw = poisson\n"
             "[policy p]\nkind = alg1\nbeta = constant value=nope\n",
             "bad number");
}

TEST_CASE("structural validation rejects inconsistent specs") {
  auto rejects = [](ExperimentSpec spec, const std::string& fragment) {
    try {
      validate_experiment_spec(spec);
      FAIL_CHECK("expected ValidationError: " << fragment);
    } catch (const ValidationError& e) {
      CHECK(std::string(e.what()).find(fragment) != std::string::npos);
    }
  };
  const ExperimentSpec base = minimal_spec();

  {
    ExperimentSpec s = base;
    s.types[0].demand = {1.0, 2.0};
    rejects(s, "does not match the resources");
  }
  {
    ExperimentSpec s = base;
    s.workload = ExplicitWorkload{{1.0, 2.0}};
    rejects(s, "lambda does not match");
  }
  {
    ExperimentSpec s = base;
    s.workload = NoWorkload{};
    rejects(s, "need a [workload]");
  }
  {
    ExperimentSpec s = base;
    s.policies.push_back(s.policies.front());
    rejects(s, "duplicate policy name");
  }
  {
    ExperimentSpec s = base;
    s.types.push_back(s.types.front());
    rejects(s, "duplicate type name");
  }
  {
    ExperimentSpec s = base;
    s.replications = 0;
    rejects(s, "replications");
  }
  {
    ExperimentSpec s = base;
    s.auto_budget = true;
    rejects(s, "auto applies only to trace");
  }
  {
    ExperimentSpec s = base;
    s.arrivals = BatchLaw{2.0, {{{1}, 0.6}, {{0}, 0.6}}};
    s.workload = NoWorkload{};
    rejects(s, "sum to 1");
  }
  {
    ExperimentSpec s = base;
    s.arrivals = BatchLaw{2.0, {{{1}, 1.0}}};
    rejects(s, "not both");
  }
  {
    ExperimentSpec s = base;
    s.sweep = SweepPlan{"zeta", {0.8, 0.9}};
    s.workload = ExplicitWorkload{{1.0}};
    rejects(s, "zeta sweeps need an intensity workload");
  }
  {
    ExperimentSpec s = base;
    s.sweep = SweepPlan{"servers", {20.5}};
    rejects(s, "whole numbers");
  }
  {
    ExperimentSpec s = base;
    s.servers = {ServerSpec{{1.0}}, ServerSpec{{2.0}}};
    s.sweep = SweepPlan{"servers", {10}};
    rejects(s, "homogeneous");
  }
}

TEST_CASE("comments and blank lines are ignored, inline comments too") {
  const ExperimentSpec spec = parse_spec(R"(
# leading comment
[experiment]
name = commented   # trailing note

[servers]
count = 2          # fleet size
capacity = 3

[type a]
demand = 1

[workload]
lambda = 0.5

[arrivals]
law = poisson

[policy p]
kind = m14
)");
  CHECK(spec.name == "commented");
  CHECK(spec.servers.size() == 2);
}

TEST_CASE("sweep sections parse and serialize") {
  ExperimentSpec spec = minimal_spec();
  spec.workload = IntensityWorkload{0.89, {1.0}};
  spec.sweep = SweepPlan{"zeta", {0.8, 0.85, 0.9, 0.95}};
  validate_experiment_spec(spec);
  const ExperimentSpec back = parse_spec(serialize_spec(spec));
  REQUIRE(back.sweep.has_value());
  CHECK(back.sweep->axis == "zeta");
  CHECK(back.sweep->values == std::vector<double>{0.8, 0.85, 0.9, 0.95});
  CHECK(back == spec);
}

TEST_CASE("missing spec file raises a validation error") {
  CHECK_THROWS_AS(load_spec_file("/nonexistent/path.spec"), ValidationError);
}

TEST_CASE("every bundled spec file parses, validates and round-trips") {
  namespace fs = std::filesystem;
  const fs::path dir = fs::path(STALLSCHED_SOURCE_DIR) / "specs";
  std::vector<std::string> names;
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.path().extension() == ".spec") names.push_back(entry.path().string());
  std::sort(names.begin(), names.end());
  REQUIRE(names.size() == 8);
  for (const auto& path : names) {
    CAPTURE(path);
    const ExperimentSpec spec = load_spec_file(path);
    validate_experiment_spec(spec);
    CHECK(fs::path(path).stem().string() == spec.name);
    CHECK(parse_spec(serialize_spec(spec)) == spec);
  }
}
