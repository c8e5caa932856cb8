#include "stallsched/spec_file.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace stallsched {

namespace {

std::string trim(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

[[noreturn]] void fail(int line, const std::string& what) {
  throw ValidationError("spec line " + std::to_string(line) + ": " + what);
}

double parse_num(const std::string& tok, int line) {
  if (tok.empty()) fail(line, "expected a number");
  char* end = nullptr;
  const double v = std::strtod(tok.c_str(), &end);
  if (end != tok.c_str() + tok.size() || !std::isfinite(v))
    fail(line, "bad number '" + tok + "'");
  return v;
}

std::uint64_t parse_u64(const std::string& tok, int line) {
  std::uint64_t v = 0;
  const auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || p != tok.data() + tok.size())
    fail(line, "bad integer '" + tok + "'");
  return v;
}

bool parse_bool(const std::string& tok, int line) {
  if (tok == "true") return true;
  if (tok == "false") return false;
  fail(line, "expected true or false, got '" + tok + "'");
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = s.find(sep, start);
    out.push_back(trim(s.substr(start, pos - start)));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return out;
}

std::vector<double> parse_num_list(const std::string& s, int line) {
  std::vector<double> out;
  for (const auto& tok : split(s, ',')) out.push_back(parse_num(tok, line));
  return out;
}

// Splits "word k1=v1 k2=v2" into the leading word and its named arguments.
struct InlineArgs {
  std::string head;
  std::map<std::string, std::string> args;
};

InlineArgs parse_inline(const std::string& value, int line) {
  InlineArgs out;
  std::istringstream in(value);
  std::string tok;
  if (!(in >> out.head)) fail(line, "empty value");
  while (in >> tok) {
    const std::size_t eq = tok.find('=');
    if (eq == std::string::npos || eq == 0)
      fail(line, "expected key=value, got '" + tok + "'");
    const std::string key = tok.substr(0, eq);
    if (out.args.count(key)) fail(line, "duplicate argument '" + key + "'");
    out.args[key] = tok.substr(eq + 1);
  }
  return out;
}

const std::string& require_arg(const InlineArgs& in, const std::string& key, int line) {
  const auto it = in.args.find(key);
  if (it == in.args.end()) fail(line, "missing argument '" + key + "' after '" + in.head + "'");
  return it->second;
}

void reject_extra_args(const InlineArgs& in, const std::set<std::string>& allowed, int line) {
  for (const auto& [key, value] : in.args)
    if (!allowed.count(key)) fail(line, "unknown argument '" + key + "' after '" + in.head + "'");
}

ServiceLaw parse_service(const std::string& value, int line) {
  const InlineArgs in = parse_inline(value, line);
  if (in.head == "exp") {
    reject_extra_args(in, {"rate"}, line);
    return Exponential{parse_num(require_arg(in, "rate", line), line)};
  }
  if (in.head == "hyperexp") {
    reject_extra_args(in, {"p", "rate"}, line);
    HyperExponential h;
    h.probs = parse_num_list(require_arg(in, "p", line), line);
    h.rates = parse_num_list(require_arg(in, "rate", line), line);
    return h;
  }
  fail(line, "unknown service law '" + in.head + "' (expected exp or hyperexp)");
}

SolverChoice parse_solver(const std::string& value, int line) {
  const InlineArgs in = parse_inline(value, line);
  if (in.head == "exhaustive") {
    reject_extra_args(in, {}, line);
    return ExhaustiveSolver{};
  }
  if (in.head == "dp") {
    reject_extra_args(in, {"step"}, line);
    DpSolver dp;
    if (in.args.count("step")) dp.grid_step = parse_num_list(in.args.at("step"), line);
    return dp;
  }
  if (in.head == "greedy") {
    reject_extra_args(in, {}, line);
    return GreedySolver{};
  }
  fail(line, "unknown solver '" + in.head + "' (expected exhaustive, dp, or greedy)");
}

BetaPolicy parse_beta(const std::string& value, int line) {
  const InlineArgs in = parse_inline(value, line);
  if (in.head == "constant") {
    reject_extra_args(in, {"value"}, line);
    return ConstantBeta{parse_num(require_arg(in, "value", line), line)};
  }
  if (in.head == "sigmoid") {
    reject_extra_args(in, {"bar", "p", "z"}, line);
    SigmoidBeta s;
    s.beta_bar = parse_num(require_arg(in, "bar", line), line);
    s.p = parse_num(require_arg(in, "p", line), line);
    s.z = parse_num(require_arg(in, "z", line), line);
    return s;
  }
  fail(line, "unknown beta form '" + in.head + "' (expected constant or sigmoid)");
}

StallGate parse_gate(const std::string& value, int line) {
  const InlineArgs in = parse_inline(value, line);
  if (in.head == "none") {
    reject_extra_args(in, {}, line);
    return NoGate{};
  }
  if (in.head == "hard") {
    reject_extra_args(in, {"threshold"}, line);
    return HardLimitGate{parse_num(require_arg(in, "threshold", line), line)};
  }
  if (in.head == "linear") {
    reject_extra_args(in, {"threshold"}, line);
    return LinearGate{parse_num(require_arg(in, "threshold", line), line)};
  }
  fail(line, "unknown stall gate '" + in.head + "' (expected none, hard, or linear)");
}

bool name_ok(const std::string& s) {
  if (s.empty()) return false;
  for (const char c : s)
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_' && c != '-' && c != '.')
      return false;
  return true;
}

// Mutable policy section being assembled; resolved to a PolicyEntry when the
// section closes, so key order inside the section does not matter.
struct PolicyDraft {
  std::string name;
  int first_line = 0;
  std::optional<std::string> kind;
  std::optional<SolverChoice> solver;
  std::optional<BetaPolicy> beta;
  std::optional<StallGate> gate;
  std::optional<bool> early_reactivation;
  std::optional<double> eta;
  std::optional<double> token_lifetime_mean;
  std::optional<std::uint64_t> event_budget;
};

PolicyEntry resolve_policy(const PolicyDraft& d) {
  const int line = d.first_line;
  if (!d.kind) fail(line, "policy '" + d.name + "' is missing kind");
  PolicyEntry entry;
  entry.name = d.name;
  entry.event_budget = d.event_budget;
  auto reject = [&](bool set, const char* key) {
    if (set) fail(line, "key '" + std::string(key) + "' does not apply to kind " + *d.kind);
  };
  if (*d.kind == "alg1") {
    reject(d.eta.has_value(), "eta");
    reject(d.token_lifetime_mean.has_value(), "token_lifetime_mean");
    Alg1Config cfg;
    if (d.solver) cfg.solver = *d.solver;
    if (d.beta) cfg.beta = *d.beta;
    if (d.gate) cfg.gate = *d.gate;
    if (d.early_reactivation) cfg.early_reactivation = *d.early_reactivation;
    entry.config = cfg;
  } else if (*d.kind == "m14") {
    reject(d.beta.has_value(), "beta");
    reject(d.gate.has_value(), "stall_gate");
    reject(d.early_reactivation.has_value(), "early_reactivation");
    reject(d.eta.has_value(), "eta");
    reject(d.token_lifetime_mean.has_value(), "token_lifetime_mean");
    M14Config cfg;
    if (d.solver) cfg.solver = *d.solver;
    entry.config = cfg;
  } else if (*d.kind == "g16") {
    reject(d.solver.has_value(), "solver");
    reject(d.beta.has_value(), "beta");
    reject(d.gate.has_value(), "stall_gate");
    reject(d.early_reactivation.has_value(), "early_reactivation");
    G16Config cfg;
    if (d.eta) cfg.sampling_rate_per_queued_job = *d.eta;
    cfg.token_lifetime_mean = d.token_lifetime_mean;
    entry.config = cfg;
  } else {
    fail(line, "unknown policy kind '" + *d.kind + "' (expected alg1, m14, or g16)");
  }
  return entry;
}

void serialize_service(std::ostream& out, const ServiceLaw& law) {
  if (const auto* e = std::get_if<Exponential>(&law)) {
    out << "service = exp rate=" << format_double(e->rate) << "\n";
    return;
  }
  const auto& h = std::get<HyperExponential>(law);
  out << "service = hyperexp p=";
  for (std::size_t i = 0; i < h.probs.size(); ++i)
    out << (i ? "," : "") << format_double(h.probs[i]);
  out << " rate=";
  for (std::size_t i = 0; i < h.rates.size(); ++i)
    out << (i ? "," : "") << format_double(h.rates[i]);
  out << "\n";
}

void serialize_num_list(std::ostream& out, const std::vector<double>& v) {
  for (std::size_t i = 0; i < v.size(); ++i) out << (i ? "," : "") << format_double(v[i]);
}

}  // namespace

std::string format_double(double value) {
  char buf[64];
  const auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, p);
}

ExperimentSpec parse_spec(const std::string& text) {
  ExperimentSpec spec;
  spec.event_budget = 200000;
  spec.replications = 1;

  enum class Section {
    None,
    Experiment,
    Resources,
    Servers,
    Type,
    Workload,
    Arrivals,
    Policy,
    Sweep,
    Output
  };
  Section section = Section::None;

  bool have_experiment = false;
  bool have_servers = false;
  bool have_arrivals = false;
  std::optional<std::uint32_t> server_count;
  std::optional<ResourceVector> server_capacity;
  std::vector<ServerSpec> server_list;
  JobType* current_type = nullptr;
  std::optional<double> zeta;
  std::optional<ResourceVector> direction;
  std::optional<std::vector<double>> lambda;
  std::optional<std::string> law_name;
  std::optional<double> sigma;
  std::optional<double> batch_rate;
  std::vector<BatchVector> batch_support;
  std::optional<std::string> trace_path;
  TraceWindow window;
  std::optional<std::string> below_floor;
  std::optional<PolicyDraft> policy;
  SweepPlan sweep;
  bool have_sweep = false;

  auto close_policy = [&]() {
    if (policy) {
      spec.policies.push_back(resolve_policy(*policy));
      policy.reset();
    }
  };

  std::istringstream in(text);
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    // Comments run from a '#' that starts the line or follows whitespace.
    std::string body = raw;
    for (std::size_t i = 0; i < body.size(); ++i) {
      if (body[i] == '#' &&
          (i == 0 || std::isspace(static_cast<unsigned char>(body[i - 1])))) {
        body.erase(i);
        break;
      }
    }
    body = trim(body);
    if (body.empty()) continue;

    if (body.front() == '[') {
      if (body.back() != ']') fail(line, "unterminated section header");
      const std::string inner = trim(body.substr(1, body.size() - 2));
      const std::size_t sp = inner.find(' ');
      const std::string kind = sp == std::string::npos ? inner : trim(inner.substr(0, sp));
      const std::string arg = sp == std::string::npos ? "" : trim(inner.substr(sp + 1));
      close_policy();
      current_type = nullptr;

      if (kind == "experiment") {
        section = Section::Experiment;
        have_experiment = true;
      } else if (kind == "resources") {
        section = Section::Resources;
      } else if (kind == "servers") {
        section = Section::Servers;
        have_servers = true;
      } else if (kind == "type") {
        section = Section::Type;
        if (!name_ok(arg)) fail(line, "type needs a name: [type NAME]");
        spec.types.push_back(JobType{arg, {}, Exponential{1.0}});
        current_type = &spec.types.back();
      } else if (kind == "workload") {
        section = Section::Workload;
      } else if (kind == "arrivals") {
        section = Section::Arrivals;
        have_arrivals = true;
      } else if (kind == "policy") {
        section = Section::Policy;
        if (!name_ok(arg)) fail(line, "policy needs a name: [policy NAME]");
        policy = PolicyDraft{};
        policy->name = arg;
        policy->first_line = line;
      } else if (kind == "sweep") {
        section = Section::Sweep;
        have_sweep = true;
      } else if (kind == "output") {
        section = Section::Output;
      } else {
        fail(line, "unknown section [" + inner + "]");
      }
      continue;
    }

    const std::size_t eq = body.find('=');
    if (eq == std::string::npos) fail(line, "expected key = value");
    const std::string key = trim(body.substr(0, eq));
    const std::string value = trim(body.substr(eq + 1));
    if (key.empty()) fail(line, "empty key");
    if (value.empty()) fail(line, "empty value for '" + key + "'");

    switch (section) {
      case Section::None:
        fail(line, "key outside any section");
      case Section::Experiment:
        if (key == "name") {
          if (!name_ok(value)) fail(line, "experiment name must be [A-Za-z0-9_.-]+");
          spec.name = value;
        } else if (key == "event_budget") {
          if (value == "auto") {
            spec.auto_budget = true;
          } else {
            spec.event_budget = parse_u64(value, line);
          }
        } else if (key == "replications") {
          spec.replications = static_cast<std::uint32_t>(parse_u64(value, line));
        } else if (key == "seed") {
          spec.seed = parse_u64(value, line);
        } else if (key == "warmup") {
          spec.warmup_fraction = parse_num(value, line);
        } else if (key == "timeseries_points") {
          spec.timeseries_points = static_cast<std::uint32_t>(parse_u64(value, line));
        } else {
          fail(line, "unknown experiment key '" + key + "'");
        }
        break;
      case Section::Resources:
        if (key == "names") {
          for (const auto& n : split(value, ',')) {
            if (!name_ok(n)) fail(line, "bad resource name '" + n + "'");
            spec.resource_names.push_back(n);
          }
        } else {
          fail(line, "unknown resources key '" + key + "'");
        }
        break;
      case Section::Servers:
        if (key == "count") {
          server_count = static_cast<std::uint32_t>(parse_u64(value, line));
        } else if (key == "capacity") {
          server_capacity = parse_num_list(value, line);
        } else if (key == "server") {
          server_list.push_back(ServerSpec{parse_num_list(value, line)});
        } else {
          fail(line, "unknown servers key '" + key + "'");
        }
        break;
      case Section::Type:
        if (key == "demand") {
          current_type->demand = parse_num_list(value, line);
        } else if (key == "service") {
          current_type->service = parse_service(value, line);
        } else {
          fail(line, "unknown type key '" + key + "'");
        }
        break;
      case Section::Workload:
        if (key == "zeta") {
          zeta = parse_num(value, line);
        } else if (key == "direction") {
          direction = parse_num_list(value, line);
        } else if (key == "lambda") {
          lambda = parse_num_list(value, line);
        } else {
          fail(line, "unknown workload key '" + key + "'");
        }
        break;
      case Section::Arrivals:
        if (key == "law") {
          law_name = value;
        } else if (key == "sigma") {
          sigma = parse_num(value, line);
        } else if (key == "batch_rate") {
          batch_rate = parse_num(value, line);
        } else if (key == "batch") {
          // counts:probability, e.g. 1,0:0.5
          const std::size_t colon = value.find(':');
          if (colon == std::string::npos) fail(line, "batch needs counts:probability");
          BatchVector v;
          for (const double c : parse_num_list(value.substr(0, colon), line)) {
            if (c < 0 || c != std::floor(c)) fail(line, "batch counts must be whole");
            v.counts.push_back(static_cast<std::int32_t>(c));
          }
          v.probability = parse_num(trim(value.substr(colon + 1)), line);
          batch_support.push_back(std::move(v));
        } else if (key == "trace") {
          trace_path = value;
        } else if (key == "window_count") {
          window.count = parse_u64(value, line);
        } else if (key == "window_time") {
          window.time_limit = parse_num(value, line);
        } else if (key == "below_floor") {
          below_floor = value;
        } else {
          fail(line, "unknown arrivals key '" + key + "'");
        }
        break;
      case Section::Policy:
        if (key == "kind") {
          policy->kind = value;
        } else if (key == "solver") {
          policy->solver = parse_solver(value, line);
        } else if (key == "beta") {
          policy->beta = parse_beta(value, line);
        } else if (key == "stall_gate") {
          policy->gate = parse_gate(value, line);
        } else if (key == "early_reactivation") {
          policy->early_reactivation = parse_bool(value, line);
        } else if (key == "eta") {
          policy->eta = parse_num(value, line);
        } else if (key == "token_lifetime_mean") {
          policy->token_lifetime_mean = parse_num(value, line);
        } else if (key == "event_budget") {
          policy->event_budget = parse_u64(value, line);
        } else {
          fail(line, "unknown policy key '" + key + "'");
        }
        break;
      case Section::Sweep:
        if (key == "axis") {
          sweep.axis = value;
        } else if (key == "values") {
          sweep.values = parse_num_list(value, line);
        } else {
          fail(line, "unknown sweep key '" + key + "'");
        }
        break;
      case Section::Output:
        if (key == "dir") {
          spec.output_dir = value;
        } else {
          fail(line, "unknown output key '" + key + "'");
        }
        break;
    }
  }
  close_policy();

  if (!have_experiment || spec.name.empty())
    throw ValidationError("spec: missing [experiment] section with a name");
  if (!have_servers) throw ValidationError("spec: missing [servers] section");
  if (!have_arrivals || !law_name)
    throw ValidationError("spec: missing [arrivals] section with a law");

  // Assemble servers.
  if (!server_list.empty()) {
    if (server_count || server_capacity)
      throw ValidationError("spec: [servers] mixes server= lines with count/capacity");
    spec.servers = std::move(server_list);
  } else {
    if (!server_count || !server_capacity)
      throw ValidationError("spec: [servers] needs count and capacity (or server= lines)");
    if (*server_count == 0) throw ValidationError("spec: server count must be positive");
    spec.servers.assign(*server_count, ServerSpec{*server_capacity});
  }

  // Assemble the workload.
  if (lambda && (zeta || direction))
    throw ValidationError("spec: [workload] gives both lambda and zeta/direction");
  if (lambda) {
    spec.workload = ExplicitWorkload{*lambda};
  } else if (zeta) {
    IntensityWorkload w;
    w.zeta = *zeta;
    if (direction) w.direction = *direction;
    spec.workload = w;
  } else if (direction) {
    throw ValidationError("spec: [workload] direction needs zeta");
  } else {
    spec.workload = NoWorkload{};
  }

  // Assemble the arrival law.
  auto reject_key = [&](bool set, const char* key) {
    if (set)
      throw ValidationError("spec: arrivals key '" + std::string(key) +
                            "' does not apply to law " + *law_name);
  };
  if (*law_name == "poisson" || *law_name == "lognormal") {
    reject_key(batch_rate.has_value(), "batch_rate");
    reject_key(!batch_support.empty(), "batch");
    reject_key(trace_path.has_value(), "trace");
    reject_key(window.count.has_value(), "window_count");
    reject_key(window.time_limit.has_value(), "window_time");
    reject_key(below_floor.has_value(), "below_floor");
    if (*law_name == "poisson") {
      reject_key(sigma.has_value(), "sigma");
      spec.arrivals = PoissonLaw{};
    } else {
      LogNormalLaw law;
      if (sigma) law.sigma = *sigma;
      spec.arrivals = law;
    }
  } else if (*law_name == "batch") {
    reject_key(sigma.has_value(), "sigma");
    reject_key(trace_path.has_value(), "trace");
    reject_key(window.count.has_value(), "window_count");
    reject_key(window.time_limit.has_value(), "window_time");
    reject_key(below_floor.has_value(), "below_floor");
    BatchLaw law;
    law.rate = batch_rate;
    law.support = std::move(batch_support);
    spec.arrivals = law;
  } else if (*law_name == "trace") {
    reject_key(sigma.has_value(), "sigma");
    reject_key(batch_rate.has_value(), "batch_rate");
    reject_key(!batch_support.empty(), "batch");
    if (!trace_path) throw ValidationError("spec: trace law needs trace = <path>");
    TraceLaw law;
    law.path = *trace_path;
    law.window = window;
    if (below_floor) {
      if (*below_floor == "clamp") {
        law.below_floor = BelowFloor::Clamp;
      } else if (*below_floor == "drop") {
        law.below_floor = BelowFloor::Drop;
      } else {
        throw ValidationError("spec: below_floor must be clamp or drop");
      }
    }
    spec.arrivals = law;
  } else {
    throw ValidationError("spec: unknown arrival law '" + *law_name + "'");
  }

  if (have_sweep) {
    spec.sweep = std::move(sweep);
  }

  validate_experiment_spec(spec);
  return spec;
}

ExperimentSpec load_spec_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open spec file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_spec(buf.str());
}

std::string serialize_spec(const ExperimentSpec& spec) {
  std::ostringstream out;
  out << "[experiment]\n";
  out << "name = " << spec.name << "\n";
  if (spec.auto_budget) {
    out << "event_budget = auto\n";
  } else {
    out << "event_budget = " << spec.event_budget << "\n";
  }
  out << "replications = " << spec.replications << "\n";
  out << "seed = " << spec.seed << "\n";
  out << "warmup = " << format_double(spec.warmup_fraction) << "\n";
  out << "timeseries_points = " << spec.timeseries_points << "\n";

  if (!spec.resource_names.empty()) {
    out << "\n[resources]\nnames = ";
    for (std::size_t i = 0; i < spec.resource_names.size(); ++i)
      out << (i ? "," : "") << spec.resource_names[i];
    out << "\n";
  }

  out << "\n[servers]\n";
  const bool homogeneous =
      std::all_of(spec.servers.begin(), spec.servers.end(),
                  [&](const ServerSpec& s) { return s == spec.servers.front(); });
  if (homogeneous && !spec.servers.empty()) {
    out << "count = " << spec.servers.size() << "\n";
    out << "capacity = ";
    serialize_num_list(out, spec.servers.front().capacity);
    out << "\n";
  } else {
    for (const auto& s : spec.servers) {
      out << "server = ";
      serialize_num_list(out, s.capacity);
      out << "\n";
    }
  }

  for (const auto& type : spec.types) {
    out << "\n[type " << type.name << "]\n";
    out << "demand = ";
    serialize_num_list(out, type.demand);
    out << "\n";
    serialize_service(out, type.service);
  }

  if (const auto* w = std::get_if<IntensityWorkload>(&spec.workload)) {
    out << "\n[workload]\n";
    out << "zeta = " << format_double(w->zeta) << "\n";
    if (!w->direction.empty()) {
      out << "direction = ";
      serialize_num_list(out, w->direction);
      out << "\n";
    }
  } else if (const auto* w2 = std::get_if<ExplicitWorkload>(&spec.workload)) {
    out << "\n[workload]\n";
    out << "lambda = ";
    serialize_num_list(out, w2->lambda);
    out << "\n";
  }

  out << "\n[arrivals]\n";
  if (std::holds_alternative<PoissonLaw>(spec.arrivals)) {
    out << "law = poisson\n";
  } else if (const auto* ln = std::get_if<LogNormalLaw>(&spec.arrivals)) {
    out << "law = lognormal\n";
    out << "sigma = " << format_double(ln->sigma) << "\n";
  } else if (const auto* b = std::get_if<BatchLaw>(&spec.arrivals)) {
    out << "law = batch\n";
    if (b->rate) out << "batch_rate = " << format_double(*b->rate) << "\n";
    for (const auto& v : b->support) {
      out << "batch = ";
      for (std::size_t i = 0; i < v.counts.size(); ++i)
        out << (i ? "," : "") << v.counts[i];
      out << ":" << format_double(v.probability) << "\n";
    }
  } else {
    const auto& t = std::get<TraceLaw>(spec.arrivals);
    out << "law = trace\n";
    out << "trace = " << t.path << "\n";
    if (t.window.count) out << "window_count = " << *t.window.count << "\n";
    if (t.window.time_limit)
      out << "window_time = " << format_double(*t.window.time_limit) << "\n";
    out << "below_floor = " << (t.below_floor == BelowFloor::Clamp ? "clamp" : "drop")
        << "\n";
  }

  for (const auto& entry : spec.policies) {
    out << "\n[policy " << entry.name << "]\n";
    if (const auto* a = std::get_if<Alg1Config>(&entry.config)) {
      out << "kind = alg1\n";
      out << "solver = ";
      if (std::holds_alternative<ExhaustiveSolver>(a->solver)) {
        out << "exhaustive\n";
      } else if (const auto* dp = std::get_if<DpSolver>(&a->solver)) {
        out << "dp";
        if (dp->grid_step) {
          out << " step=";
          serialize_num_list(out, *dp->grid_step);
        }
        out << "\n";
      } else {
        out << "greedy\n";
      }
      if (const auto* c = std::get_if<ConstantBeta>(&a->beta)) {
        out << "beta = constant value=" << format_double(c->beta) << "\n";
      } else {
        const auto& s = std::get<SigmoidBeta>(a->beta);
        out << "beta = sigmoid bar=" << format_double(s.beta_bar)
            << " p=" << format_double(s.p) << " z=" << format_double(s.z) << "\n";
      }
      if (std::holds_alternative<NoGate>(a->gate)) {
        out << "stall_gate = none\n";
      } else if (const auto* h = std::get_if<HardLimitGate>(&a->gate)) {
        out << "stall_gate = hard threshold=" << format_double(h->threshold) << "\n";
      } else {
        out << "stall_gate = linear threshold="
            << format_double(std::get<LinearGate>(a->gate).threshold) << "\n";
      }
      out << "early_reactivation = " << (a->early_reactivation ? "true" : "false")
          << "\n";
    } else if (const auto* m = std::get_if<M14Config>(&entry.config)) {
      out << "kind = m14\n";
      out << "solver = ";
      if (std::holds_alternative<ExhaustiveSolver>(m->solver)) {
        out << "exhaustive\n";
      } else if (const auto* dp = std::get_if<DpSolver>(&m->solver)) {
        out << "dp";
        if (dp->grid_step) {
          out << " step=";
          serialize_num_list(out, *dp->grid_step);
        }
        out << "\n";
      } else {
        out << "greedy\n";
      }
    } else {
      const auto& g = std::get<G16Config>(entry.config);
      out << "kind = g16\n";
      out << "eta = " << format_double(g.sampling_rate_per_queued_job) << "\n";
      if (g.token_lifetime_mean)
        out << "token_lifetime_mean = " << format_double(*g.token_lifetime_mean) << "\n";
    }
    if (entry.event_budget) out << "event_budget = " << *entry.event_budget << "\n";
  }

  if (spec.sweep) {
    out << "\n[sweep]\n";
    out << "axis = " << spec.sweep->axis << "\n";
    out << "values = ";
    serialize_num_list(out, spec.sweep->values);
    out << "\n";
  }

  if (!spec.output_dir.empty()) {
    out << "\n[output]\ndir = " << spec.output_dir << "\n";
  }
  return out.str();
}

void validate_experiment_spec(const ExperimentSpec& spec) {
  if (!name_ok(spec.name)) throw ValidationError("experiment name must be [A-Za-z0-9_.-]+");
  if (spec.servers.empty()) throw ValidationError("at least one server is required");
  const std::size_t resources = spec.servers.front().capacity.size();
  if (resources == 0) throw ValidationError("servers need at least one resource");
  for (const auto& s : spec.servers) {
    if (s.capacity.size() != resources)
      throw ValidationError("all servers must declare the same resources");
    for (const double c : s.capacity)
      if (!(std::isfinite(c) && c > 0.0))
        throw ValidationError("server capacities must be positive");
  }
  if (!spec.resource_names.empty() && spec.resource_names.size() != resources)
    throw ValidationError("resource names do not match the capacity length");

  const bool trace_law = std::holds_alternative<TraceLaw>(spec.arrivals);
  if (trace_law) {
    if (!spec.types.empty())
      throw ValidationError("trace workloads define their own types; remove [type] sections");
    if (resources != 1)
      throw ValidationError("trace workloads run on single-resource unit servers");
    if (!std::holds_alternative<NoWorkload>(spec.workload))
      throw ValidationError("trace workloads take no [workload] section");
    const auto& t = std::get<TraceLaw>(spec.arrivals);
    if (t.path.empty()) throw ValidationError("trace law needs a path");
    if (t.window.count && *t.window.count == 0)
      throw ValidationError("window_count must be positive");
  } else {
    if (spec.types.empty()) throw ValidationError("at least one [type] is required");
    if (spec.auto_budget)
      throw ValidationError("event_budget auto applies only to trace workloads");
  }

  std::set<std::string> type_names;
  for (const auto& type : spec.types) {
    if (!name_ok(type.name)) throw ValidationError("bad type name '" + type.name + "'");
    if (!type_names.insert(type.name).second)
      throw ValidationError("duplicate type name '" + type.name + "'");
    if (type.demand.size() != resources)
      throw ValidationError("type '" + type.name + "' demand does not match the resources");
    for (const double d : type.demand)
      if (!(std::isfinite(d) && d >= 0.0))
        throw ValidationError("type '" + type.name + "' has a negative demand");
    validate_service_law(type.service, type.name);
  }

  const std::size_t J = spec.types.size();
  if (const auto* w = std::get_if<IntensityWorkload>(&spec.workload)) {
    if (!(std::isfinite(w->zeta) && w->zeta > 0.0))
      throw ValidationError("zeta must be positive");
    if (std::holds_alternative<BatchLaw>(spec.arrivals)) {
      if (!w->direction.empty())
        throw ValidationError("batch laws take their direction from the batch mix; drop it");
    } else {
      if (w->direction.size() != J)
        throw ValidationError("workload direction does not match the types");
      bool positive = false;
      for (const double u : w->direction) {
        if (!(std::isfinite(u) && u >= 0.0))
          throw ValidationError("workload direction must be nonnegative");
        positive = positive || u > 0.0;
      }
      if (!positive) throw ValidationError("workload direction is all zero");
    }
  } else if (const auto* w2 = std::get_if<ExplicitWorkload>(&spec.workload)) {
    if (w2->lambda.size() != J)
      throw ValidationError("lambda does not match the types");
    for (const double l : w2->lambda)
      if (!(std::isfinite(l) && l >= 0.0))
        throw ValidationError("lambda must be nonnegative");
  }

  if (const auto* ln = std::get_if<LogNormalLaw>(&spec.arrivals)) {
    if (!(std::isfinite(ln->sigma) && ln->sigma > 0.0))
      throw ValidationError("lognormal sigma must be positive");
    if (std::holds_alternative<NoWorkload>(spec.workload))
      throw ValidationError("lognormal arrivals need a [workload] section");
  }
  if (std::holds_alternative<PoissonLaw>(spec.arrivals) &&
      std::holds_alternative<NoWorkload>(spec.workload))
    throw ValidationError("poisson arrivals need a [workload] section");
  if (const auto* b = std::get_if<BatchLaw>(&spec.arrivals)) {
    if (b->support.empty()) throw ValidationError("batch law needs batch = lines");
    double total = 0.0;
    for (const auto& v : b->support) {
      if (v.counts.size() != J)
        throw ValidationError("batch vector does not match the types");
      if (!(std::isfinite(v.probability) && v.probability > 0.0))
        throw ValidationError("batch probabilities must be positive");
      total += v.probability;
    }
    if (std::abs(total - 1.0) > 1e-9)
      throw ValidationError("batch probabilities must sum to 1");
    if (b->rate) {
      if (!(std::isfinite(*b->rate) && *b->rate > 0.0))
        throw ValidationError("batch_rate must be positive");
      if (!std::holds_alternative<NoWorkload>(spec.workload))
        throw ValidationError("give either batch_rate or a [workload] zeta, not both");
    } else {
      if (!std::holds_alternative<IntensityWorkload>(spec.workload))
        throw ValidationError("batch law needs batch_rate or a [workload] zeta");
    }
  }

  if (spec.policies.empty()) throw ValidationError("at least one [policy] is required");
  std::set<std::string> policy_names;
  for (const auto& entry : spec.policies) {
    if (!policy_names.insert(entry.name).second)
      throw ValidationError("duplicate policy name '" + entry.name + "'");
    validate_policy(entry.config);
    if (entry.event_budget && *entry.event_budget == 0)
      throw ValidationError("policy event_budget must be positive");
  }

  if (!spec.auto_budget && spec.event_budget == 0)
    throw ValidationError("event_budget must be positive");
  if (spec.replications < 1) throw ValidationError("replications must be >= 1");
  if (!(spec.warmup_fraction >= 0.0 && spec.warmup_fraction < 1.0))
    throw ValidationError("warmup must lie in [0,1)");
  if (spec.timeseries_points < 1)
    throw ValidationError("timeseries_points must be positive");

  if (spec.sweep) {
    if (spec.sweep->axis != "servers" && spec.sweep->axis != "zeta")
      throw ValidationError("sweep axis must be servers or zeta");
    if (spec.sweep->values.empty()) throw ValidationError("sweep needs values");
    for (const double v : spec.sweep->values) {
      if (!std::isfinite(v) || v <= 0.0)
        throw ValidationError("sweep values must be positive");
      if (spec.sweep->axis == "servers" && v != std::floor(v))
        throw ValidationError("server counts must be whole numbers");
    }
    if (spec.sweep->axis == "servers") {
      for (const auto& s : spec.servers)
        if (!(s == spec.servers.front()))
          throw ValidationError("server sweeps need a homogeneous fleet");
    }
    if (spec.sweep->axis == "zeta" &&
        !std::holds_alternative<IntensityWorkload>(spec.workload))
      throw ValidationError("zeta sweeps need an intensity workload");
  }
}

}  // namespace stallsched
