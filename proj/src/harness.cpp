#include "stallsched/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

namespace stallsched {

namespace {

std::vector<double> service_means(const std::vector<JobType>& types) {
  std::vector<double> mu;
  mu.reserve(types.size());
  for (const auto& t : types) mu.push_back(service_mean(t.service));
  return mu;
}

std::vector<ResourceVector> demand_list(const std::vector<JobType>& types) {
  std::vector<ResourceVector> demands;
  demands.reserve(types.size());
  for (const auto& t : types) demands.push_back(t.demand);
  return demands;
}

std::size_t thread_budget(std::size_t tasks) {
  std::size_t n = std::thread::hardware_concurrency();
  if (n == 0) n = 1;
  if (const char* env = std::getenv("STALLSCHED_THREADS")) {
    char* end = nullptr;
    const long parsed = std::strtol(env, &end, 10);
    if (end == env || *end != '\0' || parsed < 1)
      throw ValidationError("STALLSCHED_THREADS must be a positive integer");
    n = static_cast<std::size_t>(parsed);
  }
  return std::max<std::size_t>(1, std::min(n, tasks));
}

struct PointPlan {
  std::string axis;
  ExperimentSpec spec;
  MaterializedWorkload workload;
};

std::size_t trace_job_count(const MaterializedWorkload& w) {
  if (const auto* t = std::get_if<TraceArrivals>(&w.arrivals)) return t->jobs.size();
  return 0;
}

ExperimentResult run_points(const std::string& name, std::vector<PointPlan> points) {
  struct Task {
    std::size_t point;
    std::size_t policy;
    std::uint32_t replication;
  };
  std::vector<Task> tasks;
  for (std::size_t p = 0; p < points.size(); ++p) {
    const auto& spec = points[p].spec;
    for (std::size_t pol = 0; pol < spec.policies.size(); ++pol)
      for (std::uint32_t rep = 0; rep < spec.replications; ++rep)
        tasks.push_back({p, pol, rep});
  }

  std::vector<ReplicationResult> slots(tasks.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mu;

  auto worker = [&]() {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= tasks.size()) return;
      const Task& task = tasks[i];
      const PointPlan& plan = points[task.point];
      const PolicyEntry& entry = plan.spec.policies[task.policy];
      try {
        RunSpec rs;
        rs.servers = plan.spec.servers;
        rs.types = plan.workload.types;
        rs.arrivals = plan.workload.arrivals;
        rs.policy = entry.config;
        rs.event_budget =
            effective_budget(plan.spec, entry, trace_job_count(plan.workload));
        rs.warmup_fraction = plan.spec.warmup_fraction;
        rs.seed = plan.spec.seed + task.replication;
        rs.timeseries_points = plan.spec.timeseries_points;
        slots[i] = ReplicationResult{task.replication, rs.seed, run(rs)};
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mu);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };

  const std::size_t threads = thread_budget(tasks.size());
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (first_error) std::rethrow_exception(first_error);

  ExperimentResult result;
  result.name = name;
  result.points.resize(points.size());
  std::size_t cursor = 0;
  for (std::size_t p = 0; p < points.size(); ++p) {
    auto& point = result.points[p];
    point.axis = points[p].axis;
    const auto& spec = points[p].spec;
    point.policies.resize(spec.policies.size());
    for (std::size_t pol = 0; pol < spec.policies.size(); ++pol) {
      auto& pr = point.policies[pol];
      pr.policy = spec.policies[pol].name;
      double total = 0.0;
      for (std::uint32_t rep = 0; rep < spec.replications; ++rep) {
        pr.replications.push_back(std::move(slots[cursor++]));
        total += pr.replications.back().report.mean_queue;
      }
      pr.mean_queue = total / spec.replications;
    }
  }
  return result;
}

void append_csv_field(std::string& row, const std::string& field) {
  if (!row.empty()) row += ',';
  row += field;
}

}  // namespace

MaterializedWorkload materialize_workload(const ExperimentSpec& spec,
                                          MaximalSetCache& cache) {
  MaterializedWorkload out;

  if (const auto* trace = std::get_if<TraceLaw>(&spec.arrivals)) {
    const TraceJobStream stream =
        load_trace(trace->path, trace->window, trace->below_floor);
    if (stream.jobs.empty())
      throw ValidationError("trace '" + trace->path + "' yields no jobs");
    out.types = trace_job_types(stream);
    out.arrivals = TraceArrivals{std::move(stream.jobs)};
    return out;
  }

  out.types = spec.types;
  const std::vector<double> mu = service_means(spec.types);
  const std::vector<ResourceVector> demands = demand_list(spec.types);

  if (const auto* batch = std::get_if<BatchLaw>(&spec.arrivals)) {
    double rate = 0.0;
    if (batch->rate) {
      rate = *batch->rate;
    } else {
      // The batch mix fixes the workload direction: an event rate of 1 loads
      // type j at E[v_j] jobs per time, hence u_j = E[v_j] / mu_j.
      ResourceVector direction(spec.types.size(), 0.0);
      for (const auto& v : batch->support)
        for (std::size_t j = 0; j < direction.size(); ++j)
          direction[j] += v.probability * v.counts[j];
      for (std::size_t j = 0; j < direction.size(); ++j) direction[j] /= mu[j];
      const auto& w = std::get<IntensityWorkload>(spec.workload);
      out.t_star = intensity_scale(direction, spec.servers, demands, cache);
      rate = w.zeta * out.t_star;
    }
    out.lambda.assign(spec.types.size(), 0.0);
    for (const auto& v : batch->support)
      for (std::size_t j = 0; j < out.lambda.size(); ++j)
        out.lambda[j] += rate * v.probability * v.counts[j];
    out.arrivals = BatchArrivals{rate, batch->support};
    return out;
  }

  if (const auto* w = std::get_if<IntensityWorkload>(&spec.workload)) {
    out.t_star = intensity_scale(w->direction, spec.servers, demands, cache);
    out.lambda =
        workload_for_intensity(w->zeta, w->direction, spec.servers, spec.types, cache);
  } else if (const auto* e = std::get_if<ExplicitWorkload>(&spec.workload)) {
    out.lambda = e->lambda;
    // Diagnostic scale along the explicit workload's own direction; the
    // implied intensity is 1 / t_star.
    ResourceVector rho(spec.types.size(), 0.0);
    bool loaded = false;
    for (std::size_t j = 0; j < rho.size(); ++j) {
      rho[j] = e->lambda[j] / mu[j];
      loaded = loaded || rho[j] > 0.0;
    }
    out.t_star = loaded ? intensity_scale(rho, spec.servers, demands, cache) : 0.0;
  } else {
    throw ValidationError("this arrival law needs a [workload] section");
  }

  if (std::holds_alternative<PoissonLaw>(spec.arrivals)) {
    out.arrivals = PoissonArrivals{out.lambda};
  } else {
    const auto& ln = std::get<LogNormalLaw>(spec.arrivals);
    out.arrivals = LogNormalArrivals{out.lambda, ln.sigma};
  }
  return out;
}

std::uint64_t effective_budget(const ExperimentSpec& spec, const PolicyEntry& entry,
                               std::size_t trace_jobs) {
  if (entry.event_budget) return *entry.event_budget;
  if (spec.auto_budget) {
    const std::uint64_t base = 2 * static_cast<std::uint64_t>(trace_jobs);
    if (base == 0) throw ValidationError("auto budget needs a nonempty trace");
    return std::holds_alternative<G16Config>(entry.config) ? 2 * base : base;
  }
  return spec.event_budget;
}

ExperimentResult run_experiment(const ExperimentSpec& spec) {
  validate_experiment_spec(spec);
  MaximalSetCache cache;
  std::vector<PointPlan> points;
  points.push_back(PointPlan{"-", spec, materialize_workload(spec, cache)});
  return run_points(spec.name, std::move(points));
}

ExperimentResult run_sweep(const ExperimentSpec& spec, const SweepPlan& plan) {
  validate_experiment_spec(spec);
  {
    // The embedded plan was validated with the spec; a command-line plan
    // gets the same checks by revalidating a copy carrying it.
    ExperimentSpec with_plan = spec;
    with_plan.sweep = plan;
    validate_experiment_spec(with_plan);
  }

  MaximalSetCache cache;
  std::vector<PointPlan> points;
  const bool trace_law = std::holds_alternative<TraceLaw>(spec.arrivals);
  std::optional<MaterializedWorkload> shared_trace;
  if (trace_law) shared_trace = materialize_workload(spec, cache);

  for (const double value : plan.values) {
    PointPlan point;
    point.spec = spec;
    point.spec.sweep.reset();
    if (plan.axis == "servers") {
      const auto count = static_cast<std::size_t>(value);
      point.axis = "servers=" + std::to_string(count);
      point.spec.servers.assign(count, spec.servers.front());
      if (const auto* e = std::get_if<ExplicitWorkload>(&spec.workload)) {
        // Explicit rates were written for the base fleet; scale with it.
        ExplicitWorkload scaled = *e;
        const double factor =
            static_cast<double>(count) / static_cast<double>(spec.servers.size());
        for (double& l : scaled.lambda) l *= factor;
        point.spec.workload = scaled;
      }
    } else {
      point.axis = "zeta=" + format_double(value);
      auto w = std::get<IntensityWorkload>(spec.workload);
      w.zeta = value;
      point.spec.workload = w;
    }
    point.workload =
        shared_trace ? *shared_trace : materialize_workload(point.spec, cache);
    points.push_back(std::move(point));
  }
  return run_points(spec.name, std::move(points));
}

std::string summary_csv(const ExperimentResult& result) {
  std::string out =
      "name,policy,axis,replication,mean_queue,max_queue,stall_fraction,resets,seed\n";
  for (const auto& point : result.points) {
    for (const auto& policy : point.policies) {
      for (const auto& rep : policy.replications) {
        std::string row;
        append_csv_field(row, result.name);
        append_csv_field(row, policy.policy);
        append_csv_field(row, point.axis);
        append_csv_field(row, std::to_string(rep.replication));
        append_csv_field(row, format_double(rep.report.mean_queue));
        append_csv_field(row, std::to_string(rep.report.max_total_queue_post_warmup));
        append_csv_field(row, format_double(rep.report.stall_fraction));
        append_csv_field(row, std::to_string(rep.report.resets));
        append_csv_field(row, std::to_string(rep.seed));
        out += row;
        out += '\n';
      }
    }
  }
  return out;
}

std::string timeseries_csv(const AxisPointResult& point, std::uint32_t replication) {
  std::string out = "policy,t,total_queue\n";
  for (const auto& policy : point.policies) {
    if (replication >= policy.replications.size())
      throw ValidationError("replication index out of range for timeseries export");
    for (const auto& sample : policy.replications[replication].report.timeseries) {
      out += policy.policy;
      out += ',';
      out += format_double(sample.t);
      out += ',';
      out += std::to_string(sample.total_queue);
      out += '\n';
    }
  }
  return out;
}

std::vector<std::string> write_outputs(const ExperimentResult& result,
                                       const std::string& dir) {
  namespace fs = std::filesystem;
  std::vector<std::string> written;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw ValidationError("cannot create output directory " + dir);

  auto write_file = [&](const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ValidationError("cannot write " + path.string());
    out << text;
    written.push_back(path.string());
  };

  write_file(fs::path(dir) / "summary.csv", summary_csv(result));
  for (const auto& point : result.points) {
    fs::path base(dir);
    if (point.axis != "-") {
      base /= point.axis;
      fs::create_directories(base, ec);
      if (ec) throw ValidationError("cannot create output directory " + base.string());
    }
    const std::size_t reps =
        point.policies.empty() ? 0 : point.policies.front().replications.size();
    for (std::uint32_t rep = 0; rep < reps; ++rep)
      write_file(base / ("timeseries_" + std::to_string(rep) + ".csv"),
                 timeseries_csv(point, rep));
  }
  return written;
}

}  // namespace stallsched
