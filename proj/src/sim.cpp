#include "stallsched/sim.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <queue>
#include <set>
#include <sstream>
#include <string>
#include <unordered_map>

#include "stallsched/rng.hpp"
#include "stallsched/token_pool.hpp"

namespace stallsched {

namespace {

enum class EventKind : std::uint8_t { Arrival, Batch, Completion, Sample, TokenExpiry };

struct Event {
  double time = 0.0;
  std::uint64_t seq = 0;
  EventKind kind = EventKind::Arrival;
  std::int32_t a = -1;  // type (Arrival/Sample) or server (Completion/TokenExpiry)
  std::int32_t b = -1;  // type for Completion/TokenExpiry
  std::uint64_t id = 0;  // trace row / job uid / queue epoch / token uid
};

struct EventAfter {
  bool operator()(const Event& x, const Event& y) const {
    if (x.time != y.time) return x.time > y.time;
    return x.seq > y.seq;
  }
};

struct Job {
  std::uint64_t uid = 0;
  // NaN means "sample the type's service law when service starts"; trace
  // jobs carry their recorded duration instead.
  double duration = std::numeric_limits<double>::quiet_NaN();
};

struct ServerRt {
  Configuration target;
  Configuration occupancy;
  Configuration slots;   // registered empty slots per type (active only)
  Configuration tokens;  // outstanding reservations per type
  ResourceVector used;   // occupancy + token demand, maintained incrementally
  std::int64_t jobs = 0;
  bool stalled = false;
  // Set when the target was adopted while the entire system was empty (the
  // initial assignment, or a refresh after everything drained).  All nonzero
  // configurations tie for max weight then, so the pick is arbitrary; the
  // tie is re-broken at the first arrival the server could host but whose
  // type has no registered slot.  Nothing observable happens anywhere in
  // between, which keeps the deferred pick equivalent to an immediate one.
  // A server that merely empties itself mid-run commits right away: events
  // elsewhere continue, so a deferred choice there would peek at the future.
  bool provisional = false;
};

struct ActiveJob {
  std::int32_t server = -1;
  std::int32_t type = -1;
  double start = 0.0;
  double end = 0.0;
};

class Engine {
 public:
  explicit Engine(const RunSpec& spec) : spec_(spec) { init(); }

  RunReport execute();

 private:
  // --- setup -------------------------------------------------------------
  void init();
  void validate();
  void schedule_initial_arrivals();

  // --- event plumbing ----------------------------------------------------
  void push(double time, EventKind kind, std::int32_t a, std::int32_t b,
            std::uint64_t id) {
    heap_.push({time, next_seq_++, kind, a, b, id});
  }
  void dispatch(const Event& e);
  void advance_time(double t);

  // --- queue and server mutations ----------------------------------------
  void enqueue(std::int32_t j, Job job);
  Job dequeue_front(std::int32_t j);
  void queue_changed(std::int32_t j);
  void start_service(std::int32_t server, std::int32_t j, Job job);
  void complete_job(std::int32_t server, std::int32_t j, std::uint64_t uid);
  void register_slots(std::int32_t server, std::int32_t j, std::int32_t n);
  void consume_slot(std::int32_t server, std::int32_t j);
  void clear_slots(std::int32_t server);
  void adopt_config(std::int32_t server, const Configuration& config);
  void stall_server(std::int32_t server);

  // --- policy handlers ---------------------------------------------------
  void on_job_queued(std::int32_t j);
  void on_arrival(const Event& e);
  void on_batch(const Event& e);
  void on_completion(const Event& e);
  void on_sample(const Event& e);
  void on_token_expiry(const Event& e);
  void place_token(std::int32_t server, std::int32_t j);
  void consume_token(std::int32_t j);

  // --- invariants ----------------------------------------------------------
  [[noreturn]] void violation(const std::string& what) const;
  void check_capacity(std::int32_t server) const;
  void post_event_checks();

  // --- bookkeeping ---------------------------------------------------------
  void record_marks();
  RunReport finalize();

  const RunSpec& spec_;
  std::size_t num_types_ = 0;
  std::int32_t num_servers_ = 0;
  std::vector<ResourceVector> demands_;
  enum class Kind { Alg1, M14, G16 } kind_ = Kind::Alg1;
  const Alg1Config* alg1_ = nullptr;
  const G16Config* g16_ = nullptr;
  std::optional<ConfigSolver> solver_;

  std::priority_queue<Event, std::vector<Event>, EventAfter> heap_;
  std::uint64_t next_seq_ = 0;
  double now_ = 0.0;

  std::vector<std::deque<Job>> queues_;
  QueueVector qcounts_;
  std::int64_t total_queue_ = 0;
  std::vector<ServerRt> servers_;
  std::int64_t stalled_count_ = 0;
  std::int64_t in_service_ = 0;

  // Lowest-id-first slot registry, one set per type.
  std::vector<std::set<std::int32_t>> slot_servers_;
  std::vector<std::int64_t> slot_totals_;
  std::optional<TokenPool> tokens_;

  std::vector<Xoshiro256pp> arrival_rngs_;
  std::vector<Xoshiro256pp> service_rngs_;
  std::optional<Xoshiro256pp> sampling_rng_;
  std::optional<Xoshiro256pp> token_rng_;
  std::optional<Xoshiro256pp> batch_rng_;
  std::vector<std::uint64_t> epochs_;
  std::vector<double> token_lifetime_;
  double eta_ = 1.0;

  std::uint64_t next_job_uid_ = 1;
  std::size_t trace_next_ = 0;

  std::unordered_map<std::uint64_t, ActiveJob> active_jobs_;
  QueueVector initial_q_;
  std::vector<std::uint64_t> enqueued_;
  std::vector<std::uint64_t> dequeued_;
  bool in_completion_ = false;

  // Metrics: time-weighted integrals advanced before each dispatch.
  double int_queue_ = 0.0;
  std::vector<double> int_queue_per_type_;
  double int_in_service_ = 0.0;
  double int_stalled_ = 0.0;
  std::uint64_t processed_ = 0;
  std::uint64_t warmup_event_ = 0;
  bool warmup_done_ = false;
  double t_warmup_ = 0.0;
  double warmup_int_queue_ = 0.0;
  std::vector<double> warmup_int_per_type_;
  double warmup_int_in_service_ = 0.0;
  double warmup_int_stalled_ = 0.0;
  std::int64_t max_queue_ = 0;
  std::int64_t max_queue_pw_ = 0;
  std::uint64_t resets_ = 0;
  std::uint64_t stall_evaluations_ = 0;
  EventCounts counts_;
  std::vector<std::uint64_t> per_type_arrivals_;
  std::array<std::uint64_t, 4> quarter_event_{};
  std::array<std::int64_t, 4> queue_at_quarter_{};
  std::array<double, 4> quarter_time_{};
  std::array<double, 4> quarter_int_{};
  std::array<bool, 4> quarter_seen_{};
  std::uint64_t ts_stride_ = 1;
  std::vector<TimeSeriesPoint> timeseries_;
};

void Engine::validate() {
  if (spec_.servers.empty()) throw ValidationError("at least one server required");
  if (spec_.types.empty()) throw ValidationError("at least one job type required");
  if (spec_.event_budget == 0) throw ValidationError("event budget must be positive");
  if (!(spec_.warmup_fraction >= 0.0 && spec_.warmup_fraction < 1.0))
    throw ValidationError("warmup fraction must lie in [0,1)");
  if (spec_.timeseries_points == 0)
    throw ValidationError("timeseries_points must be positive");

  const std::size_t num_resources = spec_.servers.front().capacity.size();
  for (const auto& srv : spec_.servers)
    if (srv.capacity.size() != num_resources)
      throw ValidationError("servers disagree on the number of resources");
  for (const auto& type : spec_.types) {
    if (type.demand.size() != num_resources)
      throw ValidationError("job type demand length does not match servers");
    validate_service_law(type.service, type.name);
  }
  if (!spec_.initial_queues.empty()) {
    if (spec_.initial_queues.size() != spec_.types.size())
      throw ValidationError("initial queue vector length mismatch");
    for (auto q : spec_.initial_queues)
      if (q < 0) throw ValidationError("initial queues must be nonnegative");
  }
  validate_policy(spec_.policy);

  const std::size_t J = spec_.types.size();
  auto check_rates = [&](const std::vector<double>& rates) {
    if (rates.size() != J) throw ValidationError("arrival rate vector length mismatch");
    for (double r : rates)
      if (!(r >= 0.0) || !std::isfinite(r))
        throw ValidationError("arrival rates must be finite and nonnegative");
  };
  if (const auto* p = std::get_if<PoissonArrivals>(&spec_.arrivals)) {
    check_rates(p->rates);
  } else if (const auto* l = std::get_if<LogNormalArrivals>(&spec_.arrivals)) {
    check_rates(l->rates);
    if (!(l->sigma > 0.0)) throw ValidationError("log-normal sigma must be positive");
  } else if (const auto* b = std::get_if<BatchArrivals>(&spec_.arrivals)) {
    if (!(b->rate >= 0.0) || !std::isfinite(b->rate))
      throw ValidationError("batch rate must be finite and nonnegative");
    if (b->support.empty()) throw ValidationError("batch support must be nonempty");
    double total = 0.0;
    for (const auto& entry : b->support) {
      if (entry.counts.size() != J)
        throw ValidationError("batch vector length mismatch");
      for (auto c : entry.counts)
        if (c < 0) throw ValidationError("batch vectors must be nonnegative");
      if (!(entry.probability >= 0.0))
        throw ValidationError("batch probabilities must be nonnegative");
      total += entry.probability;
    }
    if (std::abs(total - 1.0) > 1e-9)
      throw ValidationError("batch probabilities must sum to 1");
  } else if (const auto* t = std::get_if<TraceArrivals>(&spec_.arrivals)) {
    double prev = 0.0;
    for (const auto& job : t->jobs) {
      if (job.type < 0 || static_cast<std::size_t>(job.type) >= J)
        throw ValidationError("trace job type out of range");
      if (!(job.duration > 0.0)) throw ValidationError("trace durations must be positive");
      if (job.time < prev) throw ValidationError("trace arrivals must be time-sorted");
      prev = job.time;
    }
  }
}

void Engine::init() {
  validate();
  num_types_ = spec_.types.size();
  num_servers_ = static_cast<std::int32_t>(spec_.servers.size());
  demands_.reserve(num_types_);
  for (const auto& type : spec_.types) demands_.push_back(type.demand);

  queues_.resize(num_types_);
  qcounts_.assign(num_types_, 0);
  initial_q_.assign(num_types_, 0);
  enqueued_.assign(num_types_, 0);
  dequeued_.assign(num_types_, 0);
  per_type_arrivals_.assign(num_types_, 0);
  int_queue_per_type_.assign(num_types_, 0.0);
  warmup_int_per_type_.assign(num_types_, 0.0);
  slot_servers_.resize(num_types_);
  slot_totals_.assign(num_types_, 0);
  epochs_.assign(num_types_, 0);

  const std::size_t num_resources = spec_.servers.front().capacity.size();
  servers_.resize(static_cast<std::size_t>(num_servers_));
  for (auto& srv : servers_) {
    srv.target.assign(num_types_, 0);
    srv.occupancy.assign(num_types_, 0);
    srv.slots.assign(num_types_, 0);
    srv.tokens.assign(num_types_, 0);
    srv.used.assign(num_resources, 0.0);
  }

  for (std::size_t j = 0; j < num_types_; ++j) {
    arrival_rngs_.emplace_back(derive_stream_seed(spec_.seed, StreamKind::Arrival, j));
    service_rngs_.emplace_back(derive_stream_seed(spec_.seed, StreamKind::Service, j));
  }

  if (const auto* a = std::get_if<Alg1Config>(&spec_.policy)) {
    kind_ = Kind::Alg1;
    alg1_ = a;
    solver_.emplace(a->solver, spec_.servers, demands_);
  } else if (const auto* m = std::get_if<M14Config>(&spec_.policy)) {
    kind_ = Kind::M14;
    solver_.emplace(m->solver, spec_.servers, demands_);
  } else {
    kind_ = Kind::G16;
    g16_ = &std::get<G16Config>(spec_.policy);
    eta_ = g16_->sampling_rate_per_queued_job;
    tokens_.emplace(num_servers_, num_types_);
    const std::uint64_t sampling_base = spec_.sampling_seed.value_or(spec_.seed);
    sampling_rng_.emplace(derive_stream_seed(sampling_base, StreamKind::Sampling, 0));
    token_rng_.emplace(derive_stream_seed(sampling_base, StreamKind::TokenLife, 0));
    token_lifetime_.reserve(num_types_);
    for (const auto& type : spec_.types)
      token_lifetime_.push_back(
          g16_->token_lifetime_mean.value_or(service_mean(type.service)));
  }
  if (std::holds_alternative<BatchArrivals>(spec_.arrivals))
    batch_rng_.emplace(derive_stream_seed(spec_.seed, StreamKind::Batch, 0));

  // Seed the queues before any server adopts a configuration, so initial
  // targets see the initial backlog.
  if (!spec_.initial_queues.empty()) {
    for (std::size_t j = 0; j < num_types_; ++j) {
      initial_q_[j] = spec_.initial_queues[j];
      for (std::int64_t i = 0; i < spec_.initial_queues[j]; ++i)
        queues_[j].push_back({next_job_uid_++, std::numeric_limits<double>::quiet_NaN()});
      qcounts_[j] = spec_.initial_queues[j];
      total_queue_ += spec_.initial_queues[j];
    }
    max_queue_ = total_queue_;
  }

  if (kind_ != Kind::G16) {
    for (std::int32_t s = 0; s < num_servers_; ++s)
      adopt_config(s, solver_->solve(s, qcounts_).config);
  } else {
    for (std::size_t j = 0; j < num_types_; ++j) queue_changed(static_cast<std::int32_t>(j));
  }

  warmup_event_ = static_cast<std::uint64_t>(
      static_cast<double>(spec_.event_budget) * spec_.warmup_fraction);
  for (int i = 0; i < 4; ++i)
    quarter_event_[static_cast<std::size_t>(i)] =
        spec_.event_budget * static_cast<std::uint64_t>(i + 1) / 4;
  ts_stride_ = std::max<std::uint64_t>(1, spec_.event_budget / spec_.timeseries_points);
  if (warmup_event_ == 0) {
    warmup_done_ = true;
    max_queue_pw_ = total_queue_;
  }

  schedule_initial_arrivals();
}

void Engine::schedule_initial_arrivals() {
  if (const auto* p = std::get_if<PoissonArrivals>(&spec_.arrivals)) {
    for (std::size_t j = 0; j < num_types_; ++j)
      if (p->rates[j] > 0.0)
        push(arrival_rngs_[j].exponential(p->rates[j]), EventKind::Arrival,
             static_cast<std::int32_t>(j), -1, 0);
  } else if (const auto* l = std::get_if<LogNormalArrivals>(&spec_.arrivals)) {
    for (std::size_t j = 0; j < num_types_; ++j)
      if (l->rates[j] > 0.0)
        push(arrival_rngs_[j].lognormal(lognormal_gap_mu(l->rates[j], l->sigma), l->sigma),
             EventKind::Arrival, static_cast<std::int32_t>(j), -1, 0);
  } else if (const auto* b = std::get_if<BatchArrivals>(&spec_.arrivals)) {
    if (b->rate > 0.0)
      push(arrival_rngs_[0].exponential(b->rate), EventKind::Batch, -1, -1, 0);
  } else {
    const auto& jobs = std::get<TraceArrivals>(spec_.arrivals).jobs;
    if (!jobs.empty()) {
      push(jobs[0].time, EventKind::Arrival, jobs[0].type, -1, 0);
      trace_next_ = 1;
    }
  }
}

RunReport Engine::execute() {
  while (processed_ < spec_.event_budget && !heap_.empty()) {
    const Event e = heap_.top();
    heap_.pop();
    // Drop superseded events without charging the budget.
    if (e.kind == EventKind::Sample &&
        e.id != epochs_[static_cast<std::size_t>(e.a)])
      continue;
    if (e.kind == EventKind::TokenExpiry && !tokens_->live(e.id)) continue;

    advance_time(e.time);
    dispatch(e);
    ++processed_;
    post_event_checks();
    record_marks();
  }
  return finalize();
}

void Engine::advance_time(double t) {
  if (t < now_) violation("event time moved backwards");
  const double dt = t - now_;
  if (dt > 0.0) {
    int_queue_ += dt * static_cast<double>(total_queue_);
    for (std::size_t j = 0; j < num_types_; ++j)
      int_queue_per_type_[j] += dt * static_cast<double>(qcounts_[j]);
    int_in_service_ += dt * static_cast<double>(in_service_);
    int_stalled_ += dt * static_cast<double>(stalled_count_);
    now_ = t;
  }
}

void Engine::dispatch(const Event& e) {
  switch (e.kind) {
    case EventKind::Arrival:
      on_arrival(e);
      break;
    case EventKind::Batch:
      on_batch(e);
      break;
    case EventKind::Completion:
      in_completion_ = true;
      on_completion(e);
      in_completion_ = false;
      break;
    case EventKind::Sample:
      on_sample(e);
      break;
    case EventKind::TokenExpiry:
      on_token_expiry(e);
      break;
  }
}

void Engine::on_arrival(const Event& e) {
  ++counts_.arrivals;
  const auto j = static_cast<std::size_t>(e.a);
  ++per_type_arrivals_[j];

  Job job{next_job_uid_++, std::numeric_limits<double>::quiet_NaN()};
  if (const auto* t = std::get_if<TraceArrivals>(&spec_.arrivals)) {
    job.duration = t->jobs[static_cast<std::size_t>(e.id)].duration;
    if (trace_next_ < t->jobs.size()) {
      const auto& next = t->jobs[trace_next_];
      push(next.time, EventKind::Arrival, next.type, -1, trace_next_);
      ++trace_next_;
    }
  } else if (const auto* p = std::get_if<PoissonArrivals>(&spec_.arrivals)) {
    push(now_ + arrival_rngs_[j].exponential(p->rates[j]), EventKind::Arrival, e.a, -1, 0);
  } else if (const auto* l = std::get_if<LogNormalArrivals>(&spec_.arrivals)) {
    push(now_ + arrival_rngs_[j].lognormal(lognormal_gap_mu(l->rates[j], l->sigma), l->sigma),
         EventKind::Arrival, e.a, -1, 0);
  }

  enqueue(e.a, job);
  on_job_queued(e.a);
}

void Engine::on_batch(const Event& e) {
  (void)e;
  ++counts_.batches;
  const auto& batch = std::get<BatchArrivals>(spec_.arrivals);

  std::size_t pick = 0;
  if (batch.support.size() > 1) {
    const double u = batch_rng_->uniform01();
    double cum = 0.0;
    pick = batch.support.size() - 1;
    for (std::size_t i = 0; i < batch.support.size(); ++i) {
      cum += batch.support[i].probability;
      if (u <= cum) {
        pick = i;
        break;
      }
    }
  }
  const auto& counts = batch.support[pick].counts;
  for (std::size_t j = 0; j < num_types_; ++j) {
    for (std::int32_t i = 0; i < counts[j]; ++i) {
      ++per_type_arrivals_[j];
      enqueue(static_cast<std::int32_t>(j),
              {next_job_uid_++, std::numeric_limits<double>::quiet_NaN()});
      on_job_queued(static_cast<std::int32_t>(j));
    }
  }
  push(now_ + arrival_rngs_[0].exponential(batch.rate), EventKind::Batch, -1, -1, 0);
}

void Engine::on_completion(const Event& e) {
  ++counts_.completions;
  const std::int32_t server = e.a;
  const std::int32_t j = e.b;
  complete_job(server, j, e.id);
  ServerRt& srv = servers_[static_cast<std::size_t>(server)];

  if (kind_ == Kind::G16) return;

  if (kind_ == Kind::M14) {
    if (srv.jobs == 0) {
      ++resets_;
      adopt_config(server, solver_->solve(server, qcounts_).config);
    } else if (qcounts_[static_cast<std::size_t>(j)] > 0) {
      start_service(server, j, dequeue_front(j));
      consume_slot(server, j);
    } else {
      // Slot stays registered; adopt_config set slots = target - occupancy
      // and complete_job already bumped slots[j] alongside the decrement.
    }
    return;
  }

  if (!srv.stalled) {
    if (!in_completion_) violation("stall evaluation outside a completion");
    ++stall_evaluations_;
    const SolverResult best = solver_->solve(server, qcounts_);
    const double w_target = static_cast<double>(weight(srv.target, qcounts_));
    const double w_best = static_cast<double>(weight(best.config, qcounts_));
    const double s = static_cast<double>(stalled_count_) / num_servers_;
    const double beta_eff =
        beta_value(alg1_->beta, total_queue_) * gate_value(alg1_->gate, s);
    if (w_target < beta_eff * w_best) {
      if (srv.jobs == 0) {
        // Nothing left to drain: the stall lasts zero time, so the server
        // re-solves and adopts the fresh configuration in the same instant.
        ++resets_;
        adopt_config(server, best.config);
      } else {
        stall_server(server);
      }
    } else if (qcounts_[static_cast<std::size_t>(j)] > 0) {
      start_service(server, j, dequeue_front(j));
      consume_slot(server, j);
    }
    return;
  }

  if (srv.jobs == 0) {
    srv.stalled = false;
    --stalled_count_;
    ++resets_;
    adopt_config(server, solver_->solve(server, qcounts_).config);
  } else if (alg1_->early_reactivation) {
    const SolverResult best = solver_->solve(server, qcounts_);
    bool subset = true;
    for (std::size_t t = 0; t < num_types_ && subset; ++t)
      subset = srv.occupancy[t] <= best.config[t];
    if (subset) {
      srv.stalled = false;
      --stalled_count_;
      ++resets_;
      adopt_config(server, best.config);
    }
  }
}

void Engine::on_sample(const Event& e) {
  ++counts_.samples;
  const std::int32_t j = e.a;
  const auto ju = static_cast<std::size_t>(j);
  if (qcounts_[ju] <= 0) violation("sampling event fired for an empty queue");

  const auto server =
      static_cast<std::int32_t>(sampling_rng_->uniform_index(
          static_cast<std::uint64_t>(num_servers_)));
  const ServerRt& srv = servers_[static_cast<std::size_t>(server)];
  const auto& cap = spec_.servers[static_cast<std::size_t>(server)].capacity;
  bool fits = true;
  for (std::size_t n = 0; n < cap.size() && fits; ++n)
    fits = srv.used[n] + demands_[ju][n] <= cap[n] + kFeasibilitySlack;

  const std::uint64_t epoch_before = epochs_[ju];
  if (fits) {
    place_token(server, j);
    if (qcounts_[ju] > 0) consume_token(j);
  }
  // A no-op sample (or one that left the queue length unchanged) keeps the
  // epoch, so the next sample is drawn here at the same per-job rate.
  if (epochs_[ju] == epoch_before && qcounts_[ju] > 0)
    push(now_ + sampling_rng_->exponential(eta_ * static_cast<double>(qcounts_[ju])),
         EventKind::Sample, j, -1, epoch_before);
}

void Engine::on_token_expiry(const Event& e) {
  ++counts_.token_expiries;
  const auto j = static_cast<std::size_t>(e.b);
  ServerRt& srv = servers_[static_cast<std::size_t>(e.a)];
  if (!tokens_->expire(e.id, e.a, e.b)) violation("expiry of a consumed token");
  if (srv.tokens[j] <= 0) violation("token expiry on a server holding none");
  --srv.tokens[j];
  for (std::size_t n = 0; n < srv.used.size(); ++n) srv.used[n] -= demands_[j][n];
}

void Engine::place_token(std::int32_t server, std::int32_t j) {
  const auto ju = static_cast<std::size_t>(j);
  ServerRt& srv = servers_[static_cast<std::size_t>(server)];
  ++srv.tokens[ju];
  for (std::size_t n = 0; n < srv.used.size(); ++n) srv.used[n] += demands_[ju][n];
  check_capacity(server);
  const std::uint64_t uid = tokens_->place(server, j);
  push(now_ + token_rng_->exponential(1.0 / token_lifetime_[ju]), EventKind::TokenExpiry,
       server, j, uid);
}

void Engine::consume_token(std::int32_t j) {
  const auto ju = static_cast<std::size_t>(j);
  const auto server = tokens_->lowest_server(j);
  if (!server) violation("token consumption with none outstanding");
  tokens_->consume(*server, j);
  ServerRt& srv = servers_[static_cast<std::size_t>(*server)];
  --srv.tokens[ju];
  for (std::size_t n = 0; n < srv.used.size(); ++n) srv.used[n] -= demands_[ju][n];
  start_service(*server, j, dequeue_front(j));
}

void Engine::enqueue(std::int32_t j, Job job) {
  const auto ju = static_cast<std::size_t>(j);
  queues_[ju].push_back(job);
  ++qcounts_[ju];
  ++total_queue_;
  ++enqueued_[ju];
  max_queue_ = std::max(max_queue_, total_queue_);
  if (warmup_done_) max_queue_pw_ = std::max(max_queue_pw_, total_queue_);
  queue_changed(j);
}

Job Engine::dequeue_front(std::int32_t j) {
  const auto ju = static_cast<std::size_t>(j);
  if (queues_[ju].empty()) violation("dequeue from an empty queue");
  const Job job = queues_[ju].front();
  queues_[ju].pop_front();
  --qcounts_[ju];
  --total_queue_;
  ++dequeued_[ju];
  queue_changed(j);
  return job;
}

void Engine::queue_changed(std::int32_t j) {
  if (kind_ != Kind::G16) return;
  const auto ju = static_cast<std::size_t>(j);
  ++epochs_[ju];
  if (qcounts_[ju] > 0)
    push(now_ + sampling_rng_->exponential(eta_ * static_cast<double>(qcounts_[ju])),
         EventKind::Sample, j, -1, epochs_[ju]);
}

void Engine::start_service(std::int32_t server, std::int32_t j, Job job) {
  const auto ju = static_cast<std::size_t>(j);
  ServerRt& srv = servers_[static_cast<std::size_t>(server)];
  if (srv.stalled) violation("admission into a stalled server");
  const double duration = std::isnan(job.duration)
                              ? sample_service(service_rngs_[ju], spec_.types[ju].service)
                              : job.duration;
  ++srv.occupancy[ju];
  ++srv.jobs;
  ++in_service_;
  srv.provisional = false;
  for (std::size_t n = 0; n < srv.used.size(); ++n) srv.used[n] += demands_[ju][n];
  check_capacity(server);
  active_jobs_[job.uid] = {server, j, now_, now_ + duration};
  push(now_ + duration, EventKind::Completion, server, j, job.uid);
}

void Engine::complete_job(std::int32_t server, std::int32_t j, std::uint64_t uid) {
  const auto it = active_jobs_.find(uid);
  if (it == active_jobs_.end()) violation("completion for an unknown job");
  const ActiveJob& rec = it->second;
  if (rec.server != server || rec.type != j || rec.end != now_)
    violation("completion does not match the service record");
  active_jobs_.erase(it);

  const auto ju = static_cast<std::size_t>(j);
  ServerRt& srv = servers_[static_cast<std::size_t>(server)];
  if (srv.occupancy[ju] <= 0) violation("departure from a server not holding the type");
  --srv.occupancy[ju];
  --srv.jobs;
  --in_service_;
  for (std::size_t n = 0; n < srv.used.size(); ++n) srv.used[n] -= demands_[ju][n];
  // An active server's vacated place is a registered empty slot until the
  // policy backfills, stalls, or refreshes.
  if (!srv.stalled && kind_ != Kind::G16) register_slots(server, j, 1);
}

void Engine::register_slots(std::int32_t server, std::int32_t j, std::int32_t n) {
  if (n <= 0) return;
  const auto ju = static_cast<std::size_t>(j);
  ServerRt& srv = servers_[static_cast<std::size_t>(server)];
  srv.slots[ju] += n;
  slot_totals_[ju] += n;
  slot_servers_[ju].insert(server);
}

void Engine::consume_slot(std::int32_t server, std::int32_t j) {
  const auto ju = static_cast<std::size_t>(j);
  ServerRt& srv = servers_[static_cast<std::size_t>(server)];
  if (srv.slots[ju] <= 0) violation("slot bookkeeping out of sync");
  --srv.slots[ju];
  --slot_totals_[ju];
  if (srv.slots[ju] == 0) slot_servers_[ju].erase(server);
}

void Engine::clear_slots(std::int32_t server) {
  ServerRt& srv = servers_[static_cast<std::size_t>(server)];
  for (std::size_t j = 0; j < num_types_; ++j) {
    if (srv.slots[j] > 0) {
      slot_totals_[j] -= srv.slots[j];
      slot_servers_[j].erase(server);
      srv.slots[j] = 0;
    }
  }
}

void Engine::adopt_config(std::int32_t server, const Configuration& config) {
  ServerRt& srv = servers_[static_cast<std::size_t>(server)];
  clear_slots(server);
  srv.target = config;
  for (std::size_t j = 0; j < num_types_; ++j) {
    const std::int32_t room = config[j] - srv.occupancy[j];
    if (room < 0) violation("adopted configuration below current occupancy");
    const auto admit = std::min<std::int64_t>(room, qcounts_[j]);
    for (std::int64_t i = 0; i < admit; ++i)
      start_service(server, static_cast<std::int32_t>(j),
                    dequeue_front(static_cast<std::int32_t>(j)));
    register_slots(server, static_cast<std::int32_t>(j),
                   config[j] - srv.occupancy[j]);
  }
  srv.provisional = (srv.jobs == 0 && total_queue_ == 0 && in_service_ == 0);
}

void Engine::stall_server(std::int32_t server) {
  ServerRt& srv = servers_[static_cast<std::size_t>(server)];
  clear_slots(server);
  srv.stalled = true;
  ++stalled_count_;
  if (alg1_ != nullptr) {
    if (const auto* h = std::get_if<HardLimitGate>(&alg1_->gate)) {
      const auto bound = static_cast<std::int64_t>(
          std::ceil(h->threshold * static_cast<double>(num_servers_))) + 1;
      if (stalled_count_ > bound) violation("hard stall-gate bound exceeded");
    }
  }
}

void Engine::on_job_queued(std::int32_t j) {
  const auto ju = static_cast<std::size_t>(j);
  if (kind_ == Kind::G16) {
    if (tokens_->outstanding(j) > 0) consume_token(j);
    return;
  }
  if (slot_totals_[ju] > 0) {
    const std::int32_t server = *slot_servers_[ju].begin();
    consume_slot(server, j);
    start_service(server, j, dequeue_front(j));
    return;
  }
  // No slot matches.  A server still holding a provisional target re-breaks
  // its tie against the queue as it stands now, provided the type fits the
  // server at all; the fresh target then hosts at least one queued type.
  for (std::int32_t s = 0; s < num_servers_; ++s) {
    const ServerRt& srv = servers_[static_cast<std::size_t>(s)];
    if (!srv.provisional || srv.jobs != 0) continue;
    const auto& cap = spec_.servers[static_cast<std::size_t>(s)].capacity;
    bool fits = true;
    for (std::size_t n = 0; n < cap.size(); ++n)
      if (demands_[ju][n] > cap[n] + kFeasibilitySlack) { fits = false; break; }
    if (!fits) continue;
    adopt_config(s, solver_->solve(s, qcounts_).config);
    break;
  }
}

void Engine::violation(const std::string& what) const {
  std::ostringstream out;
  out << "invariant violated: " << what << " | t=" << now_ << " events=" << processed_
      << " total_queue=" << total_queue_ << " stalled=" << stalled_count_ << "/"
      << num_servers_ << " in_service=" << in_service_;
  throw InvariantViolation(out.str());
}

void Engine::check_capacity(std::int32_t server) const {
  const ServerRt& srv = servers_[static_cast<std::size_t>(server)];
  const auto& cap = spec_.servers[static_cast<std::size_t>(server)].capacity;
  for (std::size_t n = 0; n < cap.size(); ++n)
    if (srv.used[n] > cap[n] + kFeasibilitySlack)
      violation("server over capacity");
}

void Engine::post_event_checks() {
  std::int64_t total = 0;
  for (std::size_t j = 0; j < num_types_; ++j) {
    if (slot_totals_[j] > 0 && qcounts_[j] > 0)
      violation("empty slot coexists with a nonempty queue");
    if (qcounts_[j] != static_cast<std::int64_t>(queues_[j].size()) ||
        qcounts_[j] != initial_q_[j] + static_cast<std::int64_t>(enqueued_[j]) -
                           static_cast<std::int64_t>(dequeued_[j]))
      violation("queue balance identity broken");
    total += qcounts_[j];
  }
  if (total != total_queue_) violation("total queue counter out of sync");
}

void Engine::record_marks() {
  if (!warmup_done_ && processed_ == warmup_event_) {
    warmup_done_ = true;
    t_warmup_ = now_;
    warmup_int_queue_ = int_queue_;
    warmup_int_per_type_ = int_queue_per_type_;
    warmup_int_in_service_ = int_in_service_;
    warmup_int_stalled_ = int_stalled_;
    max_queue_pw_ = total_queue_;
  }
  for (std::size_t i = 0; i < 4; ++i) {
    if (!quarter_seen_[i] && processed_ == quarter_event_[i]) {
      quarter_seen_[i] = true;
      queue_at_quarter_[i] = total_queue_;
      quarter_time_[i] = now_;
      quarter_int_[i] = int_queue_;
    }
  }
  if (processed_ % ts_stride_ == 0) timeseries_.push_back({now_, total_queue_});
}

RunReport Engine::finalize() {
  RunReport report;
  report.t_end = now_;
  if (!warmup_done_) {
    // The heap drained before the warmup mark; fall back to "everything
    // after the last event", i.e. instantaneous end-state values.
    t_warmup_ = now_;
    warmup_int_queue_ = int_queue_;
    warmup_int_per_type_ = int_queue_per_type_;
    warmup_int_in_service_ = int_in_service_;
    warmup_int_stalled_ = int_stalled_;
    max_queue_pw_ = total_queue_;
  }
  report.t_warmup = t_warmup_;
  const double elapsed = now_ - t_warmup_;
  report.per_type_mean_queue.resize(num_types_);
  if (elapsed > 0.0) {
    report.mean_queue = (int_queue_ - warmup_int_queue_) / elapsed;
    for (std::size_t j = 0; j < num_types_; ++j)
      report.per_type_mean_queue[j] =
          (int_queue_per_type_[j] - warmup_int_per_type_[j]) / elapsed;
    report.mean_in_service = (int_in_service_ - warmup_int_in_service_) / elapsed;
    report.stall_fraction =
        (int_stalled_ - warmup_int_stalled_) / (elapsed * num_servers_);
  } else {
    report.mean_queue = static_cast<double>(total_queue_);
    for (std::size_t j = 0; j < num_types_; ++j)
      report.per_type_mean_queue[j] = static_cast<double>(qcounts_[j]);
    report.mean_in_service = static_cast<double>(in_service_);
    report.stall_fraction =
        static_cast<double>(stalled_count_) / static_cast<double>(num_servers_);
  }
  report.max_total_queue = max_queue_;
  report.max_total_queue_post_warmup = max_queue_pw_;
  report.resets = resets_;
  report.stall_evaluations = stall_evaluations_;
  report.processed_events = processed_;
  report.events = counts_;
  report.per_type_arrivals = per_type_arrivals_;
  double prev_t = 0.0, prev_int = 0.0;
  for (std::size_t i = 0; i < 4; ++i) {
    if (!quarter_seen_[i]) {
      quarter_time_[i] = now_;
      quarter_int_[i] = int_queue_;
      queue_at_quarter_[i] = total_queue_;
    }
    const double span = quarter_time_[i] - prev_t;
    report.quarter_mean_queue[i] =
        span > 0.0 ? (quarter_int_[i] - prev_int) / span : 0.0;
    report.queue_at_quarter[i] = queue_at_quarter_[i];
    prev_t = quarter_time_[i];
    prev_int = quarter_int_[i];
  }
  report.queue_at_end = total_queue_;
  if (timeseries_.empty() || timeseries_.back().t != now_ ||
      timeseries_.back().total_queue != total_queue_)
    timeseries_.push_back({now_, total_queue_});
  report.timeseries = std::move(timeseries_);
  return report;
}

}  // namespace

RunReport run(const RunSpec& spec) {
  Engine engine(spec);
  return engine.execute();
}

}  // namespace stallsched
