#include "varsim/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <queue>
#include <set>
#include <stdexcept>

#include "varsim/random.hpp"

namespace varsim {

const char* to_string(SampleEvent e) {
  return e == SampleEvent::completion ? "completion" : "arrival";
}

// ---------------------------------------------------------------------------
// Configuration

std::vector<ServiceChainSpec> ScenarioConfig::resolved_chains() const {
  if (!chains.empty()) return chains;
  std::vector<ServiceChainSpec> out;
  for (const auto& s : services) out.push_back({s.service_id, {s.service_id}, std::nullopt});
  return out;
}

std::vector<RateSegment> ScenarioConfig::resolved_schedule() const {
  if (!lambda_schedule.empty()) return lambda_schedule;
  return {{TimePoint{0}, lambda}};
}

const MicroserviceSpec* ScenarioConfig::find_service(const std::string& id) const {
  for (const auto& s : services) {
    if (s.service_id == id) return &s;
  }
  return nullptr;
}

ValidationReport ScenarioConfig::validate() const {
  ValidationReport report;
  if (services.empty()) report.add("services", "at least one service is required");

  std::set<std::string> service_ids;
  for (std::size_t i = 0; i < services.size(); ++i) {
    const std::string p = "services[" + std::to_string(i) + "].";
    report.append(validate_spec(services[i]), p);
    if (!service_ids.insert(services[i].service_id).second) {
      report.add(p + "service_id", "duplicate service id '" + services[i].service_id + "'");
    }
  }

  std::set<std::string> chain_ids;
  for (std::size_t i = 0; i < chains.size(); ++i) {
    const std::string p = "chains[" + std::to_string(i) + "].";
    report.append(validate_chain(chains[i], services), p);
    if (!chain_ids.insert(chains[i].chain_id).second) {
      report.add(p + "chain_id", "duplicate chain id '" + chains[i].chain_id + "'");
    }
  }

  bool all_chains_constrained = !chains.empty();
  for (const auto& c : chains) all_chains_constrained = all_chains_constrained && c.constraint;
  if (constraint <= Duration::zero() && !all_chains_constrained) {
    report.add("constraint", "must be > 0");
  }

  if (request_count < 1) report.add("request_count", "must be >= 1");
  if (!(lambda.per_second() >= 0.0) || !std::isfinite(lambda.per_second())) {
    report.add("lambda", "must be finite and >= 0");
  }
  for (std::size_t i = 0; i < lambda_schedule.size(); ++i) {
    const std::string p = "lambda_schedule[" + std::to_string(i) + "]";
    const auto& seg = lambda_schedule[i];
    if (!(seg.rate.per_second() >= 0.0) || !std::isfinite(seg.rate.per_second())) {
      report.add(p + ".rate", "must be finite and >= 0");
    }
    if (i == 0 && seg.start != TimePoint{0}) report.add(p + ".start", "first segment must start at 0");
    if (i > 0 && seg.start <= lambda_schedule[i - 1].start) {
      report.add(p + ".start", "segment starts must be strictly increasing");
    }
  }
  if (horizon && *horizon <= TimePoint{0}) report.add("horizon", "must be > 0");
  report.append(policy.validate(), "");
  return report;
}

// ---------------------------------------------------------------------------
// Arrivals

std::vector<TimePoint> generate_arrivals(ArrivalRate lambda, std::int64_t n, std::uint64_t seed) {
  if (!(lambda.per_second() > 0.0)) throw std::invalid_argument("arrival rate must be > 0");
  return generate_arrivals(std::vector<RateSegment>{{TimePoint{0}, lambda}}, n, seed);
}

std::vector<TimePoint> generate_arrivals(const std::vector<RateSegment>& schedule, std::int64_t n,
                                         std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("request count must be >= 1");
  if (schedule.empty()) throw std::invalid_argument("empty rate schedule");

  Rng rng(seed);
  std::vector<TimePoint> out;
  out.reserve(static_cast<std::size_t>(n));

  // Exact inversion of the cumulative hazard: draw a unit-mean exponential
  // and spend it across segments at each segment's rate.
  double t = 0.0;
  std::size_t seg = 0;
  std::int64_t prev = 0;
  for (std::int64_t i = 0; i < n; ++i) {
    double budget = rng.exponential(1.0);
    for (;;) {
      const double rate = schedule[seg].rate.per_microsecond();
      const double seg_end = seg + 1 < schedule.size()
                                 ? static_cast<double>(schedule[seg + 1].start.count())
                                 : std::numeric_limits<double>::infinity();
      if (rate > 0.0 && t + budget / rate < seg_end) {
        t += budget / rate;
        break;
      }
      if (seg + 1 >= schedule.size()) return out;  // trailing zero-rate segment
      budget -= (seg_end - t) * rate;
      t = seg_end;
      ++seg;
    }
    const auto ts = std::max<std::int64_t>(prev + 1, std::llround(t));
    out.emplace_back(ts);
    prev = ts;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Engine

namespace {

enum class EventKind : int {
  // Lower value runs first at equal timestamps.
  rate_change = 0,
  switch_apply = 1,
  restart_done = 2,
  completion = 3,
  arrival = 4,
};

struct Event {
  TimePoint time;
  EventKind kind;
  std::uint64_t seq;
  std::size_t target;  // service index, request index, or segment index

  bool operator>(const Event& o) const {
    if (time != o.time) return time > o.time;
    if (kind != o.kind) return kind > o.kind;
    return seq > o.seq;
  }
};

struct Job {
  std::size_t request;
  std::size_t stage;
};

struct Server {
  const MicroserviceSpec* spec = nullptr;
  std::vector<VariantProfile> profiles;
  std::size_t serving = 0;  // profile index used for requests starting now
  std::optional<SwitchController> controller;
  std::deque<Job> waiting;
  std::optional<Job> in_service;
  TimePoint busy_until{0};
  bool down = false;            // restarting
  bool restart_pending = false; // go down once the in-flight request finishes
  std::size_t pending_target = 0;
  Rng noise_rng{0};
  int chain_multiplicity = 0;

  std::size_t profile_index(const std::string& id) const {
    for (std::size_t i = 0; i < profiles.size(); ++i) {
      if (profiles[i].variant_id == id) return i;
    }
    throw std::logic_error("unknown variant '" + id + "'");
  }
};

struct InFlight {
  std::size_t chain;
  RequestRecord record;
  std::vector<std::size_t> route;  // server index per stage
};

class Engine {
 public:
  explicit Engine(const ScenarioConfig& config) : config_(config) {}

  SimulationTrace run();

 private:
  void push(TimePoint t, EventKind kind, std::size_t target) {
    events_.push({t, kind, next_seq_++, target});
  }

  void arrive(std::size_t request, std::size_t stage, TimePoint now);
  void start_service(std::size_t server, Job job, TimePoint now);
  void complete(std::size_t server, TimePoint now);
  void observe(std::size_t server, SwitchController::Event event, TimePoint now);
  void handle_decision(std::size_t server, const SwitchDecision& decision, TimePoint now);
  void apply_switch(std::size_t server, TimePoint now);
  void finish_restart(std::size_t server, TimePoint now);
  void try_start_next(std::size_t server, TimePoint now);
  void sample(std::size_t server, SampleEvent event, TimePoint now);

  const ScenarioConfig& config_;
  std::vector<Server> servers_;
  std::vector<InFlight> requests_;
  std::vector<RateSegment> schedule_;
  std::priority_queue<Event, std::vector<Event>, std::greater<>> events_;
  std::uint64_t next_seq_ = 0;
  SimulationTrace trace_;
};

SimulationTrace Engine::run() {
  const auto chains = config_.resolved_chains();
  schedule_ = config_.resolved_schedule();

  trace_.config = config_;
  trace_.rng_seed = config_.seed;

  // Servers, one per declared service.
  servers_.resize(config_.services.size());
  std::map<std::string, std::size_t> index_of;
  for (std::size_t i = 0; i < config_.services.size(); ++i) {
    auto& s = servers_[i];
    s.spec = &config_.services[i];
    s.profiles = s.spec->profiles();
    s.noise_rng = Rng(derive_seed(derive_seed(config_.seed, 1), i));
    index_of[s.spec->service_id] = i;
  }

  // Per-service switching budget: the tightest C / stage_count over the
  // chains that route through the service.
  std::vector<std::optional<Duration>> budget(servers_.size());
  std::vector<Duration> chain_constraint(chains.size());
  for (std::size_t c = 0; c < chains.size(); ++c) {
    chain_constraint[c] = chains[c].constraint.value_or(config_.constraint);
    const auto share = chain_constraint[c] / static_cast<std::int64_t>(chains[c].stages.size());
    for (const auto& stage : chains[c].stages) {
      const auto i = index_of.at(stage);
      ++servers_[i].chain_multiplicity;
      if (!budget[i] || share < *budget[i]) budget[i] = share;
    }
  }

  const auto initial_rate = schedule_.front().rate;
  for (std::size_t i = 0; i < servers_.size(); ++i) {
    auto& s = servers_[i];
    // Services outside every chain never receive traffic; give them the
    // scenario constraint so the controller is still well-formed.
    const Duration c = budget[i].value_or(config_.constraint > Duration::zero()
                                              ? config_.constraint
                                              : Duration{1});
    s.controller.emplace(s.profiles, initial_rate * s.chain_multiplicity, c, config_.policy);
    const auto initial = s.controller->initialize(s.spec->initial_variant, TimePoint{0});
    s.serving = s.profile_index(initial.target_variant);
    trace_.initial_variants[s.spec->service_id] = initial.target_variant;
  }

  // Arrival streams, merged in (time, chain) order so request ids follow
  // global arrival order.
  struct Pending {
    TimePoint t;
    std::size_t chain;
  };
  std::vector<Pending> arrivals;
  for (std::size_t c = 0; c < chains.size(); ++c) {
    const auto ts = generate_arrivals(schedule_, config_.request_count,
                                      derive_seed(derive_seed(config_.seed, 0), c));
    for (auto t : ts) arrivals.push_back({t, c});
  }
  std::stable_sort(arrivals.begin(), arrivals.end(),
                   [](const Pending& a, const Pending& b) { return a.t < b.t; });

  requests_.reserve(arrivals.size());
  for (std::size_t r = 0; r < arrivals.size(); ++r) {
    InFlight f;
    f.chain = arrivals[r].chain;
    f.record.request_id = static_cast<std::int64_t>(r);
    f.record.chain_id = chains[f.chain].chain_id;
    f.record.constraint = chain_constraint[f.chain];
    for (const auto& stage : chains[f.chain].stages) f.route.push_back(index_of.at(stage));
    requests_.push_back(std::move(f));
    push(arrivals[r].t, EventKind::arrival, r);
  }
  for (std::size_t k = 1; k < schedule_.size(); ++k) {
    push(schedule_[k].start, EventKind::rate_change, k);
  }

  while (!events_.empty()) {
    const Event ev = events_.top();
    if (config_.horizon && ev.time > *config_.horizon) break;
    events_.pop();
    switch (ev.kind) {
      case EventKind::rate_change:
        for (auto& s : servers_) {
          s.controller->set_arrival_rate(schedule_[ev.target].rate * s.chain_multiplicity);
        }
        break;
      case EventKind::switch_apply: apply_switch(ev.target, ev.time); break;
      case EventKind::restart_done: finish_restart(ev.target, ev.time); break;
      case EventKind::completion: complete(ev.target, ev.time); break;
      case EventKind::arrival:
        ++trace_.injected;
        arrive(ev.target, 0, ev.time);
        break;
    }
  }

  trace_.in_system_at_end = trace_.injected - static_cast<std::int64_t>(trace_.records.size());
  return std::move(trace_);
}

void Engine::arrive(std::size_t request, std::size_t stage, TimePoint now) {
  auto& f = requests_[request];
  const auto si = f.route[stage];
  auto& s = servers_[si];

  StageRecord rec;
  rec.service_id = s.spec->service_id;
  rec.arrival = now;
  rec.queue_length_at_arrival = static_cast<std::int64_t>(s.waiting.size());
  f.record.stages.push_back(std::move(rec));

  const Job job{request, stage};
  if (!s.in_service && !s.down && !s.restart_pending && s.waiting.empty()) {
    start_service(si, job, now);
  } else {
    s.waiting.push_back(job);
  }
  sample(si, SampleEvent::arrival, now);
  observe(si, SwitchController::Event::arrival, now);
}

void Engine::start_service(std::size_t si, Job job, TimePoint now) {
  auto& s = servers_[si];
  const auto& profile = s.profiles[s.serving];
  Duration d = profile.service_time;
  if (profile.noise.kind == NoiseModel::Kind::lognormal) {
    const double m = s.noise_rng.lognormal_multiplier(profile.noise.sigma_rel);
    d = Duration{std::max<std::int64_t>(1, std::llround(static_cast<double>(d.count()) * m))};
  }
  auto& rec = requests_[job.request].record.stages[job.stage];
  rec.variant_id = profile.variant_id;
  rec.service_start = now;
  rec.service_end = now + d;
  s.in_service = job;
  s.busy_until = now + d;
  push(now + d, EventKind::completion, si);
}

void Engine::complete(std::size_t si, TimePoint now) {
  auto& s = servers_[si];
  const Job job = *s.in_service;
  s.in_service.reset();

  auto& f = requests_[job.request];
  if (job.stage + 1 < f.route.size()) {
    arrive(job.request, job.stage + 1, now);
  } else {
    auto& rec = f.record;
    rec.sojourn = rec.completion() - rec.arrival();
    rec.violated = rec.sojourn > rec.constraint;
    rec.qor = 1.0;
    for (const auto& st : rec.stages) {
      const auto& srv = servers_[f.route[&st - rec.stages.data()]];
      rec.qor *= srv.profiles[srv.profile_index(st.variant_id)].qor;
    }
    trace_.records.push_back(std::move(rec));
  }

  if (s.restart_pending) {
    s.restart_pending = false;
    s.down = true;
    push(now + config_.policy.restart_duration, EventKind::restart_done, si);
  } else {
    try_start_next(si, now);
  }
  sample(si, SampleEvent::completion, now);
  observe(si, SwitchController::Event::completion, now);
}

void Engine::try_start_next(std::size_t si, TimePoint now) {
  auto& s = servers_[si];
  if (s.in_service || s.down || s.waiting.empty()) return;
  const Job next = s.waiting.front();
  s.waiting.pop_front();
  start_service(si, next, now);
}

void Engine::observe(std::size_t si, SwitchController::Event event, TimePoint now) {
  auto& s = servers_[si];
  const std::string before = s.controller->current_variant();
  const auto decision =
      s.controller->on_observation(static_cast<std::int64_t>(s.waiting.size()), event, now);
  if (!decision) return;

  SwitchEvent ev;
  ev.time = now;
  ev.service_id = s.spec->service_id;
  ev.from_variant = before;
  ev.to_variant = decision->target_variant;
  ev.reason = decision->reason;
  handle_decision(si, *decision, now);
  ev.applied_after = config_.policy.switch_mode == SwitchMode::restart && s.restart_pending
                         ? (s.busy_until - now) + config_.policy.restart_duration
                         : config_.policy.applied_after();
  trace_.switches.push_back(std::move(ev));
}

void Engine::handle_decision(std::size_t si, const SwitchDecision& decision, TimePoint now) {
  auto& s = servers_[si];
  s.pending_target = s.profile_index(decision.target_variant);
  if (config_.policy.switch_mode == SwitchMode::control_channel) {
    push(now + config_.policy.switch_latency, EventKind::switch_apply, si);
    return;
  }
  if (s.in_service) {
    s.restart_pending = true;
  } else {
    s.down = true;
    push(now + config_.policy.restart_duration, EventKind::restart_done, si);
  }
}

void Engine::apply_switch(std::size_t si, TimePoint now) {
  auto& s = servers_[si];
  s.serving = s.pending_target;
  s.controller->switch_applied();
  try_start_next(si, now);
}

void Engine::finish_restart(std::size_t si, TimePoint now) {
  auto& s = servers_[si];
  s.down = false;
  s.serving = s.pending_target;
  s.controller->switch_applied();
  try_start_next(si, now);
}

void Engine::sample(std::size_t si, SampleEvent event, TimePoint now) {
  trace_.queue_samples.push_back({now, servers_[si].spec->service_id,
                                  static_cast<std::int64_t>(servers_[si].waiting.size()), event});
}

}  // namespace

SimulationTrace run_scenario(const ScenarioConfig& config) {
  if (auto report = config.validate(); !report.ok()) {
    throw ConfigError("invalid scenario:\n" + report.to_string());
  }
  return Engine(config).run();
}

bool replay_check(const ScenarioConfig& config) {
  return run_scenario(config) == run_scenario(config);
}

}  // namespace varsim
