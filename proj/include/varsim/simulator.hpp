#ifndef VARSIM_SIMULATOR_HPP
#define VARSIM_SIMULATOR_HPP

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "varsim/core_model.hpp"
#include "varsim/policy.hpp"
#include "varsim/types.hpp"

namespace varsim {

// Piecewise-constant arrival rate: `rate` applies from `start` until the next
// segment's start. The first segment must start at zero.
struct RateSegment {
  TimePoint start{0};
  ArrivalRate rate;

  friend bool operator==(const RateSegment&, const RateSegment&) = default;
};

struct ScenarioConfig {
  std::string name;
  std::vector<MicroserviceSpec> services;
  // Empty means one single-stage chain per service, named after it.
  std::vector<ServiceChainSpec> chains;
  // Per-chain Poisson rate. Every chain receives its own stream.
  ArrivalRate lambda;
  // Default end-to-end constraint for chains that do not declare one.
  Duration constraint{0};
  PolicyOptions policy;
  // Requests injected per chain.
  std::int64_t request_count = 1;
  std::uint64_t seed = 0;
  // Overrides `lambda` when non-empty.
  std::vector<RateSegment> lambda_schedule;
  // Stop processing events after this instant; requests still queued are
  // counted as in-system.
  std::optional<TimePoint> horizon;

  ValidationReport validate() const;
  std::vector<ServiceChainSpec> resolved_chains() const;
  std::vector<RateSegment> resolved_schedule() const;
  const MicroserviceSpec* find_service(const std::string& id) const;

  friend bool operator==(const ScenarioConfig&, const ScenarioConfig&) = default;
};

struct StageRecord {
  std::string service_id;
  std::string variant_id;
  TimePoint arrival{0};
  TimePoint service_start{0};
  TimePoint service_end{0};
  // Requests waiting ahead at arrival, excluding the one in service.
  std::int64_t queue_length_at_arrival = 0;

  Duration execution_time() const { return service_end - service_start; }

  friend bool operator==(const StageRecord&, const StageRecord&) = default;
};

struct RequestRecord {
  std::int64_t request_id = 0;
  std::string chain_id;
  std::vector<StageRecord> stages;
  Duration sojourn{0};
  Duration constraint{0};
  bool violated = false;
  double qor = 1.0;

  TimePoint arrival() const { return stages.front().arrival; }
  TimePoint completion() const { return stages.back().service_end; }

  friend bool operator==(const RequestRecord&, const RequestRecord&) = default;
};

struct SwitchEvent {
  TimePoint time{0};
  std::string service_id;
  std::string from_variant;
  std::string to_variant;
  SwitchReason reason = SwitchReason::threshold_exceeded;
  // Delay between decision and effect. Equals the switch latency for
  // control-channel switches; for restarts it includes the wait for the
  // in-flight request.
  Duration applied_after{0};

  TimePoint effective_at() const { return time + applied_after; }

  friend bool operator==(const SwitchEvent&, const SwitchEvent&) = default;
};

enum class SampleEvent { arrival, completion };

const char* to_string(SampleEvent e);

struct QueueSample {
  TimePoint time{0};
  std::string service_id;
  std::int64_t length = 0;
  SampleEvent event = SampleEvent::arrival;

  friend bool operator==(const QueueSample&, const QueueSample&) = default;
};

struct SimulationTrace {
  // Ordered by end-to-end completion time.
  std::vector<RequestRecord> records;
  std::vector<SwitchEvent> switches;
  std::vector<QueueSample> queue_samples;
  // Starting variant per service.
  std::map<std::string, std::string> initial_variants;
  ScenarioConfig config;
  std::uint64_t rng_seed = 0;
  std::int64_t injected = 0;
  std::int64_t in_system_at_end = 0;

  friend bool operator==(const SimulationTrace&, const SimulationTrace&) = default;
};

// n strictly increasing arrival instants with i.i.d. exponential gaps of
// mean 1 / lambda, rounded to whole microseconds (minimum gap 1 us).
// Throws std::invalid_argument for lambda <= 0 or n < 1.
std::vector<TimePoint> generate_arrivals(ArrivalRate lambda, std::int64_t n, std::uint64_t seed);

// Non-homogeneous variant for a piecewise-constant rate. May return fewer
// than n instants when the schedule ends in a zero-rate segment.
std::vector<TimePoint> generate_arrivals(const std::vector<RateSegment>& schedule, std::int64_t n,
                                         std::uint64_t seed);

// Runs the scenario to completion (or to its horizon). Throws ConfigError
// before any event runs when the configuration does not validate.
SimulationTrace run_scenario(const ScenarioConfig& config);

// Runs the scenario twice and compares the traces for exact equality.
bool replay_check(const ScenarioConfig& config);

}  // namespace varsim

#endif  // VARSIM_SIMULATOR_HPP
