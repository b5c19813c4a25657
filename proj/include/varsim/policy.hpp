#ifndef VARSIM_POLICY_HPP
#define VARSIM_POLICY_HPP

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "varsim/core_model.hpp"
#include "varsim/types.hpp"

namespace varsim {

// How a switch command reaches a running service.
enum class SwitchMode {
  // Live reconfiguration through the service's control queue. The old
  // variant keeps serving until the command lands switch_latency later.
  control_channel,
  // Stop and restart in the target variant. The server finishes its current
  // request, then is unavailable for restart_duration.
  restart,
};

// Where the variant a service starts in comes from.
enum class InitialSelection {
  policy,      // select_variant over all profiles
  configured,  // MicroserviceSpec::initial_variant
};

// Switch back to a slower, higher-quality variant after the queue has stayed
// short for a while. Off unless configured.
struct RecoveryOptions {
  std::int64_t stable_window = 50;
  double margin = 0.5;

  friend bool operator==(const RecoveryOptions&, const RecoveryOptions&) = default;
};

struct PolicyOptions {
  bool switching = true;
  bool stability_check = true;
  double alpha = 1.0;
  std::int64_t cooldown = 0;
  std::optional<RecoveryOptions> recovery;
  Duration switch_latency = std::chrono::milliseconds{17};
  SwitchMode switch_mode = SwitchMode::control_channel;
  Duration restart_duration = std::chrono::milliseconds{1800};
  InitialSelection initial_selection = InitialSelection::policy;

  ValidationReport validate() const;

  // Time between a decision and the new variant taking effect.
  Duration applied_after() const {
    return switch_mode == SwitchMode::restart ? restart_duration : switch_latency;
  }

  friend bool operator==(const PolicyOptions&, const PolicyOptions&) = default;
};

enum class SwitchReason { threshold_exceeded, initial_selection, recovery };

const char* to_string(SwitchReason reason);
const char* to_string(SwitchMode mode);
const char* to_string(InitialSelection selection);

struct SwitchDecision {
  std::string target_variant;
  SwitchReason reason = SwitchReason::threshold_exceeded;
  TimePoint decided_at{0};

  friend bool operator==(const SwitchDecision&, const SwitchDecision&) = default;
};

struct Selection {
  std::string variant_id;
  // No candidate passed the filters; variant_id is the fastest variant.
  bool degraded = false;

  friend bool operator==(const Selection&, const Selection&) = default;
};

// Whether a variant may be selected for arrival rate lambda under constraint
// C. With the stability check on a candidate needs rho < 1 and a mean M/D/1
// wait below C. With it off, unstable candidates only need D < C.
bool is_feasible(const VariantProfile& profile, ArrivalRate lambda, Duration constraint,
                 bool stability_check);

// Picks the slowest feasible variant (slower is assumed to mean better
// results). Ties go to higher QoR, then the lexicographically smallest id.
// Falls back to the fastest variant with degraded = true.
// Throws std::invalid_argument for an empty profile list.
Selection select_variant(std::span<const VariantProfile> profiles, ArrivalRate lambda,
                         Duration constraint, const PolicyOptions& options);

// L > alpha * T.
bool should_switch(std::int64_t queue_length, std::int64_t threshold, double alpha);

// Runtime switching state for one service instance. The simulator feeds it
// a queue-length observation after every arrival and completion; decisions
// are committed immediately and block further decisions until the simulator
// reports the switch as applied.
class SwitchController {
 public:
  SwitchController(std::vector<VariantProfile> profiles, ArrivalRate lambda, Duration constraint,
                   PolicyOptions options);

  // Chooses the starting variant. Must be called once before observations.
  SwitchDecision initialize(const std::string& configured_variant, TimePoint now);

  enum class Event { arrival, completion };

  std::optional<SwitchDecision> on_observation(std::int64_t queue_length, Event event,
                                               TimePoint now);

  void switch_applied() { pending_ = false; }

  // Scenario-known rate changes (workload shifts), not online estimation.
  void set_arrival_rate(ArrivalRate lambda) { lambda_ = lambda; }

  const std::string& current_variant() const { return current_; }
  const VariantProfile& current_profile() const;
  bool pending() const { return pending_; }
  std::int64_t completions_since_switch() const { return completions_since_switch_; }
  // alpha * T for the current variant.
  double dampened_threshold() const;

 private:
  std::optional<SwitchDecision> decide(SwitchReason reason, const std::vector<VariantProfile>& pool,
                                       TimePoint now);
  void commit(const SwitchDecision& decision);

  std::vector<VariantProfile> profiles_;
  ArrivalRate lambda_;
  Duration constraint_;
  PolicyOptions options_;
  std::string current_;
  bool pending_ = false;
  std::int64_t completions_since_switch_ = 0;
  std::int64_t stable_streak_ = 0;
};

}  // namespace varsim

#endif  // VARSIM_POLICY_HPP
