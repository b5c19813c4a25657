#include "varsim/policy.hpp"

#include <algorithm>
#include <stdexcept>

#include "varsim/queueing.hpp"

namespace varsim {

ValidationReport PolicyOptions::validate() const {
  ValidationReport report;
  if (!(alpha > 0.0 && alpha <= 1.0)) report.add("policy.alpha", "must lie in (0, 1]");
  if (cooldown < 0) report.add("policy.cooldown", "must be >= 0");
  if (switch_latency < Duration::zero()) report.add("policy.switch_latency", "must be >= 0");
  if (restart_duration < Duration::zero()) report.add("policy.restart_duration", "must be >= 0");
  if (recovery) {
    if (recovery->stable_window < 1) report.add("policy.recovery.stable_window", "must be >= 1");
    if (!(recovery->margin >= 0.0)) report.add("policy.recovery.margin", "must be >= 0");
  }
  return report;
}

const char* to_string(SwitchReason reason) {
  switch (reason) {
    case SwitchReason::threshold_exceeded: return "threshold_exceeded";
    case SwitchReason::initial_selection: return "initial_selection";
    case SwitchReason::recovery: return "recovery";
  }
  return "unknown";
}

const char* to_string(SwitchMode mode) {
  return mode == SwitchMode::restart ? "restart" : "control_channel";
}

const char* to_string(InitialSelection selection) {
  return selection == InitialSelection::configured ? "configured" : "policy";
}

bool is_feasible(const VariantProfile& profile, ArrivalRate lambda, Duration constraint,
                 bool stability_check) {
  const double rho = queueing::utilization(lambda, profile.service_time);
  if (rho < 1.0) {
    return queueing::avg_wait(profile.service_time, rho) <
           FractionalDuration{static_cast<double>(constraint.count())};
  }
  return !stability_check && profile.service_time < constraint;
}

Selection select_variant(std::span<const VariantProfile> profiles, ArrivalRate lambda,
                         Duration constraint, const PolicyOptions& options) {
  if (profiles.empty()) throw std::invalid_argument("select_variant: empty profile list");

  // Strict "better than" for the preferred candidate: slower, then higher
  // QoR, then smaller id.
  auto slower_first = [](const VariantProfile& a, const VariantProfile& b) {
    if (a.service_time != b.service_time) return a.service_time > b.service_time;
    if (a.qor != b.qor) return a.qor > b.qor;
    return a.variant_id < b.variant_id;
  };

  const VariantProfile* best = nullptr;
  for (const auto& p : profiles) {
    if (!is_feasible(p, lambda, constraint, options.stability_check)) continue;
    if (best == nullptr || slower_first(p, *best)) best = &p;
  }
  if (best != nullptr) return {best->variant_id, false};

  auto faster_first = [](const VariantProfile& a, const VariantProfile& b) {
    if (a.service_time != b.service_time) return a.service_time < b.service_time;
    if (a.qor != b.qor) return a.qor > b.qor;
    return a.variant_id < b.variant_id;
  };
  const auto fastest = std::min_element(profiles.begin(), profiles.end(), faster_first);
  return {fastest->variant_id, true};
}

bool should_switch(std::int64_t queue_length, std::int64_t threshold, double alpha) {
  return static_cast<double>(queue_length) > alpha * static_cast<double>(threshold);
}

SwitchController::SwitchController(std::vector<VariantProfile> profiles, ArrivalRate lambda,
                                   Duration constraint, PolicyOptions options)
    : profiles_(std::move(profiles)),
      lambda_(lambda),
      constraint_(constraint),
      options_(std::move(options)) {
  if (profiles_.empty()) throw std::invalid_argument("SwitchController: empty profile list");
  if (auto report = options_.validate(); !report.ok()) throw ConfigError(report.to_string());
}

SwitchDecision SwitchController::initialize(const std::string& configured_variant, TimePoint now) {
  std::string target = configured_variant;
  if (options_.initial_selection == InitialSelection::policy) {
    target = select_variant(profiles_, lambda_, constraint_, options_).variant_id;
  }
  current_ = target;
  pending_ = false;
  completions_since_switch_ = 0;
  stable_streak_ = 0;
  return {target, SwitchReason::initial_selection, now};
}

const VariantProfile& SwitchController::current_profile() const {
  for (const auto& p : profiles_) {
    if (p.variant_id == current_) return p;
  }
  throw std::logic_error("SwitchController: current variant '" + current_ + "' has no profile");
}

double SwitchController::dampened_threshold() const {
  const auto t = queueing::threshold(constraint_, current_profile().service_time);
  return queueing::dampened_threshold(t.value, options_.alpha);
}

std::optional<SwitchDecision> SwitchController::on_observation(std::int64_t queue_length,
                                                               Event event, TimePoint now) {
  const auto& cur = current_profile();
  const auto t = queueing::threshold(constraint_, cur.service_time);

  if (event == Event::completion) {
    ++completions_since_switch_;
    if (options_.recovery &&
        static_cast<double>(queue_length) <=
            options_.recovery->margin * queueing::dampened_threshold(t.value, options_.alpha)) {
      ++stable_streak_;
    } else {
      stable_streak_ = 0;
    }
  }

  if (!options_.switching || pending_) return std::nullopt;
  if (completions_since_switch_ < options_.cooldown) return std::nullopt;

  if (should_switch(queue_length, t.value, options_.alpha)) {
    std::vector<VariantProfile> faster;
    for (const auto& p : profiles_) {
      if (p.service_time < cur.service_time) faster.push_back(p);
    }
    return decide(SwitchReason::threshold_exceeded, faster, now);
  }

  if (options_.recovery && event == Event::completion &&
      stable_streak_ >= options_.recovery->stable_window) {
    std::vector<VariantProfile> slower;
    for (const auto& p : profiles_) {
      if (p.service_time > cur.service_time &&
          is_feasible(p, lambda_, constraint_, options_.stability_check)) {
        slower.push_back(p);
      }
    }
    return decide(SwitchReason::recovery, slower, now);
  }
  return std::nullopt;
}

std::optional<SwitchDecision> SwitchController::decide(SwitchReason reason,
                                                       const std::vector<VariantProfile>& pool,
                                                       TimePoint now) {
  if (pool.empty()) return std::nullopt;
  const auto pick = select_variant(pool, lambda_, constraint_, options_);
  if (pick.variant_id == current_) return std::nullopt;
  SwitchDecision decision{pick.variant_id, reason, now};
  commit(decision);
  return decision;
}

void SwitchController::commit(const SwitchDecision& decision) {
  current_ = decision.target_variant;
  pending_ = true;
  completions_since_switch_ = 0;
  stable_streak_ = 0;
}

}  // namespace varsim
