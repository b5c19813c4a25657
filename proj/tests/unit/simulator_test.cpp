#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>

#include "fixtures.hpp"
#include "varsim/analysis.hpp"
#include "varsim/queueing.hpp"
#include "varsim/random.hpp"
#include "varsim/simulator.hpp"

namespace varsim {
namespace {

using namespace std::chrono_literals;
using testing::entry;
using testing::face_scenario;
using testing::md1_scenario;

ArrivalRate per_s(double r) { return ArrivalRate::per_second(r); }

TEST(GenerateArrivals, MeanGapMatchesRate) {
  const auto ts = generate_arrivals(per_s(10), 100000, 5);
  ASSERT_EQ(ts.size(), 100000u);
  const double mean_gap_ms = to_ms(ts.back() - TimePoint{0}) / static_cast<double>(ts.size());
  EXPECT_NEAR(mean_gap_ms, 100.0, 1.0);
}

TEST(GenerateArrivals, SingleArrivalIsFirstGap) {
  const auto ts = generate_arrivals(per_s(10), 1, 77);
  ASSERT_EQ(ts.size(), 1u);
  Rng rng(77);
  const double gap_us = rng.exponential(1.0) / per_s(10).per_microsecond();
  EXPECT_EQ(ts[0].count(), std::max<std::int64_t>(1, std::llround(gap_us)));
}

TEST(GenerateArrivals, DeterministicAndStrictlyIncreasing) {
  const auto a = generate_arrivals(per_s(1000), 5000, 9);
  EXPECT_EQ(a, generate_arrivals(per_s(1000), 5000, 9));
  EXPECT_NE(a, generate_arrivals(per_s(1000), 5000, 10));
  for (std::size_t i = 1; i < a.size(); ++i) EXPECT_LT(a[i - 1], a[i]);
}

TEST(GenerateArrivals, BadArguments) {
  EXPECT_THROW(generate_arrivals(per_s(0), 10, 1), std::invalid_argument);
  EXPECT_THROW(generate_arrivals(per_s(-1), 10, 1), std::invalid_argument);
  EXPECT_THROW(generate_arrivals(per_s(1), 0, 1), std::invalid_argument);
}

TEST(GenerateArrivals, PiecewiseScheduleRates) {
  // 20/s for 100 s, then 5/s.
  const std::vector<RateSegment> sched{{TimePoint{0}, per_s(20)}, {TimePoint{100s}, per_s(5)}};
  const auto ts = generate_arrivals(sched, 3000, 12);
  const auto in_first = std::count_if(ts.begin(), ts.end(), [](TimePoint t) { return t < TimePoint{100s}; });
  EXPECT_NEAR(static_cast<double>(in_first), 2000.0, 150.0);
  const double rest_s = to_seconds(ts.back() - TimePoint{100s});
  EXPECT_NEAR(static_cast<double>(ts.size() - static_cast<std::size_t>(in_first)) / rest_s, 5.0, 0.5);
}

TEST(GenerateArrivals, TrailingZeroRateStopsEarly) {
  const std::vector<RateSegment> sched{{TimePoint{0}, per_s(10)}, {TimePoint{1s}, per_s(0)}};
  const auto ts = generate_arrivals(sched, 1000, 3);
  EXPECT_LT(ts.size(), 40u);
  for (auto t : ts) EXPECT_LT(t, TimePoint{1s});
}

TEST(RunScenario, SingleRequestTakesInitialServiceTime) {
  for (double lambda : {0.1, 15.0, 1000.0}) {
    const auto t = run_scenario(face_scenario(lambda, true, 3, 1));
    ASSERT_EQ(t.records.size(), 1u);
    EXPECT_EQ(t.records[0].sojourn, 70ms);
    EXPECT_TRUE(t.switches.empty());
    EXPECT_FALSE(t.records[0].violated);
  }
}

TEST(RunScenario, FaceDetectionSwitchesOnceAndStopsViolating) {
  const auto on = run_scenario(face_scenario(15, true, 1));
  ASSERT_EQ(on.switches.size(), 1u);
  EXPECT_EQ(on.switches[0].from_variant, "haar");
  EXPECT_EQ(on.switches[0].to_variant, "lbp");
  EXPECT_EQ(on.switches[0].reason, SwitchReason::threshold_exceeded);
  EXPECT_EQ(on.switches[0].applied_after, 17ms);
  const auto v = analysis::violation_stats(on);
  EXPECT_GT(v.post_switch_records, 0);
  EXPECT_EQ(v.post_switch_count, 0);
  EXPECT_GT(analysis::violation_stats(run_scenario(face_scenario(15, false, 1))).count, 0);
}

TEST(RunScenario, OverloadedBaselineQueueGrows) {
  const auto t = run_scenario(face_scenario(17, false, 1));
  const auto lengths = analysis::arrival_queue_lengths(t, "face-detection");
  EXPECT_GT(lengths.back(), lengths[lengths.size() / 5]);
  EXPECT_TRUE(t.switches.empty());
  const auto v = analysis::violation_stats(t);
  ASSERT_TRUE(v.first_violation_index);
  std::int64_t after = 0, violated_after = 0;
  for (std::size_t i = *v.first_violation_index + 1; i < t.records.size(); ++i) {
    ++after;
    violated_after += t.records[i].violated ? 1 : 0;
  }
  EXPECT_GT(static_cast<double>(violated_after) / static_cast<double>(after), 0.9);
}

ScenarioConfig upscaling(std::uint64_t seed) {
  MicroserviceSpec s;
  s.service_id = "image-upscaling";
  s.dimensions.auxiliary_data = {"gans", "psnr-large", "psnr-small"};
  s.variants = {entry("gans", 4000, 0.95), entry("psnr-large", 3600, 0.9), entry("psnr-small", 1200, 0.7)};
  for (auto& v : s.variants) v.variant.aux_data = v.variant.variant_id;
  s.initial_variant = "gans";
  ScenarioConfig c;
  c.services = {s};
  c.lambda = ArrivalRate::per_minute(14);
  c.constraint = 16000ms;
  c.request_count = 100;
  c.seed = seed;
  return c;
}

TEST(RunScenario, UpscalingSkipsGansThenSwitchesToSmallModel) {
  const auto t = run_scenario(upscaling(1));
  EXPECT_EQ(t.initial_variants.at("image-upscaling"), "psnr-large");
  ASSERT_FALSE(t.switches.empty());
  EXPECT_EQ(t.switches[0].from_variant, "psnr-large");
  EXPECT_EQ(t.switches[0].to_variant, "psnr-small");
  EXPECT_EQ(queueing::threshold(16000ms, 3600ms).value, 3);
}

TEST(RunScenario, InvalidConfigThrowsBeforeRunning) {
  auto c = face_scenario(15, true, 1);
  c.services[0].initial_variant = "surf";
  EXPECT_THROW(run_scenario(c), ConfigError);
  c = face_scenario(15, true, 1);
  c.chains = {{"c", {"missing"}, std::nullopt}};
  EXPECT_THROW(run_scenario(c), ConfigError);
  c = face_scenario(15, true, 1);
  c.policy.alpha = 2.0;
  EXPECT_THROW(run_scenario(c), ConfigError);
  c = face_scenario(15, true, 1);
  c.request_count = 0;
  EXPECT_THROW(run_scenario(c), ConfigError);
}

TEST(ReplayCheck, DeterministicIncludingNoise) {
  auto c = face_scenario(15, true, 4);
  EXPECT_TRUE(replay_check(c));
  for (auto& v : c.services[0].variants) v.profile.noise = NoiseModel::lognormal(0.2);
  EXPECT_TRUE(replay_check(c));
}

TEST(ReplayCheck, DifferentSeedsDiffer) {
  const auto a = run_scenario(face_scenario(15, true, 1));
  const auto b = run_scenario(face_scenario(15, true, 2));
  bool differs = false;
  for (std::size_t i = 0; i < std::min(a.records.size(), b.records.size()); ++i) {
    differs = differs || a.records[i].arrival() != b.records[i].arrival();
  }
  EXPECT_TRUE(differs);
}

TEST(RunScenario, ControlChannelLatencyDecidesVariantByStartTime) {
  const auto t = run_scenario(face_scenario(15, true, 1));
  ASSERT_EQ(t.switches.size(), 1u);
  const auto eff = t.switches[0].effective_at();
  for (const auto& r : t.records) {
    const auto& st = r.stages[0];
    EXPECT_EQ(st.variant_id, st.service_start >= eff ? "lbp" : "haar") << r.request_id;
    EXPECT_EQ(st.execution_time(), st.variant_id == "haar" ? 70ms : 45ms);
  }
}

TEST(RunScenario, RestartModeLeavesServiceGap) {
  auto c = face_scenario(15, true, 1);
  c.policy.switch_mode = SwitchMode::restart;
  const auto t = run_scenario(c);
  ASSERT_EQ(t.switches.size(), 1u);
  const auto& sw = t.switches[0];
  EXPECT_GE(sw.applied_after, 1800ms);
  const auto gap_start = sw.effective_at() - 1800ms;
  for (const auto& r : t.records) {
    const auto start = r.stages[0].service_start;
    EXPECT_FALSE(start >= gap_start && start < sw.effective_at()) << r.request_id;
    // Nothing runs across the gap either.
    EXPECT_FALSE(r.stages[0].service_end > gap_start && start < gap_start) << r.request_id;
    EXPECT_EQ(r.stages[0].variant_id, start >= sw.effective_at() ? "lbp" : "haar");
  }
}

ScenarioConfig chain_scenario(std::uint64_t seed, std::int64_t n = 400) {
  MicroserviceSpec blur;
  blur.service_id = "face-blur";
  blur.dimensions.algorithms = {"gaussian", "pixelate"};
  blur.variants = {entry("gaussian", 12, 0.9, "gaussian"), entry("pixelate", 9, 0.5, "pixelate")};
  blur.initial_variant = "gaussian";
  auto c = face_scenario(6, true, seed, n);
  c.policy.stability_check = true;
  c.services.push_back(blur);
  c.chains = {{"anonymize", {"face-detection", "face-blur"}, 500ms}, {"detect", {"face-detection"}, std::nullopt}};
  for (auto& s : c.services) {
    for (auto& v : s.variants) v.profile.noise = NoiseModel::lognormal(0.1);
  }
  return c;
}

TEST(RunScenario, ChainsAreCausalAndQorMultiplies) {
  const auto c = chain_scenario(8);
  const auto t = run_scenario(c);
  EXPECT_EQ(t.records.size(), 800u);
  std::map<std::string, double> qor;
  for (const auto& s : c.services) {
    for (const auto& v : s.variants) qor[s.service_id + "/" + v.variant.variant_id] = v.profile.qor;
  }
  for (const auto& r : t.records) {
    double q = 1.0;
    for (std::size_t k = 0; k < r.stages.size(); ++k) {
      const auto& st = r.stages[k];
      EXPECT_LE(st.arrival, st.service_start);
      EXPECT_LE(st.service_start, st.service_end);
      if (k > 0) EXPECT_EQ(st.arrival, r.stages[k - 1].service_end);
      q *= qor.at(st.service_id + "/" + st.variant_id);
    }
    EXPECT_DOUBLE_EQ(r.qor, q);
    EXPECT_EQ(r.sojourn, r.completion() - r.arrival());
    EXPECT_EQ(r.violated, r.sojourn > r.constraint);
    EXPECT_EQ(r.stages.size(), r.chain_id == "anonymize" ? 2u : 1u);
  }
}

TEST(RunScenario, RequestIdsFollowArrivalOrderAcrossChains) {
  const auto t = run_scenario(chain_scenario(8));
  std::vector<const RequestRecord*> by_id;
  for (const auto& r : t.records) by_id.push_back(&r);
  std::sort(by_id.begin(), by_id.end(), [](auto* a, auto* b) { return a->request_id < b->request_id; });
  for (std::size_t i = 0; i < by_id.size(); ++i) {
    EXPECT_EQ(by_id[i]->request_id, static_cast<std::int64_t>(i));
    if (i > 0) EXPECT_LE(by_id[i - 1]->arrival(), by_id[i]->arrival());
  }
}

TEST(RunScenario, RecordsSortedByCompletion) {
  const auto t = run_scenario(chain_scenario(9));
  for (std::size_t i = 1; i < t.records.size(); ++i) {
    EXPECT_LE(t.records[i - 1].completion(), t.records[i].completion());
  }
}

TEST(RunScenario, ChainStageBudgetDrivesThreshold) {
  // Budget 500 / 2 = 250 ms per stage: Haar threshold 2, so a burst of
  // three queued requests already switches the detector.
  auto c = chain_scenario(8);
  c.chains.pop_back();
  c.lambda = per_s(10);
  const auto t = run_scenario(c);
  ASSERT_FALSE(t.switches.empty());
  const auto& sw = t.switches.front();
  EXPECT_EQ(sw.service_id, "face-detection");
  // Observed queue at decision time exceeded 2.
  bool seen = false;
  for (const auto& q : t.queue_samples) {
    if (q.time == sw.time && q.service_id == "face-detection") seen = seen || q.length > 2;
  }
  EXPECT_TRUE(seen);
}

// Per service, service order equals arrival order (FIFO), stages never
// overlap on a server, and nothing is lost.
TEST(SimulatorProperty, FifoNoOverlapConservation) {
  Rng rng(101);
  for (int trial = 0; trial < 30; ++trial) {
    auto c = chain_scenario(rng.next_u64(), 150);
    c.lambda = per_s(rng.uniform(1.0, 14.0));
    c.policy.stability_check = rng.below(2) == 0;
    c.policy.switch_mode = rng.below(3) == 0 ? SwitchMode::restart : SwitchMode::control_channel;
    c.policy.alpha = rng.uniform(0.3, 1.0);
    if (rng.below(2) == 0) c.horizon = TimePoint{std::chrono::seconds{5 + static_cast<int>(rng.below(20))}};
    const auto t = run_scenario(c);
    EXPECT_EQ(t.injected, static_cast<std::int64_t>(t.records.size()) + t.in_system_at_end);
    if (!c.horizon) {
      EXPECT_EQ(t.in_system_at_end, 0);
      EXPECT_EQ(t.injected, 300);
    }
    std::map<std::string, std::vector<const StageRecord*>> per_service;
    for (const auto& r : t.records) {
      for (const auto& st : r.stages) per_service[st.service_id].push_back(&st);
    }
    for (auto& [svc, stages] : per_service) {
      std::sort(stages.begin(), stages.end(), [](auto* a, auto* b) { return a->service_start < b->service_start; });
      for (std::size_t i = 1; i < stages.size(); ++i) {
        EXPECT_LE(stages[i - 1]->arrival, stages[i]->arrival) << svc;
        EXPECT_LE(stages[i - 1]->service_end, stages[i]->service_start) << svc;
      }
    }
    for (const auto& q : t.queue_samples) EXPECT_GE(q.length, 0);
  }
}

TEST(SimulatorProperty, QueueLengthAtArrivalExcludesRequestInService) {
  // Two arrivals 1 us apart: the second sees the first in service, queue 0.
  const auto t = run_scenario(face_scenario(15, false, 1));
  for (const auto& r : t.records) {
    const auto& st = r.stages[0];
    if (st.service_start == st.arrival) EXPECT_EQ(st.queue_length_at_arrival, 0);
  }
}


class Md1Agreement : public ::testing::TestWithParam<double> {};

TEST_P(Md1Agreement, QueueingDelayMatchesClosedForm) {
  const double lambda = GetParam();
  const auto t = run_scenario(md1_scenario(50, lambda, 100000, 11));
  double wait_ms = 0.0;
  for (const auto& r : t.records) wait_ms += to_ms(r.sojourn) - 50.0;
  wait_ms /= static_cast<double>(t.records.size());
  const double rho = queueing::utilization(per_s(lambda), 50ms);
  const double expected = queueing::avg_wait(50ms, rho).count() / 1000.0 - 50.0;
  EXPECT_NEAR(wait_ms, expected, 0.05 * expected) << "rho=" << rho;

  // Little's law on the waiting line.
  const double lq = analysis::time_averaged_queue_length(t, "md1");
  EXPECT_NEAR(lq, lambda * wait_ms / 1000.0, 0.1 * lq) << "rho=" << rho;
}

INSTANTIATE_TEST_SUITE_P(Rho, Md1Agreement, ::testing::Values(6.0, 10.0, 14.0));

TEST(RunScenario, RecoveryFollowsScheduledRate) {
  auto c = face_scenario(4, true, 2, 900);
  c.policy.stability_check = true;
  c.policy.recovery = RecoveryOptions{50, 0.5};
  c.lambda_schedule = {{TimePoint{0}, per_s(4)}, {TimePoint{20s}, per_s(15)}, {TimePoint{50s}, per_s(4)}};
  const auto t = run_scenario(c);
  EXPECT_EQ(t.initial_variants.at("face-detection"), "haar");
  ASSERT_GE(t.switches.size(), 2u);
  EXPECT_EQ(t.switches.front().reason, SwitchReason::threshold_exceeded);
  EXPECT_EQ(t.switches.back().reason, SwitchReason::recovery);
  EXPECT_EQ(t.switches.back().to_variant, "haar");
  EXPECT_GE(t.switches.back().time, TimePoint{50s});
}

TEST(RunScenario, QueueSamplesAtArrivalsAndCompletions) {
  const auto t = run_scenario(face_scenario(10, false, 5, 50));
  std::int64_t arrivals = 0, completions = 0;
  for (const auto& q : t.queue_samples) (q.event == SampleEvent::arrival ? arrivals : completions) += 1;
  EXPECT_EQ(arrivals, 50);
  EXPECT_EQ(completions, 50);
}

}  // namespace
}  // namespace varsim
