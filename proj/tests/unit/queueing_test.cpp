#include <gtest/gtest.h>

#include <stdexcept>

#include "varsim/queueing.hpp"
#include "varsim/random.hpp"

namespace varsim::queueing {
namespace {

using namespace std::chrono_literals;

ArrivalRate per_s(double r) { return ArrivalRate::per_second(r); }

TEST(Utilization, Examples) {
  EXPECT_EQ(utilization(per_s(0), 70ms), 0.0);
  EXPECT_DOUBLE_EQ(utilization(per_s(10), 50ms), 0.5);
  EXPECT_NEAR(utilization(per_s(17), 70ms), 1.19, 1e-12);
  EXPECT_THROW(utilization(per_s(1), Duration{0}), std::domain_error);
  EXPECT_THROW(utilization(per_s(-1), 10ms), std::domain_error);
}

TEST(Utilization, RateUnits) {
  EXPECT_DOUBLE_EQ(utilization(ArrivalRate::per_minute(60), 500ms), 0.5);
  EXPECT_DOUBLE_EQ(utilization(ArrivalRate::per_hour(3600), 250ms), 0.25);
}

TEST(IsStable, Examples) {
  EXPECT_TRUE(is_stable(per_s(10), 50ms));
  EXPECT_FALSE(is_stable(per_s(20), 50ms));
  EXPECT_TRUE(is_stable(per_s(17), 45ms));
  EXPECT_FALSE(is_stable(per_s(17), 70ms));
}

TEST(WaitingTime, Examples) {
  EXPECT_EQ(waiting_time(0, 70ms), 70ms);
  EXPECT_EQ(waiting_time(6, 70ms), 490ms);
  EXPECT_EQ(waiting_time(7, 70ms), 560ms);
  EXPECT_THROW(waiting_time(-1, 70ms), std::domain_error);
}

TEST(Threshold, Examples) {
  EXPECT_EQ(threshold(500ms, 70ms), (Threshold{6, true}));
  EXPECT_EQ(threshold(16000ms, 3600ms), (Threshold{3, true}));
  EXPECT_EQ(threshold(500ms, 500ms), (Threshold{0, true}));
  EXPECT_EQ(threshold(60ms, 70ms), (Threshold{0, false}));
  EXPECT_THROW(threshold(Duration{0}, 70ms), std::domain_error);
  EXPECT_THROW(threshold(500ms, Duration{0}), std::domain_error);
}

TEST(Threshold, ExactMultipleIsNotRoundedDown) {
  // C/D - 1 = 4 exactly; no float drift.
  EXPECT_EQ(threshold(500ms, 100ms).value, 4);
  EXPECT_EQ(threshold(Duration{300000}, Duration{100000}).value, 2);
}

TEST(DampenedThreshold, Examples) {
  EXPECT_DOUBLE_EQ(dampened_threshold(6, 1.0), 6.0);
  EXPECT_DOUBLE_EQ(dampened_threshold(6, 0.5), 3.0);
  EXPECT_DOUBLE_EQ(dampened_threshold(0, 0.3), 0.0);
  EXPECT_THROW(dampened_threshold(6, 0.0), std::domain_error);
  EXPECT_THROW(dampened_threshold(6, 1.5), std::domain_error);
}

TEST(AvgWait, Examples) {
  EXPECT_DOUBLE_EQ(avg_wait(1s, 0.0).count(), 1e6);
  EXPECT_DOUBLE_EQ(avg_wait(1s, 0.5).count(), 1.5e6);
  EXPECT_NEAR(avg_wait(70ms, 0.7).count() / 1000.0, 70.0 + 70.0 * 0.7 / 0.6, 1e-9);
  EXPECT_NEAR(avg_wait(70ms, 0.7).count() / 1000.0, 151.667, 1e-3);
}

TEST(AvgWait, UnstableIsAnError) {
  try {
    avg_wait(70ms, 1.0);
    FAIL() << "expected domain_error";
  } catch (const std::domain_error& e) {
    EXPECT_STREQ(e.what(), "unstable queue: average wait undefined");
  }
  EXPECT_THROW(avg_wait(70ms, 1.19), std::domain_error);
  EXPECT_THROW(avg_wait(70ms, -0.1), std::domain_error);
}

TEST(QueueParams, Validation) {
  QueueParams ok{per_s(10), 50ms, 500ms, 1.0};
  EXPECT_NO_THROW(ok.validate());
  auto bad = ok;
  bad.alpha = 0.0;
  EXPECT_THROW(bad.validate(), std::domain_error);
  bad = ok;
  bad.constraint = Duration{0};
  EXPECT_THROW(bad.validate(), std::domain_error);
}

TEST(QueueingProperty, AvgWaitStrictlyIncreasingInRho) {
  double prev = -1.0;
  for (int i = 0; i < 1000; ++i) {
    const double rho = i / 1000.0;
    const double w = avg_wait(70ms, rho).count();
    EXPECT_GT(w, prev);
    prev = w;
  }
}

TEST(QueueingProperty, ThresholdNonIncreasingInServiceTime) {
  Rng rng(3);
  for (int i = 0; i < 2000; ++i) {
    const Duration c{1 + static_cast<std::int64_t>(rng.below(20'000'000))};
    const Duration d1{1 + static_cast<std::int64_t>(rng.below(5'000'000))};
    const Duration d2 = d1 + Duration{static_cast<std::int64_t>(rng.below(1'000'000))};
    EXPECT_GE(threshold(c, d1).value, threshold(c, d2).value);
  }
}

// waiting_time(T) <= C < waiting_time(T + 2) for every feasible threshold.
TEST(QueueingProperty, ThresholdBracketsConstraint) {
  Rng rng(4);
  for (int i = 0; i < 5000; ++i) {
    const Duration c{1 + static_cast<std::int64_t>(rng.below(20'000'000))};
    const Duration d{1 + static_cast<std::int64_t>(rng.below(5'000'000))};
    const auto t = threshold(c, d);
    if (!t.feasible) {
      EXPECT_LT(c, d);
      continue;
    }
    EXPECT_LE(waiting_time(t.value, d), c);
    EXPECT_LT(c, waiting_time(t.value + 2, d));
  }
}

TEST(QueueingProperty, ThresholdInvariantUnderJointScaling) {
  Rng rng(5);
  for (int i = 0; i < 1000; ++i) {
    const std::int64_t c = 1 + static_cast<std::int64_t>(rng.below(1'000'000));
    const std::int64_t d = 1 + static_cast<std::int64_t>(rng.below(100'000));
    const std::int64_t k = 1 + static_cast<std::int64_t>(rng.below(50));
    EXPECT_EQ(threshold(Duration{c}, Duration{d}), threshold(Duration{c * k}, Duration{d * k}));
  }
}

}  // namespace
}  // namespace varsim::queueing
