#ifndef VARSIM_QUEUEING_HPP
#define VARSIM_QUEUEING_HPP

#include <cstdint>

#include "varsim/types.hpp"

// Closed-form M/D/1 results used by the switching policy. A service is a
// single FIFO server with Poisson arrivals at rate lambda and a deterministic
// service time D. Domain violations throw std::domain_error.
namespace varsim::queueing {

struct QueueParams {
  ArrivalRate lambda;
  Duration service_time{0};
  Duration constraint{0};
  double alpha = 1.0;

  // Throws std::domain_error when any field is outside its domain.
  void validate() const;
};

// rho = lambda * D, i.e. lambda / mu with mu = 1 / D.
double utilization(ArrivalRate lambda, Duration service_time);

// rho < 1. rho == 1 counts as unstable: the expected queue grows without
// bound there even though the textbook condition is only rho > 1.
bool is_stable(ArrivalRate lambda, Duration service_time);

// Time a request waits when it finds queue_length requests ahead of it
// (excluding the one in service): (L + 1) * D.
Duration waiting_time(std::int64_t queue_length, Duration service_time);

struct Threshold {
  std::int64_t value = 0;
  // False when C < D, where even a request that finds an empty queue
  // violates the constraint.
  bool feasible = true;

  friend bool operator==(const Threshold&, const Threshold&) = default;
};

// T = max(0, floor(C / D - 1)), computed in integer arithmetic.
Threshold threshold(Duration constraint, Duration service_time);

// alpha * T with alpha in (0, 1].
double dampened_threshold(std::int64_t threshold, double alpha);

// Mean M/D/1 sojourn (queue + service): D + D * rho / (2 * (1 - rho)).
// Throws std::domain_error("unstable queue: average wait undefined") for
// rho >= 1.
FractionalDuration avg_wait(Duration service_time, double rho);

}  // namespace varsim::queueing

#endif  // VARSIM_QUEUEING_HPP
