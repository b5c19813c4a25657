#include "varsim/queueing.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace varsim::queueing {

namespace {

void require_positive(Duration d, const char* what) {
  if (d <= Duration::zero()) throw std::domain_error(std::string(what) + " must be > 0");
}

void require_rate(ArrivalRate lambda) {
  if (!(lambda.per_second() >= 0.0) || !std::isfinite(lambda.per_second())) {
    throw std::domain_error("arrival rate must be finite and >= 0");
  }
}

}  // namespace

void QueueParams::validate() const {
  require_rate(lambda);
  require_positive(service_time, "service time");
  require_positive(constraint, "constraint");
  if (!(alpha > 0.0 && alpha <= 1.0)) throw std::domain_error("alpha must lie in (0, 1]");
}

double utilization(ArrivalRate lambda, Duration service_time) {
  require_positive(service_time, "service time");
  require_rate(lambda);
  return lambda.per_second() * to_seconds(service_time);
}

bool is_stable(ArrivalRate lambda, Duration service_time) {
  return utilization(lambda, service_time) < 1.0;
}

Duration waiting_time(std::int64_t queue_length, Duration service_time) {
  if (queue_length < 0) throw std::domain_error("queue length must be >= 0");
  require_positive(service_time, "service time");
  return (queue_length + 1) * service_time;
}

Threshold threshold(Duration constraint, Duration service_time) {
  require_positive(constraint, "constraint");
  require_positive(service_time, "service time");
  // floor(C/D - 1) == floor(C/D) - 1 for positive integers.
  const std::int64_t raw = constraint.count() / service_time.count() - 1;
  return {std::max<std::int64_t>(0, raw), constraint >= service_time};
}

double dampened_threshold(std::int64_t threshold, double alpha) {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw std::domain_error("alpha must lie in (0, 1]");
  if (threshold < 0) throw std::domain_error("threshold must be >= 0");
  return alpha * static_cast<double>(threshold);
}

FractionalDuration avg_wait(Duration service_time, double rho) {
  require_positive(service_time, "service time");
  if (!(rho >= 0.0)) throw std::domain_error("utilization must be >= 0");
  if (rho >= 1.0) throw std::domain_error("unstable queue: average wait undefined");
  const double d = static_cast<double>(service_time.count());
  return FractionalDuration{d + d * rho / (2.0 * (1.0 - rho))};
}

}  // namespace varsim::queueing
