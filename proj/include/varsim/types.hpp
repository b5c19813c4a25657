#ifndef VARSIM_TYPES_HPP
#define VARSIM_TYPES_HPP

#include <chrono>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace varsim {

// All simulation time is integer microseconds. Timestamps are offsets from
// the start of a scenario, so both share the same representation.
using Duration = std::chrono::microseconds;
using TimePoint = std::chrono::microseconds;

// Real-valued durations for closed-form results such as the M/D/1 mean wait.
using FractionalDuration = std::chrono::duration<double, std::micro>;

inline constexpr Duration from_ms(double ms) {
  return Duration{static_cast<std::int64_t>(ms * 1000.0 + (ms >= 0 ? 0.5 : -0.5))};
}

inline constexpr double to_ms(Duration d) { return static_cast<double>(d.count()) / 1000.0; }
inline constexpr double to_seconds(Duration d) { return static_cast<double>(d.count()) / 1e6; }

// Arrival rate normalized to requests per second.
class ArrivalRate {
 public:
  constexpr ArrivalRate() = default;
  constexpr explicit ArrivalRate(double per_second) : per_second_(per_second) {}

  static constexpr ArrivalRate per_second(double r) { return ArrivalRate{r}; }
  static constexpr ArrivalRate per_minute(double r) { return ArrivalRate{r / 60.0}; }
  static constexpr ArrivalRate per_hour(double r) { return ArrivalRate{r / 3600.0}; }

  constexpr double per_second() const { return per_second_; }
  constexpr double per_microsecond() const { return per_second_ / 1e6; }

  constexpr ArrivalRate operator*(double k) const { return ArrivalRate{per_second_ * k}; }
  constexpr ArrivalRate operator+(ArrivalRate o) const { return ArrivalRate{per_second_ + o.per_second_}; }

  friend constexpr bool operator==(ArrivalRate, ArrivalRate) = default;

 private:
  double per_second_ = 0.0;
};

// Raised for invalid scenario or model configuration. The CLI maps it to
// exit status 1.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Raised for filesystem failures. The message always names the path. The
// CLI maps it to exit status 2.
class IoError : public std::runtime_error {
 public:
  IoError(const std::string& path, const std::string& what)
      : std::runtime_error(path + ": " + what), path_(path) {}

  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

}  // namespace varsim

#endif  // VARSIM_TYPES_HPP
