#ifndef VARSIM_TESTS_FIXTURES_HPP
#define VARSIM_TESTS_FIXTURES_HPP

#include <string>

#include "varsim/simulator.hpp"

namespace varsim::testing {

using namespace std::chrono_literals;

inline VariantEntry entry(const std::string& id, double ms, double qor, std::optional<std::string> algorithm = {}) {
  VariantEntry e;
  e.variant.variant_id = id;
  e.variant.algorithm = std::move(algorithm);
  e.profile.variant_id = id;
  e.profile.service_time = from_ms(ms);
  e.profile.qor = qor;
  return e;
}

inline VariantProfile profile(const std::string& id, double ms, double qor = 1.0) {
  return entry(id, ms, qor).profile;
}

inline MicroserviceSpec single_variant_service(const std::string& id, double ms) {
  MicroserviceSpec s;
  s.service_id = id;
  s.variants = {entry("v", ms, 1.0)};
  s.initial_variant = "v";
  return s;
}

// Haar 70 ms / LBP 45 ms face-detection analog.
inline MicroserviceSpec face_service(double haar_qor = 0.67, double lbp_qor = 0.57) {
  MicroserviceSpec s;
  s.service_id = "face-detection";
  s.dimensions.algorithms = {"haar", "lbp"};
  s.dimensions.parameters["scale-factor"] = NumericRange{1.0, 1.9, 0.1};
  s.variants = {entry("haar", 70, haar_qor, "haar"), entry("lbp", 45, lbp_qor, "lbp")};
  s.initial_variant = "haar";
  return s;
}

inline ScenarioConfig face_scenario(double lambda, bool switching, std::uint64_t seed,
                                    std::int64_t n = 500) {
  ScenarioConfig c;
  c.name = "face";
  c.services = {face_service()};
  c.lambda = ArrivalRate::per_second(lambda);
  c.constraint = 500ms;
  c.request_count = n;
  c.seed = seed;
  c.policy.switching = switching;
  c.policy.stability_check = false;
  return c;
}

inline ScenarioConfig md1_scenario(double service_ms, double lambda, std::int64_t n, std::uint64_t seed) {
  ScenarioConfig c;
  c.name = "md1";
  c.services = {single_variant_service("md1", service_ms)};
  c.lambda = ArrivalRate::per_second(lambda);
  c.constraint = std::chrono::hours{1000};
  c.request_count = n;
  c.seed = seed;
  c.policy.switching = false;
  return c;
}

}  // namespace varsim::testing

#endif  // VARSIM_TESTS_FIXTURES_HPP
