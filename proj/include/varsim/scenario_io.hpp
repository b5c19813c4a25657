#ifndef VARSIM_SCENARIO_IO_HPP
#define VARSIM_SCENARIO_IO_HPP

#include <string>

#include <json.hpp>

#include "varsim/simulator.hpp"

// Scenario files are JSON documents with "schema_version": 1. Unknown keys
// are rejected. See README.md for the full schema.
namespace varsim {

inline constexpr int kScenarioSchemaVersion = 1;

// Throws ConfigError naming the offending key path (for example
// "services[0].variants[1].qor: expected a number").
ScenarioConfig parse_scenario(const nlohmann::json& doc);
ScenarioConfig parse_scenario_text(const std::string& text);
// Throws IoError when the file cannot be read.
ScenarioConfig load_scenario(const std::string& path);

// Canonical JSON form of a resolved config; parse_scenario accepts it back.
nlohmann::json scenario_to_json(const ScenarioConfig& config);

}  // namespace varsim

#endif  // VARSIM_SCENARIO_IO_HPP
