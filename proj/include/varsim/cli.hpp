#ifndef VARSIM_CLI_HPP
#define VARSIM_CLI_HPP

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "varsim/simulator.hpp"

namespace varsim::cli {

enum ExitCode : int { kOk = 0, kValidation = 1, kIo = 2 };

// Default output directory when --out is not given.
inline constexpr const char* kOutDirEnv = "VARSIM_OUT_DIR";

struct EmitFlags {
  bool trace = true;
  bool queue_series = true;
  bool switches = true;
  bool correlation = false;
  bool violations = true;
  bool plotdata = false;
};

// Parses names from --emit. Throws ConfigError on an unknown name.
EmitFlags parse_emit(const std::vector<std::string>& names);

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<double> lambda_per_second;
  std::optional<std::int64_t> requests;
  std::optional<double> alpha;
  bool no_stability_check = false;
  bool no_switching = false;
  bool recovery = false;
};

struct RunManifest {
  std::string scenario_path;
  std::string out_dir;
  Overrides overrides;
  EmitFlags emit;
};

// Scenario with the overrides applied and revalidated (ConfigError).
ScenarioConfig apply_overrides(ScenarioConfig config, const Overrides& overrides);

// Entry point behind the varsim executable. Returns the process exit code.
int main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace varsim::cli

#endif  // VARSIM_CLI_HPP
