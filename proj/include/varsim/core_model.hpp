#ifndef VARSIM_CORE_MODEL_HPP
#define VARSIM_CORE_MODEL_HPP

#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "varsim/types.hpp"

namespace varsim {

// A parameter binding is either numeric (scale-factor = 1.2) or symbolic
// (mode = "fast").
using ParamValue = std::variant<double, std::string>;

std::string to_string(const ParamValue& v);

// Numeric interval [min, max]. Without a step the domain is continuous and
// cannot be enumerated.
struct NumericRange {
  double min = 0.0;
  double max = 0.0;
  std::optional<double> step;

  // Grid points min, min + step, ... up to max (inclusive, with tolerance
  // for decimal steps such as 0.1).
  std::vector<double> grid() const;
  bool contains(double v) const;

  friend bool operator==(const NumericRange&, const NumericRange&) = default;
};

struct EnumeratedValues {
  std::vector<ParamValue> values;

  friend bool operator==(const EnumeratedValues&, const EnumeratedValues&) = default;
};

using ParameterDomain = std::variant<NumericRange, EnumeratedValues>;

bool domain_contains(const ParameterDomain& domain, const ParamValue& value);

// The three ways a service can be adapted: which algorithm runs, how its
// parameters are bound, and which auxiliary data asset (model, cascade file)
// it loads. Empty sets mean the dimension is not used by the service.
struct AdaptationDimensions {
  std::vector<std::string> algorithms;
  std::map<std::string, ParameterDomain> parameters;
  std::vector<std::string> auxiliary_data;

  friend bool operator==(const AdaptationDimensions&, const AdaptationDimensions&) = default;
};

struct ServiceVariant {
  std::string variant_id;
  std::optional<std::string> algorithm;
  std::map<std::string, ParamValue> parameters;
  std::optional<std::string> aux_data;

  friend bool operator==(const ServiceVariant&, const ServiceVariant&) = default;
};

struct NoiseModel {
  enum class Kind { none, lognormal };
  Kind kind = Kind::none;
  double sigma_rel = 0.0;

  static NoiseModel lognormal(double sigma_rel) { return {Kind::lognormal, sigma_rel}; }

  friend bool operator==(const NoiseModel&, const NoiseModel&) = default;
};

// Execution characteristics of one variant: its deterministic service time D
// and the quality of result it delivers.
struct VariantProfile {
  std::string variant_id;
  Duration service_time{0};
  double qor = 1.0;
  NoiseModel noise;

  friend bool operator==(const VariantProfile&, const VariantProfile&) = default;
};

struct VariantEntry {
  ServiceVariant variant;
  VariantProfile profile;

  friend bool operator==(const VariantEntry&, const VariantEntry&) = default;
};

struct MicroserviceSpec {
  std::string service_id;
  AdaptationDimensions dimensions;
  std::vector<VariantEntry> variants;
  std::string initial_variant;

  const VariantEntry* find_variant(const std::string& id) const;
  std::vector<VariantProfile> profiles() const;

  friend bool operator==(const MicroserviceSpec&, const MicroserviceSpec&) = default;
};

// Services applied in order; the output of stage k is the input of k + 1.
struct ServiceChainSpec {
  std::string chain_id;
  std::vector<std::string> stages;
  std::optional<Duration> constraint;

  friend bool operator==(const ServiceChainSpec&, const ServiceChainSpec&) = default;
};

struct Violation {
  std::string path;
  std::string message;

  friend bool operator==(const Violation&, const Violation&) = default;
};

struct ValidationReport {
  std::vector<Violation> violations;

  bool ok() const { return violations.empty(); }
  void add(std::string path, std::string message) {
    violations.push_back({std::move(path), std::move(message)});
  }
  void append(const ValidationReport& other, const std::string& prefix);
  // One violation per line, "path: message".
  std::string to_string() const;
};

ValidationReport validate_dimensions(const AdaptationDimensions& dims);
ValidationReport validate_spec(const MicroserviceSpec& spec);
ValidationReport validate_chain(const ServiceChainSpec& chain,
                                const std::vector<MicroserviceSpec>& services);

// Cartesian product algorithms x parameter grids x auxiliary data. An empty
// dimension contributes a single "none" element. Throws ConfigError
// ("non-enumerable parameter space") for a range without a step.
std::vector<ServiceVariant> enumerate_variants(const AdaptationDimensions& dims);

// Canonical id for a variant built from its coordinates, e.g.
// "haar;min-neighbors=3" or "psnr-large". "default" when all are empty.
std::string make_variant_id(const std::optional<std::string>& algorithm,
                            const std::map<std::string, ParamValue>& parameters,
                            const std::optional<std::string>& aux_data);

}  // namespace varsim

#endif  // VARSIM_CORE_MODEL_HPP
