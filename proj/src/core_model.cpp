#include "varsim/core_model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>

namespace varsim {

namespace {

constexpr double kGridTolerance = 1e-9;

std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

}  // namespace

std::string to_string(const ParamValue& v) {
  if (const auto* d = std::get_if<double>(&v)) return format_number(*d);
  return std::get<std::string>(v);
}

std::vector<double> NumericRange::grid() const {
  if (!step || *step <= 0.0) {
    throw ConfigError("non-enumerable parameter space");
  }
  const double span = (max - min) / *step;
  const auto count = static_cast<long long>(std::floor(span + kGridTolerance)) + 1;
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(count));
  for (long long i = 0; i < count; ++i) {
    // Multiplying instead of accumulating keeps 1.0 + 9 * 0.1 == 1.9.
    const double v = min + static_cast<double>(i) * *step;
    out.push_back(std::round(v * 1e9) / 1e9);
  }
  return out;
}

bool NumericRange::contains(double v) const {
  const double tol = kGridTolerance * std::max(1.0, std::fabs(max - min));
  return v >= min - tol && v <= max + tol;
}

bool domain_contains(const ParameterDomain& domain, const ParamValue& value) {
  if (const auto* range = std::get_if<NumericRange>(&domain)) {
    const auto* d = std::get_if<double>(&value);
    return d != nullptr && range->contains(*d);
  }
  const auto& values = std::get<EnumeratedValues>(domain).values;
  for (const auto& candidate : values) {
    if (candidate == value) return true;
  }
  return false;
}

const VariantEntry* MicroserviceSpec::find_variant(const std::string& id) const {
  for (const auto& entry : variants) {
    if (entry.variant.variant_id == id) return &entry;
  }
  return nullptr;
}

std::vector<VariantProfile> MicroserviceSpec::profiles() const {
  std::vector<VariantProfile> out;
  out.reserve(variants.size());
  for (const auto& entry : variants) out.push_back(entry.profile);
  return out;
}

void ValidationReport::append(const ValidationReport& other, const std::string& prefix) {
  for (const auto& v : other.violations) {
    violations.push_back({prefix + v.path, v.message});
  }
}

std::string ValidationReport::to_string() const {
  std::ostringstream os;
  for (const auto& v : violations) os << v.path << ": " << v.message << '\n';
  return os.str();
}

ValidationReport validate_dimensions(const AdaptationDimensions& dims) {
  ValidationReport report;
  auto check_unique = [&](const std::vector<std::string>& ids, const std::string& path) {
    std::set<std::string> seen;
    for (std::size_t i = 0; i < ids.size(); ++i) {
      const std::string p = path + "[" + std::to_string(i) + "]";
      if (ids[i].empty()) report.add(p, "empty identifier");
      if (!seen.insert(ids[i]).second) report.add(p, "duplicate identifier '" + ids[i] + "'");
    }
  };
  check_unique(dims.algorithms, "dimensions.algorithms");
  check_unique(dims.auxiliary_data, "dimensions.auxiliary_data");

  for (const auto& [name, domain] : dims.parameters) {
    const std::string p = "dimensions.parameters." + name;
    if (const auto* range = std::get_if<NumericRange>(&domain)) {
      if (!std::isfinite(range->min) || !std::isfinite(range->max)) {
        report.add(p, "range bounds must be finite");
      } else if (range->min > range->max) {
        report.add(p, "range min " + format_number(range->min) + " exceeds max " +
                          format_number(range->max));
      }
      if (range->step && !(*range->step > 0.0)) report.add(p + ".step", "step must be > 0");
    } else {
      const auto& values = std::get<EnumeratedValues>(domain).values;
      if (values.empty()) report.add(p, "enumerated domain has no values");
      std::set<ParamValue> seen;
      for (const auto& v : values) {
        if (!seen.insert(v).second) report.add(p, "duplicate value '" + to_string(v) + "'");
      }
    }
  }
  return report;
}

namespace {

ValidationReport validate_variant(const ServiceVariant& variant, const AdaptationDimensions& dims) {
  ValidationReport report;
  if (variant.variant_id.empty()) report.add("variant_id", "empty identifier");
  if (variant.algorithm) {
    const auto& a = dims.algorithms;
    if (std::find(a.begin(), a.end(), *variant.algorithm) == a.end()) {
      report.add("algorithm", "'" + *variant.algorithm + "' is not a declared algorithm");
    }
  }
  if (variant.aux_data) {
    const auto& d = dims.auxiliary_data;
    if (std::find(d.begin(), d.end(), *variant.aux_data) == d.end()) {
      report.add("aux_data", "'" + *variant.aux_data + "' is not a declared auxiliary data asset");
    }
  }
  for (const auto& [name, value] : variant.parameters) {
    const auto it = dims.parameters.find(name);
    if (it == dims.parameters.end()) {
      report.add("parameters." + name, "undeclared parameter");
    } else if (!domain_contains(it->second, value)) {
      report.add("parameters." + name, "value " + to_string(value) + " is outside its domain");
    }
  }
  return report;
}

ValidationReport validate_profile(const VariantProfile& profile) {
  ValidationReport report;
  if (profile.service_time <= Duration::zero()) report.add("service_time", "must be > 0");
  if (!(profile.qor >= 0.0 && profile.qor <= 1.0)) report.add("qor", "must lie in [0, 1]");
  if (profile.noise.kind == NoiseModel::Kind::lognormal && !(profile.noise.sigma_rel >= 0.0)) {
    report.add("noise.sigma_rel", "must be >= 0");
  }
  return report;
}

}  // namespace

ValidationReport validate_spec(const MicroserviceSpec& spec) {
  ValidationReport report;
  if (spec.service_id.empty()) report.add("service_id", "empty identifier");
  report.append(validate_dimensions(spec.dimensions), "");

  if (spec.variants.empty()) report.add("variants", "at least one variant is required");

  std::set<std::string> ids;
  for (std::size_t i = 0; i < spec.variants.size(); ++i) {
    const auto& entry = spec.variants[i];
    const std::string p = "variants[" + std::to_string(i) + "].";
    if (!ids.insert(entry.variant.variant_id).second) {
      report.add(p + "variant_id", "duplicate variant id '" + entry.variant.variant_id + "'");
    }
    if (entry.profile.variant_id != entry.variant.variant_id) {
      report.add(p + "profile.variant_id", "profile id '" + entry.profile.variant_id +
                                               "' does not match variant id '" +
                                               entry.variant.variant_id + "'");
    }
    report.append(validate_variant(entry.variant, spec.dimensions), p);
    report.append(validate_profile(entry.profile), p + "profile.");
  }

  if (spec.find_variant(spec.initial_variant) == nullptr) {
    report.add("initial_variant", "'" + spec.initial_variant + "' is not a declared variant");
  }
  return report;
}

ValidationReport validate_chain(const ServiceChainSpec& chain,
                                const std::vector<MicroserviceSpec>& services) {
  ValidationReport report;
  if (chain.chain_id.empty()) report.add("chain_id", "empty identifier");
  if (chain.stages.empty()) report.add("stages", "at least one stage is required");
  for (std::size_t i = 0; i < chain.stages.size(); ++i) {
    bool found = false;
    for (const auto& s : services) found = found || s.service_id == chain.stages[i];
    if (!found) {
      report.add("stages[" + std::to_string(i) + "]",
                 "unknown service '" + chain.stages[i] + "'");
    }
  }
  if (chain.constraint && *chain.constraint <= Duration::zero()) {
    report.add("constraint", "must be > 0");
  }
  return report;
}

std::string make_variant_id(const std::optional<std::string>& algorithm,
                            const std::map<std::string, ParamValue>& parameters,
                            const std::optional<std::string>& aux_data) {
  std::string id;
  auto append = [&id](const std::string& part) {
    if (!id.empty()) id += ';';
    id += part;
  };
  if (algorithm) append(*algorithm);
  for (const auto& [name, value] : parameters) append(name + "=" + to_string(value));
  if (aux_data) append(*aux_data);
  return id.empty() ? "default" : id;
}

std::vector<ServiceVariant> enumerate_variants(const AdaptationDimensions& dims) {
  std::vector<std::optional<std::string>> algorithms;
  for (const auto& a : dims.algorithms) algorithms.emplace_back(a);
  if (algorithms.empty()) algorithms.emplace_back(std::nullopt);

  std::vector<std::optional<std::string>> aux;
  for (const auto& d : dims.auxiliary_data) aux.emplace_back(d);
  if (aux.empty()) aux.emplace_back(std::nullopt);

  // Expand every parameter domain up front so a continuous range fails
  // before any output is produced.
  std::vector<std::pair<std::string, std::vector<ParamValue>>> grids;
  for (const auto& [name, domain] : dims.parameters) {
    std::vector<ParamValue> values;
    if (const auto* range = std::get_if<NumericRange>(&domain)) {
      if (!range->step) {
        throw ConfigError("non-enumerable parameter space: parameter '" + name +
                          "' is continuous (no step)");
      }
      for (double v : range->grid()) values.emplace_back(v);
    } else {
      values = std::get<EnumeratedValues>(domain).values;
    }
    grids.emplace_back(name, std::move(values));
  }

  std::vector<std::map<std::string, ParamValue>> bindings{{}};
  for (const auto& [name, values] : grids) {
    std::vector<std::map<std::string, ParamValue>> next;
    next.reserve(bindings.size() * values.size());
    for (const auto& partial : bindings) {
      for (const auto& v : values) {
        auto b = partial;
        b.emplace(name, v);
        next.push_back(std::move(b));
      }
    }
    bindings = std::move(next);
  }

  std::vector<ServiceVariant> out;
  out.reserve(algorithms.size() * bindings.size() * aux.size());
  for (const auto& a : algorithms) {
    for (const auto& b : bindings) {
      for (const auto& d : aux) {
        out.push_back({make_variant_id(a, b, d), a, b, d});
      }
    }
  }
  return out;
}

}  // namespace varsim
