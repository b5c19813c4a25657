#include "varsim/scenario_io.hpp"

#include <cmath>
#include <set>

#include "varsim/csv.hpp"

namespace varsim {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw ConfigError(path + ": " + what);
}

void expect_object(const json& j, const std::string& path, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) fail(path, "expected an object");
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, value] : j.items()) {
    if (ok.count(key) == 0) fail(path.empty() ? key : path + "." + key, "unknown key");
  }
}

std::string join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

const json* optional_member(const json& j, const char* key) {
  const auto it = j.find(key);
  if (it == j.end() || it->is_null()) return nullptr;
  return &*it;
}

const json& required_member(const json& j, const char* key, const std::string& path) {
  const auto* m = optional_member(j, key);
  if (m == nullptr) fail(join(path, key), "missing required key");
  return *m;
}

double as_number(const json& j, const std::string& path) {
  if (!j.is_number()) fail(path, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) fail(path, "expected a finite number");
  return v;
}

std::int64_t as_integer(const json& j, const std::string& path) {
  if (!j.is_number_integer()) fail(path, "expected an integer");
  return j.get<std::int64_t>();
}

std::uint64_t as_unsigned(const json& j, const std::string& path) {
  if (!j.is_number_unsigned() && !(j.is_number_integer() && j.get<std::int64_t>() >= 0)) {
    fail(path, "expected a non-negative integer");
  }
  return j.get<std::uint64_t>();
}

bool as_bool(const json& j, const std::string& path) {
  if (!j.is_boolean()) fail(path, "expected true or false");
  return j.get<bool>();
}

std::string as_string(const json& j, const std::string& path) {
  if (!j.is_string()) fail(path, "expected a string");
  return j.get<std::string>();
}

std::vector<std::string> as_string_list(const json& j, const std::string& path) {
  if (!j.is_array()) fail(path, "expected an array of strings");
  std::vector<std::string> out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(as_string(j[i], path + "[" + std::to_string(i) + "]"));
  return out;
}

Duration ms_field(const json& j, const std::string& path) { return from_ms(as_number(j, path)); }

ParamValue as_param(const json& j, const std::string& path) {
  if (j.is_number()) return as_number(j, path);
  if (j.is_string()) return j.get<std::string>();
  fail(path, "expected a number or a string");
}

double rate_scale(const std::string& unit, const std::string& path) {
  if (unit == "s") return 1.0;
  if (unit == "min") return 1.0 / 60.0;
  if (unit == "h") return 1.0 / 3600.0;
  if (unit == "ms") return 1000.0;
  fail(path, "unknown rate unit '" + unit + "' (use s, min, h or ms)");
}

ParameterDomain parse_domain(const json& j, const std::string& path) {
  if (!j.is_object()) fail(path, "expected an object");
  if (j.contains("values")) {
    expect_object(j, path, {"values"});
    const auto& values = j.at("values");
    if (!values.is_array()) fail(path + ".values", "expected an array");
    EnumeratedValues e;
    for (std::size_t i = 0; i < values.size(); ++i) {
      e.values.push_back(as_param(values[i], path + ".values[" + std::to_string(i) + "]"));
    }
    return e;
  }
  expect_object(j, path, {"min", "max", "step"});
  NumericRange r;
  r.min = as_number(required_member(j, "min", path), path + ".min");
  r.max = as_number(required_member(j, "max", path), path + ".max");
  if (const auto* s = optional_member(j, "step")) r.step = as_number(*s, path + ".step");
  return r;
}

AdaptationDimensions parse_dimensions(const json& j, const std::string& path) {
  expect_object(j, path, {"algorithms", "parameters", "auxiliary_data"});
  AdaptationDimensions d;
  if (const auto* a = optional_member(j, "algorithms")) d.algorithms = as_string_list(*a, path + ".algorithms");
  if (const auto* x = optional_member(j, "auxiliary_data")) {
    d.auxiliary_data = as_string_list(*x, path + ".auxiliary_data");
  }
  if (const auto* p = optional_member(j, "parameters")) {
    if (!p->is_object()) fail(path + ".parameters", "expected an object");
    for (const auto& [name, domain] : p->items()) {
      d.parameters.emplace(name, parse_domain(domain, path + ".parameters." + name));
    }
  }
  return d;
}

VariantEntry parse_variant(const json& j, const std::string& path) {
  expect_object(j, path, {"id", "algorithm", "parameters", "aux_data", "service_time_ms", "qor", "noise"});
  VariantEntry e;
  e.variant.variant_id = as_string(required_member(j, "id", path), path + ".id");
  if (const auto* a = optional_member(j, "algorithm")) e.variant.algorithm = as_string(*a, path + ".algorithm");
  if (const auto* a = optional_member(j, "aux_data")) e.variant.aux_data = as_string(*a, path + ".aux_data");
  if (const auto* p = optional_member(j, "parameters")) {
    if (!p->is_object()) fail(path + ".parameters", "expected an object");
    for (const auto& [name, value] : p->items()) {
      e.variant.parameters.emplace(name, as_param(value, path + ".parameters." + name));
    }
  }
  e.profile.variant_id = e.variant.variant_id;
  e.profile.service_time = ms_field(required_member(j, "service_time_ms", path), path + ".service_time_ms");
  if (const auto* q = optional_member(j, "qor")) e.profile.qor = as_number(*q, path + ".qor");
  if (const auto* n = optional_member(j, "noise")) {
    const std::string np = path + ".noise";
    expect_object(*n, np, {"kind", "sigma_rel"});
    const auto kind = as_string(required_member(*n, "kind", np), np + ".kind");
    if (kind == "none") {
      e.profile.noise = {};
    } else if (kind == "lognormal") {
      e.profile.noise = NoiseModel::lognormal(as_number(required_member(*n, "sigma_rel", np), np + ".sigma_rel"));
    } else {
      fail(np + ".kind", "unknown noise model '" + kind + "' (use none or lognormal)");
    }
  }
  return e;
}

MicroserviceSpec parse_service(const json& j, const std::string& path) {
  expect_object(j, path, {"id", "dimensions", "variants", "initial_variant"});
  MicroserviceSpec s;
  s.service_id = as_string(required_member(j, "id", path), path + ".id");
  if (const auto* d = optional_member(j, "dimensions")) s.dimensions = parse_dimensions(*d, path + ".dimensions");
  const auto& variants = required_member(j, "variants", path);
  if (!variants.is_array()) fail(path + ".variants", "expected an array");
  for (std::size_t i = 0; i < variants.size(); ++i) {
    s.variants.push_back(parse_variant(variants[i], path + ".variants[" + std::to_string(i) + "]"));
  }
  if (const auto* iv = optional_member(j, "initial_variant")) {
    s.initial_variant = as_string(*iv, path + ".initial_variant");
  } else if (!s.variants.empty()) {
    s.initial_variant = s.variants.front().variant.variant_id;
  }
  return s;
}

ServiceChainSpec parse_chain(const json& j, const std::string& path) {
  expect_object(j, path, {"id", "stages", "constraint_ms"});
  ServiceChainSpec c;
  c.chain_id = as_string(required_member(j, "id", path), path + ".id");
  c.stages = as_string_list(required_member(j, "stages", path), path + ".stages");
  if (const auto* m = optional_member(j, "constraint_ms")) c.constraint = ms_field(*m, path + ".constraint_ms");
  return c;
}

PolicyOptions parse_policy(const json& j, const std::string& path) {
  expect_object(j, path, {"switching", "stability_check", "alpha", "cooldown", "switch_latency_ms",
                          "switch_mode", "restart_duration_ms", "initial_selection", "recovery"});
  PolicyOptions p;
  if (const auto* v = optional_member(j, "switching")) p.switching = as_bool(*v, path + ".switching");
  if (const auto* v = optional_member(j, "stability_check")) p.stability_check = as_bool(*v, path + ".stability_check");
  if (const auto* v = optional_member(j, "alpha")) p.alpha = as_number(*v, path + ".alpha");
  if (const auto* v = optional_member(j, "cooldown")) p.cooldown = as_integer(*v, path + ".cooldown");
  if (const auto* v = optional_member(j, "switch_latency_ms")) p.switch_latency = ms_field(*v, path + ".switch_latency_ms");
  if (const auto* v = optional_member(j, "restart_duration_ms")) {
    p.restart_duration = ms_field(*v, path + ".restart_duration_ms");
  }
  if (const auto* v = optional_member(j, "switch_mode")) {
    const auto mode = as_string(*v, path + ".switch_mode");
    if (mode == "control_channel") {
      p.switch_mode = SwitchMode::control_channel;
    } else if (mode == "restart") {
      p.switch_mode = SwitchMode::restart;
    } else {
      fail(path + ".switch_mode", "unknown mode '" + mode + "' (use control_channel or restart)");
    }
  }
  if (const auto* v = optional_member(j, "initial_selection")) {
    const auto sel = as_string(*v, path + ".initial_selection");
    if (sel == "policy") {
      p.initial_selection = InitialSelection::policy;
    } else if (sel == "configured") {
      p.initial_selection = InitialSelection::configured;
    } else {
      fail(path + ".initial_selection", "unknown value '" + sel + "' (use policy or configured)");
    }
  }
  if (const auto* v = optional_member(j, "recovery")) {
    const std::string rp = path + ".recovery";
    expect_object(*v, rp, {"stable_window", "margin"});
    RecoveryOptions r;
    if (const auto* w = optional_member(*v, "stable_window")) r.stable_window = as_integer(*w, rp + ".stable_window");
    if (const auto* m = optional_member(*v, "margin")) r.margin = as_number(*m, rp + ".margin");
    p.recovery = r;
  }
  return p;
}

}  // namespace

ScenarioConfig parse_scenario(const json& doc) {
  expect_object(doc, "", {"schema_version", "name", "seed", "request_count", "lambda", "lambda_schedule",
                          "constraint_ms", "horizon_ms", "policy", "services", "chains"});
  const auto version = as_integer(required_member(doc, "schema_version", ""), "schema_version");
  if (version != kScenarioSchemaVersion) {
    fail("schema_version", "unsupported version " + std::to_string(version) + " (expected " +
                               std::to_string(kScenarioSchemaVersion) + ")");
  }

  ScenarioConfig c;
  if (const auto* v = optional_member(doc, "name")) c.name = as_string(*v, "name");
  if (const auto* v = optional_member(doc, "seed")) c.seed = as_unsigned(*v, "seed");
  c.request_count = as_integer(required_member(doc, "request_count", ""), "request_count");

  const auto& lambda = required_member(doc, "lambda", "");
  expect_object(lambda, "lambda", {"rate", "unit"});
  const auto unit = as_string(required_member(lambda, "unit", "lambda"), "lambda.unit");
  const double scale = rate_scale(unit, "lambda.unit");
  c.lambda = ArrivalRate::per_second(as_number(required_member(lambda, "rate", "lambda"), "lambda.rate") * scale);

  if (const auto* sched = optional_member(doc, "lambda_schedule")) {
    if (!sched->is_array()) fail("lambda_schedule", "expected an array");
    for (std::size_t i = 0; i < sched->size(); ++i) {
      const std::string p = "lambda_schedule[" + std::to_string(i) + "]";
      expect_object((*sched)[i], p, {"start_ms", "rate"});
      c.lambda_schedule.push_back(
          {ms_field(required_member((*sched)[i], "start_ms", p), p + ".start_ms"),
           ArrivalRate::per_second(as_number(required_member((*sched)[i], "rate", p), p + ".rate") * scale)});
    }
  }

  if (const auto* v = optional_member(doc, "constraint_ms")) c.constraint = ms_field(*v, "constraint_ms");
  if (const auto* v = optional_member(doc, "horizon_ms")) c.horizon = ms_field(*v, "horizon_ms");
  if (const auto* v = optional_member(doc, "policy")) c.policy = parse_policy(*v, "policy");

  const auto& services = required_member(doc, "services", "");
  if (!services.is_array()) fail("services", "expected an array");
  for (std::size_t i = 0; i < services.size(); ++i) {
    c.services.push_back(parse_service(services[i], "services[" + std::to_string(i) + "]"));
  }
  if (const auto* chains = optional_member(doc, "chains")) {
    if (!chains->is_array()) fail("chains", "expected an array");
    for (std::size_t i = 0; i < chains->size(); ++i) {
      c.chains.push_back(parse_chain((*chains)[i], "chains[" + std::to_string(i) + "]"));
    }
  }

  if (auto report = c.validate(); !report.ok()) {
    throw ConfigError("invalid scenario:\n" + report.to_string());
  }
  return c;
}

ScenarioConfig parse_scenario_text(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("scenario is not valid JSON: ") + e.what());
  }
  return parse_scenario(doc);
}

ScenarioConfig load_scenario(const std::string& path) {
  const auto text = csv::read_file(path);
  try {
    return parse_scenario_text(text);
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

namespace {

json param_json(const ParamValue& v) {
  if (const auto* d = std::get_if<double>(&v)) return *d;
  return std::get<std::string>(v);
}

double ms(Duration d) { return to_ms(d); }

}  // namespace

json scenario_to_json(const ScenarioConfig& c) {
  json doc;
  doc["schema_version"] = kScenarioSchemaVersion;
  doc["name"] = c.name;
  doc["seed"] = c.seed;
  doc["request_count"] = c.request_count;
  doc["lambda"] = {{"rate", c.lambda.per_second()}, {"unit", "s"}};
  if (!c.lambda_schedule.empty()) {
    json sched = json::array();
    for (const auto& s : c.lambda_schedule) sched.push_back({{"start_ms", ms(s.start)}, {"rate", s.rate.per_second()}});
    doc["lambda_schedule"] = sched;
  }
  doc["constraint_ms"] = ms(c.constraint);
  if (c.horizon) doc["horizon_ms"] = ms(*c.horizon);

  json policy;
  policy["switching"] = c.policy.switching;
  policy["stability_check"] = c.policy.stability_check;
  policy["alpha"] = c.policy.alpha;
  policy["cooldown"] = c.policy.cooldown;
  policy["switch_latency_ms"] = ms(c.policy.switch_latency);
  policy["switch_mode"] = to_string(c.policy.switch_mode);
  policy["restart_duration_ms"] = ms(c.policy.restart_duration);
  policy["initial_selection"] = to_string(c.policy.initial_selection);
  if (c.policy.recovery) {
    policy["recovery"] = {{"stable_window", c.policy.recovery->stable_window},
                          {"margin", c.policy.recovery->margin}};
  }
  doc["policy"] = policy;

  json services = json::array();
  for (const auto& s : c.services) {
    json dims;
    dims["algorithms"] = s.dimensions.algorithms;
    dims["auxiliary_data"] = s.dimensions.auxiliary_data;
    json params = json::object();
    for (const auto& [name, domain] : s.dimensions.parameters) {
      if (const auto* r = std::get_if<NumericRange>(&domain)) {
        json jr = {{"min", r->min}, {"max", r->max}};
        if (r->step) jr["step"] = *r->step;
        params[name] = jr;
      } else {
        json values = json::array();
        for (const auto& v : std::get<EnumeratedValues>(domain).values) values.push_back(param_json(v));
        params[name] = {{"values", values}};
      }
    }
    dims["parameters"] = params;

    json variants = json::array();
    for (const auto& e : s.variants) {
      json v;
      v["id"] = e.variant.variant_id;
      if (e.variant.algorithm) v["algorithm"] = *e.variant.algorithm;
      if (e.variant.aux_data) v["aux_data"] = *e.variant.aux_data;
      if (!e.variant.parameters.empty()) {
        json p = json::object();
        for (const auto& [name, value] : e.variant.parameters) p[name] = param_json(value);
        v["parameters"] = p;
      }
      v["service_time_ms"] = ms(e.profile.service_time);
      v["qor"] = e.profile.qor;
      if (e.profile.noise.kind == NoiseModel::Kind::lognormal) {
        v["noise"] = {{"kind", "lognormal"}, {"sigma_rel", e.profile.noise.sigma_rel}};
      }
      variants.push_back(v);
    }
    services.push_back({{"id", s.service_id}, {"dimensions", dims}, {"variants", variants},
                        {"initial_variant", s.initial_variant}});
  }
  doc["services"] = services;

  if (!c.chains.empty()) {
    json chains = json::array();
    for (const auto& ch : c.chains) {
      json jc = {{"id", ch.chain_id}, {"stages", ch.stages}};
      if (ch.constraint) jc["constraint_ms"] = ms(*ch.constraint);
      chains.push_back(jc);
    }
    doc["chains"] = chains;
  }
  return doc;
}

}  // namespace varsim
