#include "varsim/cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <ostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "varsim/analysis.hpp"
#include "varsim/csv.hpp"
#include "varsim/profiler.hpp"
#include "varsim/scenario_io.hpp"

namespace varsim::cli {

using nlohmann::json;
namespace fs = std::filesystem;

EmitFlags parse_emit(const std::vector<std::string>& names) {
  if (names.empty()) return {};
  EmitFlags f{false, false, false, false, false, false};
  for (const auto& n : names) {
    if (n == "trace") {
      f.trace = true;
    } else if (n == "queue_series") {
      f.queue_series = true;
    } else if (n == "switches") {
      f.switches = true;
    } else if (n == "correlation") {
      f.correlation = true;
    } else if (n == "violations") {
      f.violations = true;
    } else if (n == "plotdata") {
      f.plotdata = true;
    } else if (n == "all") {
      f = {true, true, true, true, true, true};
    } else {
      throw ConfigError("--emit: unknown artifact '" + n +
                        "' (use trace, queue_series, switches, correlation, violations, plotdata or all)");
    }
  }
  return f;
}

ScenarioConfig apply_overrides(ScenarioConfig c, const Overrides& o) {
  if (o.seed) c.seed = *o.seed;
  if (o.lambda_per_second) {
    if (!c.lambda_schedule.empty()) {
      throw ConfigError("--lambda: scenario '" + c.name + "' uses lambda_schedule; edit the schedule instead");
    }
    c.lambda = ArrivalRate::per_second(*o.lambda_per_second);
  }
  if (o.requests) c.request_count = *o.requests;
  if (o.alpha) c.policy.alpha = *o.alpha;
  if (o.no_stability_check) c.policy.stability_check = false;
  if (o.no_switching) c.policy.switching = false;
  if (o.recovery && !c.policy.recovery) c.policy.recovery = RecoveryOptions{};
  if (auto report = c.validate(); !report.ok()) {
    throw ConfigError("invalid scenario after overrides:\n" + report.to_string());
  }
  return c;
}

namespace {

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError(dir.string(), "cannot create directory: " + ec.message());
}

void write_text(const fs::path& path, const std::string& text) { csv::write_file(path.string(), text); }

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

std::string default_out_dir() {
  if (const char* env = std::getenv(kOutDirEnv); env != nullptr && *env != '\0') return env;
  return "varsim-out";
}

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

json overrides_json(const Overrides& o) {
  json j = json::object();
  if (o.seed) j["seed"] = *o.seed;
  if (o.lambda_per_second) j["lambda_per_second"] = *o.lambda_per_second;
  if (o.requests) j["requests"] = *o.requests;
  if (o.alpha) j["alpha"] = *o.alpha;
  j["no_stability_check"] = o.no_stability_check;
  j["no_switching"] = o.no_switching;
  j["recovery"] = o.recovery;
  return j;
}

json emit_json(const EmitFlags& e) {
  return {{"trace", e.trace},           {"queue_series", e.queue_series}, {"switches", e.switches},
          {"correlation", e.correlation}, {"violations", e.violations},   {"plotdata", e.plotdata}};
}

json summary_json(const SimulationTrace& trace) {
  const auto s = analysis::summarize(trace);
  json v = {{"count", s.violations.count},
            {"fraction", s.violations.fraction},
            {"post_switch_records", s.violations.post_switch_records},
            {"post_switch_count", s.violations.post_switch_count},
            {"post_switch_fraction", s.violations.post_switch_fraction}};
  v["first_violation_request_id"] =
      s.violations.first_violation_index ? json(trace.records[*s.violations.first_violation_index].request_id)
                                         : json(nullptr);
  json switches = json::array();
  for (const auto& e : trace.switches) {
    switches.push_back({{"time_ms", to_ms(e.time)},
                        {"service_id", e.service_id},
                        {"from", e.from_variant},
                        {"to", e.to_variant},
                        {"reason", to_string(e.reason)},
                        {"applied_after_ms", to_ms(e.applied_after)}});
  }
  return {{"scenario", trace.config.name},
          {"seed", trace.rng_seed},
          {"requests_completed", s.requests},
          {"requests_injected", s.injected},
          {"in_system_at_end", s.in_system_at_end},
          {"switch_count", s.switch_count},
          {"switches", switches},
          {"violations", v},
          {"mean_sojourn_ms", s.mean_sojourn_ms},
          {"mean_qor", s.mean_qor},
          {"final_queue_length", s.final_queue_length},
          {"initial_variants", trace.initial_variants}};
}

std::vector<std::string> trace_correlation_columns(const analysis::ObservationTable& table) {
  std::vector<std::string> cols;
  for (const char* name : {"variant_id", "queue_length", "exec_time_us", "sojourn_us"}) {
    if (table.has_column(name)) cols.push_back(name);
  }
  return cols;
}

// Writes the artifacts of one run into `dir` and returns the file names.
std::vector<std::string> write_run(const SimulationTrace& trace, const fs::path& dir, const EmitFlags& emit) {
  ensure_dir(dir);
  std::vector<std::string> files;
  auto put = [&](const std::string& name, const std::string& text) {
    write_text(dir / name, text);
    files.push_back(name);
  };
  if (emit.trace) put("trace.csv", analysis::trace_csv(trace));
  if (emit.switches) put("switches.csv", analysis::switches_csv(trace));
  if (emit.queue_series) put("queue.csv", analysis::queue_csv(trace));
  if (emit.plotdata) put("plotdata.csv", analysis::plotdata_csv(trace));
  if (emit.correlation && !trace.records.empty()) {
    const auto table = analysis::trace_table(trace);
    const auto m = analysis::correlation_matrix(table.select(trace_correlation_columns(table)));
    put("correlation.csv", analysis::matrix_csv(m));
  }
  json summary = summary_json(trace);
  if (!emit.violations) summary.erase("violations");
  put("summary.json", summary.dump(2) + "\n");
  return files;
}

void print_summary(std::ostream& out, const std::string& label, const SimulationTrace& trace) {
  const auto s = analysis::summarize(trace);
  char line[256];
  std::snprintf(line, sizeof line,
                "%s: %lld requests, %lld switches, %lld violations (%.4f), post-switch %.4f, "
                "mean sojourn %.3f ms, mean QoR %.4f, final queue %lld\n",
                label.c_str(), static_cast<long long>(s.requests), static_cast<long long>(s.switch_count),
                static_cast<long long>(s.violations.count), s.violations.fraction,
                s.violations.post_switch_fraction, s.mean_sojourn_ms, s.mean_qor,
                static_cast<long long>(s.final_queue_length));
  out << line;
}

void add_run_options(CLI::App* cmd, RunManifest& m, std::vector<std::string>& emit, bool allow_no_switching) {
  cmd->add_option("--scenario", m.scenario_path, "Scenario JSON file")->required();
  cmd->add_option("--out", m.out_dir, std::string("Output directory (default $") + kOutDirEnv + " or ./varsim-out)");
  cmd->add_option("--seed", m.overrides.seed, "Override the scenario seed");
  cmd->add_option("--lambda", m.overrides.lambda_per_second, "Override the arrival rate (requests per second)");
  cmd->add_option("--requests", m.overrides.requests, "Override the request count per chain");
  cmd->add_option("--alpha", m.overrides.alpha, "Override the threshold dampening factor");
  cmd->add_flag("--no-stability-check", m.overrides.no_stability_check, "Allow unstable variants with D < C");
  if (allow_no_switching) cmd->add_flag("--no-switching", m.overrides.no_switching, "Disable variant switching");
  cmd->add_flag("--recovery", m.overrides.recovery, "Enable upward recovery switching with default settings");
  cmd->add_option("--emit", emit, "Artifacts: trace, queue_series, switches, correlation, violations, plotdata, all")
      ->delimiter(',');
}

json manifest_json(const std::string& command, const RunManifest& m, const ScenarioConfig& config,
                   const json& artifacts) {
  return {{"tool", "varsim"},
          {"command", command},
          {"scenario_path", m.scenario_path},
          {"overrides", overrides_json(m.overrides)},
          {"emit", emit_json(m.emit)},
          {"scenario", scenario_to_json(config)},
          {"artifacts", artifacts}};
}

int cmd_run(RunManifest m, const std::vector<std::string>& emit, std::ostream& out) {
  m.emit = parse_emit(emit);
  if (m.out_dir.empty()) m.out_dir = default_out_dir();
  const auto config = apply_overrides(load_scenario(m.scenario_path), m.overrides);
  const auto trace = run_scenario(config);
  const fs::path dir(m.out_dir);
  auto files = write_run(trace, dir, m.emit);
  files.push_back("manifest.json");
  write_json(dir / "manifest.json", manifest_json("run", m, config, files));
  print_summary(out, config.name.empty() ? "run" : config.name, trace);
  out << "wrote " << files.size() << " files to " << dir.string() << "\n";
  return kOk;
}

int cmd_compare(RunManifest m, const std::vector<std::string>& emit, std::optional<std::uint64_t> baseline_seed,
                std::ostream& out) {
  m.emit = parse_emit(emit);
  if (m.out_dir.empty()) m.out_dir = default_out_dir();
  auto config = apply_overrides(load_scenario(m.scenario_path), m.overrides);
  if (baseline_seed && *baseline_seed != config.seed) {
    throw ConfigError("--baseline-seed " + std::to_string(*baseline_seed) + " differs from the run seed " +
                      std::to_string(config.seed) + "; a paired comparison needs identical seeds");
  }
  auto on = config;
  on.policy.switching = true;
  auto off = config;
  off.policy.switching = false;
  const auto trace_on = run_scenario(on);
  const auto trace_off = run_scenario(off);

  const fs::path dir(m.out_dir);
  ensure_dir(dir);
  json artifacts = json::object();
  artifacts["switching"] = write_run(trace_on, dir / "switching", m.emit);
  artifacts["baseline"] = write_run(trace_off, dir / "baseline", m.emit);

  const auto s_on = analysis::summarize(trace_on);
  const auto s_off = analysis::summarize(trace_off);
  std::string table;
  csv::append_row(table, {"metric", "switching", "baseline"});
  auto row = [&](const std::string& name, double a, double b) {
    csv::append_row(table, {name, csv::format_real(a), csv::format_real(b)});
  };
  row("requests", static_cast<double>(s_on.requests), static_cast<double>(s_off.requests));
  row("switch_count", static_cast<double>(s_on.switch_count), static_cast<double>(s_off.switch_count));
  row("violations", static_cast<double>(s_on.violations.count), static_cast<double>(s_off.violations.count));
  row("violation_fraction", s_on.violations.fraction, s_off.violations.fraction);
  row("post_switch_violation_fraction", s_on.violations.post_switch_fraction, s_off.violations.post_switch_fraction);
  row("mean_sojourn_ms", s_on.mean_sojourn_ms, s_off.mean_sojourn_ms);
  row("mean_qor", s_on.mean_qor, s_off.mean_qor);
  row("final_queue_length", static_cast<double>(s_on.final_queue_length),
      static_cast<double>(s_off.final_queue_length));
  write_text(dir / "compare.csv", table);
  write_json(dir / "compare.json", {{"seed", config.seed},
                                    {"identical", trace_on.records == trace_off.records},
                                    {"switching", summary_json(trace_on)},
                                    {"baseline", summary_json(trace_off)}});
  artifacts["top"] = {"compare.csv", "compare.json", "manifest.json"};
  write_json(dir / "manifest.json", manifest_json("compare", m, config, artifacts));

  print_summary(out, "switching", trace_on);
  print_summary(out, "baseline", trace_off);
  return kOk;
}

struct AnalyzeArgs {
  std::vector<std::string> traces;
  std::vector<std::string> switches;
  std::string table;
  std::string scenario;
  std::string sweep_chain;
  std::int64_t repetitions = 30;
  bool average = false;
  std::uint64_t seed = 1;
  std::vector<std::string> columns;
  std::optional<double> constraint_ms;
  std::string out_dir;
};

int cmd_analyze(AnalyzeArgs a, std::ostream& out) {
  const int sources = (a.traces.empty() ? 0 : 1) + (a.table.empty() ? 0 : 1) + (a.scenario.empty() ? 0 : 1);
  if (sources != 1) throw ConfigError("analyze: give exactly one of --trace, --table or --scenario");
  if (!a.switches.empty() && a.switches.size() != a.traces.size()) {
    throw ConfigError("analyze: --switches must list one file per --trace");
  }
  if (a.out_dir.empty()) a.out_dir = default_out_dir();
  const fs::path dir(a.out_dir);

  analysis::ObservationTable table;
  std::string violations;
  if (!a.traces.empty()) {
    SimulationTrace merged;
    csv::append_row(violations, {"trace", "records", "violations", "fraction", "post_switch_records",
                                 "post_switch_violations", "post_switch_fraction"});
    for (std::size_t i = 0; i < a.traces.size(); ++i) {
      const auto text = csv::read_file(a.traces[i]);
      const auto sw = a.switches.empty() ? std::string{} : csv::read_file(a.switches[i]);
      SimulationTrace t;
      try {
        t = analysis::parse_trace_csv(text, sw);
      } catch (const std::exception& e) {
        throw ConfigError(a.traces[i] + ": " + e.what());
      }
      std::optional<Duration> c;
      if (a.constraint_ms) c = from_ms(*a.constraint_ms);
      const auto v = analysis::violation_stats(t, c);
      csv::append_row(violations, {a.traces[i], std::to_string(v.records), std::to_string(v.count),
                                   csv::format_real(v.fraction), std::to_string(v.post_switch_records),
                                   std::to_string(v.post_switch_count), csv::format_real(v.post_switch_fraction)});
      merged.records.insert(merged.records.end(), t.records.begin(), t.records.end());
    }
    table = analysis::trace_table(merged);
  } else if (!a.table.empty()) {
    try {
      table = analysis::read_table_csv(a.table);
    } catch (const IoError&) {
      throw;
    } catch (const std::exception& e) {
      throw ConfigError(a.table + ": " + e.what());
    }
  } else {
    if (a.sweep_chain.empty()) throw ConfigError("analyze: --scenario needs --sweep-chain");
    const auto config = load_scenario(a.scenario);
    table = analysis::chain_sweep_table(config, a.sweep_chain, a.repetitions, a.seed, a.average);
  }

  if (!a.columns.empty()) table = table.select(a.columns);
  const auto m = analysis::correlation_matrix(table);

  ensure_dir(dir);
  write_text(dir / "correlation.csv", analysis::matrix_csv(m));
  write_text(dir / "correlation_long.csv", analysis::matrix_long_csv(m));
  if (!a.scenario.empty()) write_text(dir / "table.csv", analysis::table_csv(table));
  if (!violations.empty()) write_text(dir / "violations.csv", violations);
  out << analysis::matrix_csv(m);
  return kOk;
}

struct ProfileArgs {
  std::string dataset;
  std::string generate;
  std::int64_t rows = 5000;
  double noise = 0.02;
  int max_depth = 10;
  std::int64_t min_samples_leaf = 5;
  double split = 0.8;
  std::uint64_t seed = 1;
  std::string out_dir;
};

int cmd_profile(ProfileArgs a, std::ostream& out) {
  if (a.dataset.empty() == a.generate.empty()) throw ConfigError("profile: give exactly one of --dataset or --generate");
  if (a.out_dir.empty()) a.out_dir = default_out_dir();
  const fs::path dir(a.out_dir);

  profiler::Dataset data;
  if (!a.dataset.empty()) {
    const auto text = csv::read_file(a.dataset);
    try {
      data = profiler::parse_dataset_csv(text);
    } catch (const std::exception& e) {
      throw ConfigError(a.dataset + ": " + e.what());
    }
  } else {
    profiler::BenchmarkOptions opt;
    if (a.generate == "face-detection") {
      opt.pure_noise = false;
    } else if (a.generate == "pure-noise") {
      opt.pure_noise = true;
    } else {
      throw ConfigError("--generate: unknown generator '" + a.generate + "' (use face-detection or pure-noise)");
    }
    opt.rows = a.rows;
    opt.noise_sigma_rel = a.noise;
    opt.seed = a.seed;
    data = profiler::generate_face_detection_benchmark(opt);
  }

  const auto eval = profiler::train_test_evaluate(data, a.split, {a.max_depth, a.min_samples_leaf}, a.seed);

  ensure_dir(dir);
  if (!a.generate.empty()) write_text(dir / "dataset.csv", profiler::dataset_csv(data));
  std::string imp;
  csv::append_row(imp, {"rank", "feature", "importance"});
  json ranking = json::array();
  for (std::size_t i = 0; i < eval.importance.size(); ++i) {
    const auto& f = eval.importance[i];
    csv::append_row(imp, {std::to_string(i + 1), f.feature, csv::format_real(f.importance)});
    ranking.push_back({{"feature", f.feature}, {"importance", f.importance}});
  }
  write_text(dir / "importance.csv", imp);
  write_json(dir / "profile.json", {{"source", a.dataset.empty() ? a.generate : a.dataset},
                                    {"rows", data.size()},
                                    {"train_rows", eval.train_rows},
                                    {"test_rows", eval.test_rows},
                                    {"train_r2", optional_number(eval.train_r2)},
                                    {"test_r2", optional_number(eval.test_r2)},
                                    {"tree_depth", eval.model.depth()},
                                    {"tree_leaves", eval.model.leaf_count()},
                                    {"max_depth", a.max_depth},
                                    {"min_samples_leaf", a.min_samples_leaf},
                                    {"seed", a.seed},
                                    {"importance", ranking}});

  char line[160];
  auto fmt = [](const std::optional<double>& v) { return v ? *v : std::nan(""); };
  std::snprintf(line, sizeof line, "train R2 %.4f, test R2 %.4f, %zu leaves\n", fmt(eval.train_r2),
                fmt(eval.test_r2), eval.model.leaf_count());
  out << line;
  for (const auto& f : eval.importance) out << "  " << f.feature << " " << csv::format_real(f.importance) << "\n";
  return kOk;
}

}  // namespace

int main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Discrete-event simulator for runtime microservice variant switching"};
  app.name("varsim");
  app.require_subcommand(1);

  RunManifest run_m;
  std::vector<std::string> run_emit;
  auto* run = app.add_subcommand("run", "Simulate a scenario and write its artifacts");
  add_run_options(run, run_m, run_emit, true);

  RunManifest cmp_m;
  std::vector<std::string> cmp_emit;
  std::optional<std::uint64_t> baseline_seed;
  auto* compare = app.add_subcommand("compare", "Run with switching on and off on the same seed");
  add_run_options(compare, cmp_m, cmp_emit, false);
  compare->add_option("--baseline-seed", baseline_seed, "Seed of the baseline run (must equal the run seed)");

  AnalyzeArgs an;
  auto* analyze = app.add_subcommand("analyze", "Kendall correlation and violation statistics");
  analyze->add_option("--trace", an.traces, "Exported trace.csv files");
  analyze->add_option("--switches", an.switches, "switches.csv per trace, for post-switch statistics");
  analyze->add_option("--table", an.table, "Observation table CSV");
  analyze->add_option("--scenario", an.scenario, "Scenario for a variant sweep");
  analyze->add_option("--sweep-chain", an.sweep_chain, "Chain to sweep");
  analyze->add_option("--repetitions", an.repetitions, "Samples per variant combination");
  analyze->add_flag("--average", an.average, "Average the repetitions of each combination");
  analyze->add_option("--seed", an.seed, "Sweep seed");
  analyze->add_option("--columns", an.columns, "Columns to correlate (default all)")->delimiter(',');
  analyze->add_option("--constraint-ms", an.constraint_ms, "Constraint for violation counting");
  analyze->add_option("--out", an.out_dir, "Output directory");

  ProfileArgs pr;
  auto* profile = app.add_subcommand("profile", "Fit and score the execution-time regression tree");
  profile->add_option("--dataset", pr.dataset, "Dataset CSV");
  profile->add_option("--generate", pr.generate, "Synthetic generator: face-detection or pure-noise");
  profile->add_option("--rows", pr.rows, "Generated rows");
  profile->add_option("--noise", pr.noise, "Relative lognormal noise of the generator");
  profile->add_option("--max-depth", pr.max_depth, "Tree depth limit");
  profile->add_option("--min-samples-leaf", pr.min_samples_leaf, "Minimum rows per leaf");
  profile->add_option("--split", pr.split, "Training fraction");
  profile->add_option("--seed", pr.seed, "Seed for generation, split and tie-breaking");
  profile->add_option("--out", pr.out_dir, "Output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kValidation;
  }

  try {
    if (*run) return cmd_run(run_m, run_emit, out);
    if (*compare) return cmd_compare(cmp_m, cmp_emit, baseline_seed, out);
    if (*analyze) return cmd_analyze(an, out);
    if (*profile) return cmd_profile(pr, out);
  } catch (const IoError& e) {
    err << "error: " << e.what() << "\n";
    return kIo;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kValidation;
  }
  return kValidation;
}

}  // namespace varsim::cli
