#ifndef VARSIM_ANALYSIS_HPP
#define VARSIM_ANALYSIS_HPP

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "varsim/simulator.hpp"

namespace varsim::analysis {

// A named series. Categorical columns store ordinal codes in `values`;
// `categories[k]` is the label encoded as k. The encoding decides the sign
// of any rank correlation against the column, so it is always explicit.
struct Column {
  std::string name;
  std::vector<double> values;
  std::vector<std::string> categories;

  bool categorical() const { return !categories.empty(); }
  const std::string& label(std::size_t row) const;

  friend bool operator==(const Column&, const Column&) = default;
};

class ObservationTable {
 public:
  void add_numeric(std::string name, std::vector<double> values);
  // Without an explicit encoding the sorted distinct labels are used.
  void add_categorical(std::string name, const std::vector<std::string>& labels,
                       std::vector<std::string> encoding = {});

  const std::vector<Column>& columns() const { return columns_; }
  std::size_t rows() const { return columns_.empty() ? 0 : columns_.front().values.size(); }
  const Column& column(const std::string& name) const;
  bool has_column(const std::string& name) const;
  // Subset in the requested order. Throws std::invalid_argument listing every
  // unknown or empty name.
  ObservationTable select(const std::vector<std::string>& names) const;

  friend bool operator==(const ObservationTable&, const ObservationTable&) = default;

 private:
  void check_length(const std::string& name, std::size_t n) const;
  std::vector<Column> columns_;
};

// Kendall tau-b. Returns nullopt when either series is constant.
// Throws std::invalid_argument for a length mismatch or n < 2.
std::optional<double> kendall_tau(std::span<const double> x, std::span<const double> y);

struct CorrelationMatrix {
  std::vector<std::string> labels;
  // Symmetric; nullopt marks an undefined coefficient.
  std::vector<std::vector<std::optional<double>>> values;

  const std::optional<double>& at(std::size_t i, std::size_t j) const { return values[i][j]; }
  std::size_t index_of(const std::string& label) const;
};

// Pairwise tau-b over all columns. Throws std::invalid_argument for fewer
// than two columns.
CorrelationMatrix correlation_matrix(const ObservationTable& table);

struct ViolationStats {
  std::int64_t records = 0;
  std::int64_t count = 0;
  double fraction = 0.0;
  // Index into trace.records of the first violating record.
  std::optional<std::size_t> first_violation_index;
  // Over records that arrive strictly after the last switch took effect
  // (the whole trace when there were no switches).
  std::int64_t post_switch_records = 0;
  std::int64_t post_switch_count = 0;
  double post_switch_fraction = 0.0;
};

// Counts records with sojourn > constraint. Without an explicit constraint
// each record's own constraint is used. Throws std::invalid_argument for an
// empty trace.
ViolationStats violation_stats(const SimulationTrace& trace,
                               std::optional<Duration> constraint = std::nullopt);

// Queue length seen by each request arriving at `service_id`, in arrival
// order.
std::vector<std::int64_t> arrival_queue_lengths(const SimulationTrace& trace,
                                                const std::string& service_id);

// Time-weighted mean of the waiting-queue length of a service, integrated
// over the sample series from the first to the last sample.
double time_averaged_queue_length(const SimulationTrace& trace, const std::string& service_id);

struct RunSummary {
  std::int64_t requests = 0;
  std::int64_t injected = 0;
  std::int64_t in_system_at_end = 0;
  std::int64_t switch_count = 0;
  ViolationStats violations;
  double mean_sojourn_ms = 0.0;
  double mean_qor = 0.0;
  // Queue length seen by the last arriving request at each chain's first
  // stage, maximized over chains.
  std::int64_t final_queue_length = 0;
};

RunSummary summarize(const SimulationTrace& trace);

// Rows of a full-factorial variant sweep over one chain: every combination
// of stage variants repeated `repetitions` times, execution time drawn from
// each variant's profile and noise model. Columns are "<service>.variant" for
// every stage with more than one variant (encoded in declaration order) and
// "exec_time_ms" (sum of stage service times). With `average` set the
// repetitions of each combination collapse to their mean.
ObservationTable chain_sweep_table(const ScenarioConfig& config, const std::string& chain_id,
                                   std::int64_t repetitions, std::uint64_t seed,
                                   bool average = false);

// Table view of a trace, one row per (request, stage). Column names are the
// trace CSV columns; string columns become categorical with sorted labels.
ObservationTable trace_table(const SimulationTrace& trace);

// ---------------------------------------------------------------------------
// Export. The *_csv functions render to a string; write_* put it on disk and
// return the byte count (IoError on failure).

std::string trace_csv(const SimulationTrace& trace);
std::string switches_csv(const SimulationTrace& trace);
std::string queue_csv(const SimulationTrace& trace);
// Long-format plotting series: series,service_id,x,y.
std::string plotdata_csv(const SimulationTrace& trace);
// Wide matrix: "label,<labels...>". Undefined entries render as "NA".
std::string matrix_csv(const CorrelationMatrix& m);
// Long format: label_i,label_j,tau.
std::string matrix_long_csv(const CorrelationMatrix& m);
// Header cells are "name:numeric" or "name:categorical=a|b|c"; categorical
// cells hold labels.
std::string table_csv(const ObservationTable& table);

std::size_t write_trace_csv(const SimulationTrace& trace, const std::string& path);
std::size_t write_matrix_csv(const CorrelationMatrix& m, const std::string& path);
std::size_t write_table_csv(const ObservationTable& table, const std::string& path);

// Inverse of table_csv. Throws std::runtime_error describing the first
// malformed cell.
ObservationTable parse_table_csv(const std::string& text);
ObservationTable read_table_csv(const std::string& path);

// Rebuilds records (and, given switches_csv text, switch events) from
// exported files. Queue samples and the config are not recovered.
SimulationTrace parse_trace_csv(const std::string& trace_text,
                                const std::string& switches_text = {});

}  // namespace varsim::analysis

#endif  // VARSIM_ANALYSIS_HPP
