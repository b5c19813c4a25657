#include "varsim/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>
#include <stdexcept>

#include "varsim/csv.hpp"
#include "varsim/random.hpp"

namespace varsim::analysis {

// ---------------------------------------------------------------------------
// ObservationTable

const std::string& Column::label(std::size_t row) const {
  return categories.at(static_cast<std::size_t>(values.at(row)));
}

void ObservationTable::check_length(const std::string& name, std::size_t n) const {
  if (name.empty()) throw std::invalid_argument("column name must not be empty");
  if (has_column(name)) throw std::invalid_argument("duplicate column '" + name + "'");
  if (!columns_.empty() && n != rows()) {
    throw std::invalid_argument("column '" + name + "' has " + std::to_string(n) +
                                " rows, table has " + std::to_string(rows()));
  }
}

void ObservationTable::add_numeric(std::string name, std::vector<double> values) {
  check_length(name, values.size());
  columns_.push_back({std::move(name), std::move(values), {}});
}

void ObservationTable::add_categorical(std::string name, const std::vector<std::string>& labels,
                                       std::vector<std::string> encoding) {
  check_length(name, labels.size());
  if (encoding.empty()) {
    std::set<std::string> distinct(labels.begin(), labels.end());
    encoding.assign(distinct.begin(), distinct.end());
  }
  if (encoding.empty()) encoding.emplace_back();  // zero-row categorical column
  std::map<std::string, double> code;
  for (std::size_t k = 0; k < encoding.size(); ++k) {
    if (!code.emplace(encoding[k], static_cast<double>(k)).second) {
      throw std::invalid_argument("column '" + name + "': duplicate category '" + encoding[k] + "'");
    }
  }
  std::vector<double> values;
  values.reserve(labels.size());
  for (const auto& l : labels) {
    const auto it = code.find(l);
    if (it == code.end()) {
      throw std::invalid_argument("column '" + name + "': label '" + l + "' missing from encoding");
    }
    values.push_back(it->second);
  }
  columns_.push_back({std::move(name), std::move(values), std::move(encoding)});
}

bool ObservationTable::has_column(const std::string& name) const {
  return std::any_of(columns_.begin(), columns_.end(),
                     [&](const Column& c) { return c.name == name; });
}

const Column& ObservationTable::column(const std::string& name) const {
  for (const auto& c : columns_) {
    if (c.name == name) return c;
  }
  throw std::invalid_argument("unknown column '" + name + "'");
}

ObservationTable ObservationTable::select(const std::vector<std::string>& names) const {
  std::vector<std::string> unknown;
  for (const auto& n : names) {
    if (n.empty()) {
      unknown.emplace_back("(empty)");
    } else if (!has_column(n)) {
      unknown.push_back(n);
    }
  }
  if (!unknown.empty()) {
    std::string msg = "unknown column(s):";
    for (const auto& u : unknown) msg += " " + u;
    throw std::invalid_argument(msg);
  }
  ObservationTable out;
  for (const auto& n : names) {
    if (out.has_column(n)) throw std::invalid_argument("column '" + n + "' selected twice");
    out.columns_.push_back(column(n));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Kendall tau-b, Knight's O(n log n) method.

namespace {

std::int64_t tie_pairs(std::span<const double> sorted) {
  std::int64_t pairs = 0;
  std::size_t run = 1;
  for (std::size_t i = 1; i <= sorted.size(); ++i) {
    if (i < sorted.size() && sorted[i] == sorted[i - 1]) {
      ++run;
    } else {
      pairs += static_cast<std::int64_t>(run * (run - 1) / 2);
      run = 1;
    }
  }
  return pairs;
}

// Stable merge sort of v counting pairs i < j with v[i] > v[j].
std::int64_t count_inversions(std::vector<double>& v, std::vector<double>& buf, std::size_t lo,
                              std::size_t hi) {
  if (hi - lo < 2) return 0;
  const std::size_t mid = lo + (hi - lo) / 2;
  std::int64_t inv = count_inversions(v, buf, lo, mid) + count_inversions(v, buf, mid, hi);
  std::size_t i = lo, j = mid, k = lo;
  while (i < mid && j < hi) {
    if (v[j] < v[i]) {
      inv += static_cast<std::int64_t>(mid - i);
      buf[k++] = v[j++];
    } else {
      buf[k++] = v[i++];
    }
  }
  while (i < mid) buf[k++] = v[i++];
  while (j < hi) buf[k++] = v[j++];
  std::copy(buf.begin() + static_cast<std::ptrdiff_t>(lo), buf.begin() + static_cast<std::ptrdiff_t>(hi),
            v.begin() + static_cast<std::ptrdiff_t>(lo));
  return inv;
}

}  // namespace

std::optional<double> kendall_tau(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) {
    throw std::invalid_argument("kendall_tau: length mismatch (" + std::to_string(x.size()) +
                                " vs " + std::to_string(y.size()) + ")");
  }
  if (x.size() < 2) throw std::invalid_argument("kendall_tau: need at least 2 observations");
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!std::isfinite(x[i]) || !std::isfinite(y[i])) {
      throw std::invalid_argument("kendall_tau: non-finite value at index " + std::to_string(i));
    }
  }

  const std::size_t n = x.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return x[a] != x[b] ? x[a] < x[b] : y[a] < y[b];
  });

  std::vector<double> xs(n), ys(n);
  for (std::size_t i = 0; i < n; ++i) {
    xs[i] = x[order[i]];
    ys[i] = y[order[i]];
  }

  const std::int64_t n0 = static_cast<std::int64_t>(n) * static_cast<std::int64_t>(n - 1) / 2;
  const std::int64_t n1 = tie_pairs(xs);

  // Pairs tied in both coordinates.
  std::int64_t n3 = 0;
  std::size_t run = 1;
  for (std::size_t i = 1; i <= n; ++i) {
    if (i < n && xs[i] == xs[i - 1] && ys[i] == ys[i - 1]) {
      ++run;
    } else {
      n3 += static_cast<std::int64_t>(run * (run - 1) / 2);
      run = 1;
    }
  }

  std::vector<double> buf(n);
  const std::int64_t discordant = count_inversions(ys, buf, 0, n);
  const std::int64_t n2 = tie_pairs(ys);  // ys is now sorted

  if (n0 == n1 || n0 == n2) return std::nullopt;
  const std::int64_t concordant = n0 - n1 - n2 + n3 - discordant;
  const std::int64_t s = concordant - discordant;
  return static_cast<double>(s) /
         std::sqrt(static_cast<double>(n0 - n1) * static_cast<double>(n0 - n2));
}

std::size_t CorrelationMatrix::index_of(const std::string& label) const {
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == label) return i;
  }
  throw std::invalid_argument("unknown label '" + label + "'");
}

CorrelationMatrix correlation_matrix(const ObservationTable& table) {
  const auto& cols = table.columns();
  if (cols.size() < 2) throw std::invalid_argument("correlation_matrix: need at least 2 columns");
  CorrelationMatrix m;
  const std::size_t k = cols.size();
  for (const auto& c : cols) m.labels.push_back(c.name);
  m.values.assign(k, std::vector<std::optional<double>>(k));
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = i; j < k; ++j) {
      const auto tau = kendall_tau(cols[i].values, cols[j].values);
      m.values[i][j] = tau;
      m.values[j][i] = tau;
    }
  }
  return m;
}

// ---------------------------------------------------------------------------
// Trace statistics

ViolationStats violation_stats(const SimulationTrace& trace, std::optional<Duration> constraint) {
  if (trace.records.empty()) throw std::invalid_argument("violation_stats: empty trace");
  ViolationStats st;
  std::optional<TimePoint> effective;
  for (const auto& sw : trace.switches) {
    if (!effective || sw.effective_at() > *effective) effective = sw.effective_at();
  }
  for (std::size_t i = 0; i < trace.records.size(); ++i) {
    const auto& r = trace.records[i];
    const bool violated = r.sojourn > constraint.value_or(r.constraint);
    ++st.records;
    if (violated) {
      ++st.count;
      if (!st.first_violation_index) st.first_violation_index = i;
    }
    if (!effective || r.arrival() > *effective) {
      ++st.post_switch_records;
      if (violated) ++st.post_switch_count;
    }
  }
  st.fraction = static_cast<double>(st.count) / static_cast<double>(st.records);
  st.post_switch_fraction = st.post_switch_records == 0
                                ? 0.0
                                : static_cast<double>(st.post_switch_count) /
                                      static_cast<double>(st.post_switch_records);
  return st;
}

std::vector<std::int64_t> arrival_queue_lengths(const SimulationTrace& trace,
                                                const std::string& service_id) {
  struct Seen {
    TimePoint t;
    std::int64_t request;
    std::int64_t length;
  };
  std::vector<Seen> seen;
  for (const auto& r : trace.records) {
    for (const auto& st : r.stages) {
      if (st.service_id == service_id) seen.push_back({st.arrival, r.request_id, st.queue_length_at_arrival});
    }
  }
  std::sort(seen.begin(), seen.end(), [](const Seen& a, const Seen& b) {
    return a.t != b.t ? a.t < b.t : a.request < b.request;
  });
  std::vector<std::int64_t> out;
  out.reserve(seen.size());
  for (const auto& s : seen) out.push_back(s.length);
  return out;
}

double time_averaged_queue_length(const SimulationTrace& trace, const std::string& service_id) {
  std::optional<TimePoint> first, last;
  std::int64_t current = 0;
  double area = 0.0;
  for (const auto& s : trace.queue_samples) {
    if (s.service_id != service_id) continue;
    if (last) area += static_cast<double>(current) * static_cast<double>((s.time - *last).count());
    if (!first) first = s.time;
    last = s.time;
    current = s.length;
  }
  if (!first || *last == *first) return 0.0;
  return area / static_cast<double>((*last - *first).count());
}

RunSummary summarize(const SimulationTrace& trace) {
  RunSummary s;
  s.requests = static_cast<std::int64_t>(trace.records.size());
  s.injected = trace.injected;
  s.in_system_at_end = trace.in_system_at_end;
  s.switch_count = static_cast<std::int64_t>(trace.switches.size());
  if (trace.records.empty()) return s;
  s.violations = violation_stats(trace);
  double sojourn = 0.0, qor = 0.0;
  for (const auto& r : trace.records) {
    sojourn += to_ms(r.sojourn);
    qor += r.qor;
  }
  s.mean_sojourn_ms = sojourn / static_cast<double>(trace.records.size());
  s.mean_qor = qor / static_cast<double>(trace.records.size());

  std::set<std::string> entry_services;
  for (const auto& r : trace.records) entry_services.insert(r.stages.front().service_id);
  for (const auto& svc : entry_services) {
    const auto lengths = arrival_queue_lengths(trace, svc);
    if (!lengths.empty()) s.final_queue_length = std::max(s.final_queue_length, lengths.back());
  }
  return s;
}

ObservationTable chain_sweep_table(const ScenarioConfig& config, const std::string& chain_id,
                                   std::int64_t repetitions, std::uint64_t seed, bool average) {
  if (repetitions < 1) throw std::invalid_argument("repetitions must be >= 1");
  const ServiceChainSpec* chain = nullptr;
  const auto chains = config.resolved_chains();
  for (const auto& c : chains) {
    if (c.chain_id == chain_id) chain = &c;
  }
  if (chain == nullptr) throw std::invalid_argument("unknown chain '" + chain_id + "'");

  std::vector<const MicroserviceSpec*> stages;
  for (const auto& id : chain->stages) {
    const auto* s = config.find_service(id);
    if (s == nullptr) throw std::invalid_argument("unknown service '" + id + "'");
    stages.push_back(s);
  }

  std::size_t combos = 1;
  for (const auto* s : stages) combos *= s->variants.size();

  Rng rng(derive_seed(seed, 2));
  std::vector<std::vector<std::string>> labels(stages.size());
  std::vector<double> exec;
  std::vector<std::size_t> idx(stages.size(), 0);
  for (std::size_t c = 0; c < combos; ++c) {
    std::size_t rem = c;
    for (std::size_t k = stages.size(); k-- > 0;) {
      idx[k] = rem % stages[k]->variants.size();
      rem /= stages[k]->variants.size();
    }
    double sum = 0.0;
    for (std::int64_t r = 0; r < repetitions; ++r) {
      double total = 0.0;
      for (std::size_t k = 0; k < stages.size(); ++k) {
        const auto& p = stages[k]->variants[idx[k]].profile;
        double m = 1.0;
        if (p.noise.kind == NoiseModel::Kind::lognormal) m = rng.lognormal_multiplier(p.noise.sigma_rel);
        total += to_ms(p.service_time) * m;
      }
      if (average) {
        sum += total;
      } else {
        exec.push_back(total);
        for (std::size_t k = 0; k < stages.size(); ++k) {
          labels[k].push_back(stages[k]->variants[idx[k]].variant.variant_id);
        }
      }
    }
    if (average) {
      exec.push_back(sum / static_cast<double>(repetitions));
      for (std::size_t k = 0; k < stages.size(); ++k) {
        labels[k].push_back(stages[k]->variants[idx[k]].variant.variant_id);
      }
    }
  }

  ObservationTable table;
  std::set<std::string> used;
  for (std::size_t k = 0; k < stages.size(); ++k) {
    if (stages[k]->variants.size() < 2) continue;
    std::string name = stages[k]->service_id + ".variant";
    if (!used.insert(name).second) name += "#" + std::to_string(k);
    std::vector<std::string> encoding;
    for (const auto& v : stages[k]->variants) encoding.push_back(v.variant.variant_id);
    table.add_categorical(name, labels[k], encoding);
  }
  table.add_numeric("exec_time_ms", std::move(exec));
  return table;
}

namespace {

const std::vector<std::string> kTraceHeader = {
    "request_id", "chain_id",     "stage",        "service_id", "variant_id",
    "arrival_us", "start_us",     "end_us",       "exec_time_us", "queue_length",
    "sojourn_us", "constraint_us", "violated",    "qor"};

const std::vector<std::string> kSwitchHeader = {"time_us",  "service_id",       "from_variant",
                                                "to_variant", "reason",         "applied_after_us",
                                                "effective_us"};

std::string i64(std::int64_t v) { return std::to_string(v); }

std::int64_t parse_i64(const std::string& s, const char* what) {
  std::size_t pos = 0;
  long long v = 0;
  try {
    v = std::stoll(s, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos == 0 || pos != s.size()) {
    throw std::runtime_error(std::string("invalid integer in column ") + what + ": '" + s + "'");
  }
  return v;
}

double parse_real(const std::string& s, const std::string& what) {
  std::size_t pos = 0;
  double v = 0;
  try {
    v = std::stod(s, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos == 0 || pos != s.size()) {
    throw std::runtime_error("invalid number in column " + what + ": '" + s + "'");
  }
  return v;
}

SwitchReason parse_reason(const std::string& s) {
  if (s == "threshold_exceeded") return SwitchReason::threshold_exceeded;
  if (s == "initial_selection") return SwitchReason::initial_selection;
  if (s == "recovery") return SwitchReason::recovery;
  throw std::runtime_error("unknown switch reason '" + s + "'");
}

}  // namespace

ObservationTable trace_table(const SimulationTrace& trace) {
  std::vector<std::vector<double>> num(kTraceHeader.size());
  std::vector<std::string> chain, service, variant;
  for (const auto& r : trace.records) {
    for (std::size_t k = 0; k < r.stages.size(); ++k) {
      const auto& st = r.stages[k];
      num[0].push_back(static_cast<double>(r.request_id));
      chain.push_back(r.chain_id);
      num[2].push_back(static_cast<double>(k));
      service.push_back(st.service_id);
      variant.push_back(st.variant_id);
      num[5].push_back(static_cast<double>(st.arrival.count()));
      num[6].push_back(static_cast<double>(st.service_start.count()));
      num[7].push_back(static_cast<double>(st.service_end.count()));
      num[8].push_back(static_cast<double>(st.execution_time().count()));
      num[9].push_back(static_cast<double>(st.queue_length_at_arrival));
      num[10].push_back(static_cast<double>(r.sojourn.count()));
      num[11].push_back(static_cast<double>(r.constraint.count()));
      num[12].push_back(r.violated ? 1.0 : 0.0);
      num[13].push_back(r.qor);
    }
  }
  ObservationTable t;
  for (std::size_t c = 0; c < kTraceHeader.size(); ++c) {
    switch (c) {
      case 1: t.add_categorical(kTraceHeader[c], chain); break;
      case 3: t.add_categorical(kTraceHeader[c], service); break;
      case 4: t.add_categorical(kTraceHeader[c], variant); break;
      default: t.add_numeric(kTraceHeader[c], std::move(num[c]));
    }
  }
  return t;
}

// ---------------------------------------------------------------------------
// Export

std::string trace_csv(const SimulationTrace& trace) {
  std::string out;
  csv::append_row(out, kTraceHeader);
  for (const auto& r : trace.records) {
    for (std::size_t k = 0; k < r.stages.size(); ++k) {
      const auto& st = r.stages[k];
      csv::append_row(out, {i64(r.request_id), r.chain_id, i64(static_cast<std::int64_t>(k)),
                            st.service_id, st.variant_id, i64(st.arrival.count()),
                            i64(st.service_start.count()), i64(st.service_end.count()),
                            i64(st.execution_time().count()), i64(st.queue_length_at_arrival),
                            i64(r.sojourn.count()), i64(r.constraint.count()),
                            r.violated ? "1" : "0", csv::format_real(r.qor)});
    }
  }
  return out;
}

std::string switches_csv(const SimulationTrace& trace) {
  std::string out;
  csv::append_row(out, kSwitchHeader);
  for (const auto& s : trace.switches) {
    csv::append_row(out, {i64(s.time.count()), s.service_id, s.from_variant, s.to_variant,
                          to_string(s.reason), i64(s.applied_after.count()),
                          i64(s.effective_at().count())});
  }
  return out;
}

std::string queue_csv(const SimulationTrace& trace) {
  std::string out;
  csv::append_row(out, {"time_us", "service_id", "length", "event"});
  for (const auto& q : trace.queue_samples) {
    csv::append_row(out, {i64(q.time.count()), q.service_id, i64(q.length), to_string(q.event)});
  }
  return out;
}

std::string plotdata_csv(const SimulationTrace& trace) {
  std::vector<const RequestRecord*> by_arrival;
  for (const auto& r : trace.records) by_arrival.push_back(&r);
  std::sort(by_arrival.begin(), by_arrival.end(),
            [](const RequestRecord* a, const RequestRecord* b) { return a->request_id < b->request_id; });

  std::string out;
  csv::append_row(out, {"series", "subject", "x", "y"});
  for (const auto* r : by_arrival) {
    csv::append_row(out, {"sojourn_ms", r->chain_id, i64(r->request_id), csv::format_real(to_ms(r->sojourn))});
  }
  for (const auto* r : by_arrival) {
    csv::append_row(out, {"constraint_ms", r->chain_id, i64(r->request_id),
                          csv::format_real(to_ms(r->constraint))});
  }
  for (const auto* r : by_arrival) {
    csv::append_row(out, {"queue_length", r->stages.front().service_id, i64(r->request_id),
                          i64(r->stages.front().queue_length_at_arrival)});
  }
  return out;
}

std::string matrix_csv(const CorrelationMatrix& m) {
  std::string out;
  csv::Row header{"label"};
  header.insert(header.end(), m.labels.begin(), m.labels.end());
  csv::append_row(out, header);
  for (std::size_t i = 0; i < m.labels.size(); ++i) {
    csv::Row row{m.labels[i]};
    for (std::size_t j = 0; j < m.labels.size(); ++j) {
      row.push_back(m.values[i][j] ? csv::format_real(*m.values[i][j]) : "NA");
    }
    csv::append_row(out, row);
  }
  return out;
}

std::string matrix_long_csv(const CorrelationMatrix& m) {
  std::string out;
  csv::append_row(out, {"label_i", "label_j", "tau"});
  for (std::size_t i = 0; i < m.labels.size(); ++i) {
    for (std::size_t j = 0; j < m.labels.size(); ++j) {
      csv::append_row(out, {m.labels[i], m.labels[j],
                            m.values[i][j] ? csv::format_real(*m.values[i][j]) : "NA"});
    }
  }
  return out;
}

std::string table_csv(const ObservationTable& table) {
  std::string out;
  csv::Row header;
  for (const auto& c : table.columns()) {
    if (c.categorical()) {
      std::string cell = c.name + ":categorical=";
      for (std::size_t k = 0; k < c.categories.size(); ++k) {
        if (k > 0) cell += '|';
        cell += c.categories[k];
      }
      header.push_back(cell);
    } else {
      header.push_back(c.name + ":numeric");
    }
  }
  if (!header.empty()) csv::append_row(out, header);
  for (std::size_t r = 0; r < table.rows(); ++r) {
    csv::Row row;
    for (const auto& c : table.columns()) {
      row.push_back(c.categorical() ? c.label(r) : csv::format_real(c.values[r]));
    }
    csv::append_row(out, row);
  }
  return out;
}

std::size_t write_trace_csv(const SimulationTrace& trace, const std::string& path) {
  return csv::write_file(path, trace_csv(trace));
}

std::size_t write_matrix_csv(const CorrelationMatrix& m, const std::string& path) {
  return csv::write_file(path, matrix_csv(m));
}

std::size_t write_table_csv(const ObservationTable& table, const std::string& path) {
  return csv::write_file(path, table_csv(table));
}

ObservationTable parse_table_csv(const std::string& text) {
  const auto rows = csv::parse(text);
  ObservationTable table;
  if (rows.empty()) return table;

  struct Spec {
    std::string name;
    bool categorical;
    std::vector<std::string> encoding;
  };
  std::vector<Spec> specs;
  for (const auto& cell : rows.front()) {
    const auto colon = cell.find(':');
    if (colon == std::string::npos) {
      throw std::runtime_error("table header cell '" + cell + "' lacks ':kind'");
    }
    Spec s{cell.substr(0, colon), false, {}};
    const std::string kind = cell.substr(colon + 1);
    if (kind == "numeric") {
    } else if (kind.rfind("categorical=", 0) == 0) {
      s.categorical = true;
      std::string rest = kind.substr(12);
      std::size_t start = 0;
      for (;;) {
        const auto bar = rest.find('|', start);
        s.encoding.push_back(rest.substr(start, bar - start));
        if (bar == std::string::npos) break;
        start = bar + 1;
      }
    } else {
      throw std::runtime_error("column '" + s.name + "': unknown kind '" + kind + "'");
    }
    specs.push_back(std::move(s));
  }

  std::vector<std::vector<std::string>> cells(specs.size());
  for (std::size_t r = 1; r < rows.size(); ++r) {
    if (rows[r].size() != specs.size()) {
      throw std::runtime_error("row " + std::to_string(r) + " has " +
                               std::to_string(rows[r].size()) + " cells, expected " +
                               std::to_string(specs.size()));
    }
    for (std::size_t c = 0; c < specs.size(); ++c) cells[c].push_back(rows[r][c]);
  }
  for (std::size_t c = 0; c < specs.size(); ++c) {
    if (specs[c].categorical) {
      table.add_categorical(specs[c].name, cells[c], specs[c].encoding);
    } else {
      std::vector<double> v;
      v.reserve(cells[c].size());
      for (const auto& s : cells[c]) v.push_back(parse_real(s, specs[c].name));
      table.add_numeric(specs[c].name, std::move(v));
    }
  }
  return table;
}

ObservationTable read_table_csv(const std::string& path) {
  return parse_table_csv(csv::read_file(path));
}

SimulationTrace parse_trace_csv(const std::string& trace_text, const std::string& switches_text) {
  SimulationTrace trace;
  const auto rows = csv::parse(trace_text);
  if (rows.empty() || rows.front() != kTraceHeader) {
    throw std::runtime_error("not a trace file: header does not match the trace column layout");
  }
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& row = rows[i];
    if (row.size() != kTraceHeader.size()) {
      throw std::runtime_error("trace row " + std::to_string(i) + " has " +
                               std::to_string(row.size()) + " cells");
    }
    const auto id = parse_i64(row[0], "request_id");
    const auto stage = parse_i64(row[2], "stage");
    if (stage == 0) {
      RequestRecord r;
      r.request_id = id;
      r.chain_id = row[1];
      r.sojourn = Duration{parse_i64(row[10], "sojourn_us")};
      r.constraint = Duration{parse_i64(row[11], "constraint_us")};
      r.violated = parse_i64(row[12], "violated") != 0;
      r.qor = parse_real(row[13], "qor");
      trace.records.push_back(std::move(r));
    } else if (trace.records.empty() || trace.records.back().request_id != id ||
               static_cast<std::int64_t>(trace.records.back().stages.size()) != stage) {
      throw std::runtime_error("trace row " + std::to_string(i) + ": stage out of sequence");
    }
    StageRecord st;
    st.service_id = row[3];
    st.variant_id = row[4];
    st.arrival = TimePoint{parse_i64(row[5], "arrival_us")};
    st.service_start = TimePoint{parse_i64(row[6], "start_us")};
    st.service_end = TimePoint{parse_i64(row[7], "end_us")};
    st.queue_length_at_arrival = parse_i64(row[9], "queue_length");
    trace.records.back().stages.push_back(std::move(st));
  }
  trace.injected = static_cast<std::int64_t>(trace.records.size());

  if (!switches_text.empty()) {
    const auto srows = csv::parse(switches_text);
    if (srows.empty() || srows.front() != kSwitchHeader) {
      throw std::runtime_error("not a switches file: header does not match");
    }
    for (std::size_t i = 1; i < srows.size(); ++i) {
      const auto& row = srows[i];
      if (row.size() != kSwitchHeader.size()) {
        throw std::runtime_error("switches row " + std::to_string(i) + " malformed");
      }
      trace.switches.push_back({TimePoint{parse_i64(row[0], "time_us")}, row[1], row[2], row[3],
                                parse_reason(row[4]), Duration{parse_i64(row[5], "applied_after_us")}});
    }
  }
  return trace;
}

}  // namespace varsim::analysis
