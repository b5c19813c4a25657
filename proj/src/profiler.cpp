#include "varsim/profiler.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <stdexcept>

#include "varsim/csv.hpp"
#include "varsim/random.hpp"

namespace varsim::profiler {

void Dataset::check_row(const FeatureVector& features) const {
  if (features.size() != schema.size()) {
    throw std::invalid_argument("schema mismatch: expected " + std::to_string(schema.size()) +
                                " features, got " + std::to_string(features.size()));
  }
  for (std::size_t i = 0; i < schema.size(); ++i) {
    const bool numeric = std::holds_alternative<double>(features[i]);
    if (numeric != (schema[i].kind == FeatureKind::numeric)) {
      throw std::invalid_argument("schema mismatch: feature '" + schema[i].name + "' must be " +
                                  (schema[i].kind == FeatureKind::numeric ? "numeric" : "categorical"));
    }
    if (numeric && !std::isfinite(std::get<double>(features[i]))) {
      throw std::invalid_argument("feature '" + schema[i].name + "' is not finite");
    }
  }
}

void Dataset::add_row(FeatureVector features, double target) {
  check_row(features);
  if (!std::isfinite(target)) throw std::invalid_argument("target is not finite");
  rows.push_back(std::move(features));
  targets.push_back(target);
}

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
  Dataset out{schema, target_name, {}, {}};
  out.rows.reserve(indices.size());
  out.targets.reserve(indices.size());
  for (auto i : indices) {
    out.rows.push_back(rows.at(i));
    out.targets.push_back(targets.at(i));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Tree

double RegressionTree::predict(const FeatureVector& features) const {
  if (nodes_.empty()) throw std::logic_error("predict: model is not fitted");
  if (features.size() != schema_.size()) {
    throw std::invalid_argument("schema mismatch: expected " + std::to_string(schema_.size()) +
                                " features, got " + std::to_string(features.size()));
  }
  int at = 0;
  while (!nodes_[at].leaf) {
    const auto& n = nodes_[at];
    const auto& v = features[n.feature];
    if (schema_[n.feature].kind == FeatureKind::numeric) {
      const auto* x = std::get_if<double>(&v);
      if (x == nullptr) throw std::invalid_argument("schema mismatch: '" + schema_[n.feature].name + "' must be numeric");
      at = *x <= n.threshold ? n.left : n.right;
    } else {
      const auto* c = std::get_if<std::string>(&v);
      if (c == nullptr) throw std::invalid_argument("schema mismatch: '" + schema_[n.feature].name + "' must be categorical");
      if (*c == n.category) {
        at = n.left;
      } else if (vocabulary_[n.feature].count(*c) != 0) {
        at = n.right;
      } else {
        at = nodes_[n.right].samples > nodes_[n.left].samples ? n.right : n.left;
      }
    }
  }
  return nodes_[at].value;
}

int RegressionTree::depth() const {
  std::vector<int> d(nodes_.size(), 0);
  int best = 0;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    best = std::max(best, d[i]);
    if (!nodes_[i].leaf) {
      d[nodes_[i].left] = d[i] + 1;
      d[nodes_[i].right] = d[i] + 1;
    }
  }
  return best;
}

std::size_t RegressionTree::leaf_count() const {
  return static_cast<std::size_t>(
      std::count_if(nodes_.begin(), nodes_.end(), [](const TreeNode& n) { return n.leaf; }));
}

namespace {

struct Candidate {
  double gain = 0.0;
  std::size_t feature = 0;
  double threshold = 0.0;
  int category = -1;
};

class Builder {
 public:
  Builder(const Dataset& data, const Hyperparams& params, std::uint64_t seed,
          std::vector<TreeNode>& nodes, std::vector<std::set<std::string>>& vocab)
      : data_(data), params_(params), rng_(seed), nodes_(nodes) {
    const std::size_t f = data.schema.size();
    numeric_.resize(f);
    codes_.resize(f);
    categories_.resize(f);
    for (std::size_t j = 0; j < f; ++j) {
      if (data.schema[j].kind == FeatureKind::numeric) {
        numeric_[j].reserve(data.size());
        for (const auto& row : data.rows) numeric_[j].push_back(std::get<double>(row[j]));
      } else {
        for (const auto& row : data.rows) vocab[j].insert(std::get<std::string>(row[j]));
        categories_[j].assign(vocab[j].begin(), vocab[j].end());
        std::map<std::string, int> code;
        for (std::size_t k = 0; k < categories_[j].size(); ++k) code[categories_[j][k]] = static_cast<int>(k);
        codes_[j].reserve(data.size());
        for (const auto& row : data.rows) codes_[j].push_back(code.at(std::get<std::string>(row[j])));
      }
    }
  }

  int build(std::vector<std::size_t>& rows, int depth) {
    const int id = static_cast<int>(nodes_.size());
    nodes_.emplace_back();

    const auto n = static_cast<std::int64_t>(rows.size());
    double mean = 0.0;
    for (auto r : rows) mean += data_.targets[r];
    mean /= static_cast<double>(n);
    double sse = 0.0;
    bool constant = true;
    for (auto r : rows) {
      const double e = data_.targets[r] - mean;
      sse += e * e;
      constant = constant && data_.targets[r] == data_.targets[rows.front()];
    }
    nodes_[id].value = mean;
    nodes_[id].samples = n;

    if (depth >= params_.max_depth || n < 2 * params_.min_samples_leaf || constant) return id;

    const auto best = best_split(rows, mean, sse);
    if (!best) return id;

    std::vector<std::size_t> left, right;
    for (auto r : rows) (goes_left(*best, r) ? left : right).push_back(r);
    rows.clear();
    rows.shrink_to_fit();

    nodes_[id].leaf = false;
    nodes_[id].feature = best->feature;
    nodes_[id].sse_decrease = best->gain;
    if (best->category >= 0) {
      nodes_[id].category = categories_[best->feature][static_cast<std::size_t>(best->category)];
    } else {
      nodes_[id].threshold = best->threshold;
    }
    const int l = build(left, depth + 1);
    const int r = build(right, depth + 1);
    nodes_[id].left = l;
    nodes_[id].right = r;
    return id;
  }

 private:
  bool goes_left(const Candidate& c, std::size_t row) const {
    if (c.category >= 0) return codes_[c.feature][row] == c.category;
    return numeric_[c.feature][row] <= c.threshold;
  }

  std::optional<Candidate> best_split(const std::vector<std::size_t>& rows, double mean, double sse) {
    const auto n = static_cast<std::int64_t>(rows.size());
    const std::int64_t min_leaf = params_.min_samples_leaf;
    std::vector<Candidate> ties;
    double best_gain = 0.0;

    auto consider = [&](Candidate c) {
      if (c.gain > best_gain) {
        best_gain = c.gain;
        ties.assign(1, c);
      } else if (c.gain == best_gain && !ties.empty()) {
        ties.push_back(c);
      }
    };

    // SSE of a part from its sums of centred targets: sum(e^2) - (sum e)^2 / n.
    auto part_sse = [](double s, double sq, double cnt) { return sq - s * s / cnt; };

    std::vector<std::size_t> order;
    for (std::size_t j = 0; j < data_.schema.size(); ++j) {
      if (data_.schema[j].kind == FeatureKind::numeric) {
        order = rows;
        const auto& x = numeric_[j];
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
        double total_s = 0.0, total_sq = 0.0;
        for (auto r : order) {
          const double e = data_.targets[r] - mean;
          total_s += e;
          total_sq += e * e;
        }
        double s = 0.0, sq = 0.0;
        for (std::int64_t i = 1; i < n; ++i) {
          const double e = data_.targets[order[i - 1]] - mean;
          s += e;
          sq += e * e;
          if (i < min_leaf || n - i < min_leaf) continue;
          const double lo = x[order[i - 1]], hi = x[order[i]];
          if (!(lo < hi)) continue;
          const double children = part_sse(s, sq, static_cast<double>(i)) +
                                  part_sse(total_s - s, total_sq - sq, static_cast<double>(n - i));
          double thr = lo + (hi - lo) / 2.0;
          if (!(thr < hi)) thr = lo;
          consider({sse - children, j, thr, -1});
        }
      } else {
        const auto& code = codes_[j];
        const std::size_t k = categories_[j].size();
        std::vector<double> s(k, 0.0), sq(k, 0.0);
        std::vector<std::int64_t> cnt(k, 0);
        double total_s = 0.0, total_sq = 0.0;
        for (auto r : rows) {
          const double e = data_.targets[r] - mean;
          const auto c = static_cast<std::size_t>(code[r]);
          s[c] += e;
          sq[c] += e * e;
          ++cnt[c];
          total_s += e;
          total_sq += e * e;
        }
        std::size_t present = 0, last_present = 0;
        for (std::size_t c = 0; c < k; ++c) {
          if (cnt[c] > 0) {
            ++present;
            last_present = c;
          }
        }
        for (std::size_t c = 0; c < k; ++c) {
          if (cnt[c] == 0) continue;
          // With two categories left, {a} vs rest and {b} vs rest coincide.
          if (present == 2 && c == last_present) continue;
          if (cnt[c] < min_leaf || n - cnt[c] < min_leaf) continue;
          const double children =
              part_sse(s[c], sq[c], static_cast<double>(cnt[c])) +
              part_sse(total_s - s[c], total_sq - sq[c], static_cast<double>(n - cnt[c]));
          consider({sse - children, j, 0.0, static_cast<int>(c)});
        }
      }
    }

    // Splits that only shave rounding noise off the SSE are not splits.
    if (ties.empty() || best_gain <= 1e-12 * std::max(1.0, sse)) return std::nullopt;
    if (ties.size() == 1) return ties.front();
    return ties[rng_.below(ties.size())];
  }

  const Dataset& data_;
  const Hyperparams& params_;
  Rng rng_;
  std::vector<TreeNode>& nodes_;
  std::vector<std::vector<double>> numeric_;
  std::vector<std::vector<int>> codes_;
  std::vector<std::vector<std::string>> categories_;
};

}  // namespace

RegressionTree fit(const Dataset& data, const Hyperparams& params, std::uint64_t seed) {
  if (data.size() == 0) throw std::invalid_argument("fit: empty dataset");
  if (params.max_depth < 0) throw std::invalid_argument("fit: max_depth must be >= 0");
  if (params.min_samples_leaf < 1) throw std::invalid_argument("fit: min_samples_leaf must be >= 1");
  if (static_cast<std::int64_t>(data.size()) < 2 * params.min_samples_leaf) {
    throw std::invalid_argument("fit: need at least 2 * min_samples_leaf rows");
  }
  if (data.targets.size() != data.rows.size()) throw std::invalid_argument("fit: row/target count mismatch");
  for (const auto& row : data.rows) data.check_row(row);

  RegressionTree tree;
  tree.schema_ = data.schema;
  tree.hyperparams_ = params;
  tree.training_rows_ = data.size();
  tree.vocabulary_.resize(data.schema.size());
  const auto [lo, hi] = std::minmax_element(data.targets.begin(), data.targets.end());
  tree.min_target_ = *lo;
  tree.max_target_ = *hi;

  std::vector<std::size_t> rows(data.size());
  std::iota(rows.begin(), rows.end(), 0);
  Builder(data, params, seed, tree.nodes_, tree.vocabulary_).build(rows, 0);
  return tree;
}

std::optional<double> r2_score(std::span<const double> predicted, std::span<const double> actual) {
  if (predicted.size() != actual.size()) throw std::invalid_argument("r2_score: length mismatch");
  if (actual.size() < 2) throw std::invalid_argument("r2_score: need at least 2 observations");
  double mean = 0.0;
  for (double a : actual) mean += a;
  mean /= static_cast<double>(actual.size());
  double ss_res = 0.0, ss_tot = 0.0;
  bool constant = true;
  for (std::size_t i = 0; i < actual.size(); ++i) {
    ss_res += (actual[i] - predicted[i]) * (actual[i] - predicted[i]);
    ss_tot += (actual[i] - mean) * (actual[i] - mean);
    constant = constant && actual[i] == actual[0];
  }
  if (constant) return std::nullopt;
  return 1.0 - ss_res / ss_tot;
}

std::vector<FeatureImportance> feature_importance(const RegressionTree& model) {
  std::vector<double> raw(model.schema().size(), 0.0);
  double total = 0.0;
  for (const auto& n : model.nodes()) {
    if (n.leaf) continue;
    raw[n.feature] += n.sse_decrease;
    total += n.sse_decrease;
  }
  std::vector<FeatureImportance> out;
  for (std::size_t j = 0; j < raw.size(); ++j) {
    out.push_back({model.schema()[j].name, total > 0.0 ? raw[j] / total : 0.0});
  }
  std::stable_sort(out.begin(), out.end(), [](const FeatureImportance& a, const FeatureImportance& b) {
    return a.importance > b.importance;
  });
  return out;
}

Evaluation train_test_evaluate(const Dataset& data, double split_fraction, const Hyperparams& params,
                               std::uint64_t seed) {
  if (!(split_fraction > 0.0 && split_fraction < 1.0)) {
    throw std::invalid_argument("split_fraction must lie in (0, 1)");
  }
  const std::size_t n = data.size();
  const auto n_train = static_cast<std::size_t>(std::llround(static_cast<double>(n) * split_fraction));
  if (n_train < 2 || n - n_train < 2 ||
      static_cast<std::int64_t>(n_train) < 2 * params.min_samples_leaf) {
    throw std::invalid_argument("degenerate split: " + std::to_string(n_train) + " train / " +
                                std::to_string(n - n_train) + " test rows");
  }

  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  Rng rng(derive_seed(seed, 0));
  for (std::size_t i = n; i > 1; --i) std::swap(idx[i - 1], idx[rng.below(i)]);

  const std::span<const std::size_t> all(idx);
  const auto train = data.subset(all.first(n_train));
  const auto test = data.subset(all.subspan(n_train));

  Evaluation ev{fit(train, params, derive_seed(seed, 1)), train.size(), test.size(), {}, {}, {}};
  auto score = [&](const Dataset& d) {
    std::vector<double> pred;
    pred.reserve(d.size());
    for (const auto& row : d.rows) pred.push_back(ev.model.predict(row));
    return r2_score(pred, d.targets);
  };
  ev.train_r2 = score(train);
  ev.test_r2 = score(test);
  ev.importance = feature_importance(ev.model);
  return ev;
}

Dataset generate_face_detection_benchmark(const BenchmarkOptions& options) {
  if (options.rows < 1) throw std::invalid_argument("rows must be >= 1");
  Dataset d;
  d.schema = {{"algorithm", FeatureKind::categorical},
              {"scale_factor", FeatureKind::numeric},
              {"min_neighbors", FeatureKind::numeric},
              {"cpu_load", FeatureKind::numeric},
              {"mem_available", FeatureKind::numeric}};
  Rng rng(options.seed);
  for (std::int64_t i = 0; i < options.rows; ++i) {
    const bool haar = rng.below(2) == 0;
    const double sf = 1.0 + 0.1 * static_cast<double>(rng.below(10));
    const double mn = 1.0 + static_cast<double>(rng.below(10));
    const double cpu = rng.uniform();
    const double mem = rng.uniform(1024.0, 16384.0);
    double y;
    if (options.pure_noise) {
      y = 60.0 * rng.lognormal_multiplier(0.2);
    } else {
      const double base = haar ? 70.0 : 45.0;
      y = base * (1.0 + 0.3 * cpu) * (1.0 - 0.15 * (sf - 1.0) / 0.9) + 0.4 * mn;
      y *= rng.lognormal_multiplier(options.noise_sigma_rel);
    }
    d.add_row({std::string(haar ? "haar" : "lbp"), std::round(sf * 10.0) / 10.0, mn, cpu, mem}, y);
  }
  return d;
}

std::string dataset_csv(const Dataset& data) {
  std::string out;
  csv::Row header;
  for (const auto& f : data.schema) {
    header.push_back(f.name + (f.kind == FeatureKind::numeric ? ":numeric" : ":categorical"));
  }
  header.push_back(data.target_name + ":target");
  csv::append_row(out, header);
  for (std::size_t i = 0; i < data.size(); ++i) {
    csv::Row row;
    for (const auto& v : data.rows[i]) {
      row.push_back(std::holds_alternative<double>(v) ? csv::format_real(std::get<double>(v))
                                                      : std::get<std::string>(v));
    }
    row.push_back(csv::format_real(data.targets[i]));
    csv::append_row(out, row);
  }
  return out;
}

Dataset parse_dataset_csv(const std::string& text) {
  const auto rows = csv::parse(text);
  if (rows.empty()) throw std::runtime_error("dataset: missing schema header");
  Dataset d;
  std::optional<std::size_t> target_col;
  std::vector<std::optional<FeatureKind>> kinds;
  for (std::size_t c = 0; c < rows.front().size(); ++c) {
    const auto& cell = rows.front()[c];
    const auto colon = cell.rfind(':');
    if (colon == std::string::npos) throw std::runtime_error("dataset: header cell '" + cell + "' lacks ':kind'");
    const std::string name = cell.substr(0, colon), kind = cell.substr(colon + 1);
    if (kind == "numeric") {
      d.schema.push_back({name, FeatureKind::numeric});
      kinds.emplace_back(FeatureKind::numeric);
    } else if (kind == "categorical") {
      d.schema.push_back({name, FeatureKind::categorical});
      kinds.emplace_back(FeatureKind::categorical);
    } else if (kind == "target") {
      if (target_col) throw std::runtime_error("dataset: more than one target column");
      target_col = c;
      d.target_name = name;
      kinds.emplace_back(std::nullopt);
    } else {
      throw std::runtime_error("dataset: column '" + name + "' has unknown kind '" + kind + "'");
    }
  }
  if (!target_col) throw std::runtime_error("dataset: no target column");

  auto number = [](const std::string& s, std::size_t line) {
    std::size_t pos = 0;
    double v = 0;
    try {
      v = std::stod(s, &pos);
    } catch (const std::exception&) {
      pos = 0;
    }
    if (pos == 0 || pos != s.size()) {
      throw std::runtime_error("dataset line " + std::to_string(line) + ": invalid number '" + s + "'");
    }
    return v;
  };

  for (std::size_t r = 1; r < rows.size(); ++r) {
    if (rows[r].size() != kinds.size()) {
      throw std::runtime_error("dataset line " + std::to_string(r + 1) + ": expected " +
                               std::to_string(kinds.size()) + " cells");
    }
    FeatureVector fv;
    double target = 0.0;
    for (std::size_t c = 0; c < kinds.size(); ++c) {
      if (!kinds[c]) {
        target = number(rows[r][c], r + 1);
      } else if (*kinds[c] == FeatureKind::numeric) {
        fv.emplace_back(number(rows[r][c], r + 1));
      } else {
        fv.emplace_back(rows[r][c]);
      }
    }
    d.add_row(std::move(fv), target);
  }
  return d;
}

}  // namespace varsim::profiler
