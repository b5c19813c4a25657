#ifndef VARSIM_PROFILER_HPP
#define VARSIM_PROFILER_HPP

#include <cstdint>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <variant>
#include <vector>

// Execution-time profiling: fit a regression tree from variant and machine
// features to observed execution time, score it, and rank the features.
namespace varsim::profiler {

enum class FeatureKind { numeric, categorical };

struct FeatureSpec {
  std::string name;
  FeatureKind kind = FeatureKind::numeric;

  friend bool operator==(const FeatureSpec&, const FeatureSpec&) = default;
};

using FeatureValue = std::variant<double, std::string>;
// Values aligned with the dataset schema.
using FeatureVector = std::vector<FeatureValue>;

struct Dataset {
  std::vector<FeatureSpec> schema;
  std::string target_name = "exec_time_ms";
  std::vector<FeatureVector> rows;
  std::vector<double> targets;

  std::size_t size() const { return rows.size(); }
  // Throws std::invalid_argument on a kind mismatch or non-finite number.
  void add_row(FeatureVector features, double target);
  // Throws std::invalid_argument when `features` does not match the schema.
  void check_row(const FeatureVector& features) const;
  Dataset subset(std::span<const std::size_t> indices) const;

  friend bool operator==(const Dataset&, const Dataset&) = default;
};

struct Hyperparams {
  int max_depth = 10;
  std::int64_t min_samples_leaf = 5;
};

struct TreeNode {
  bool leaf = true;
  double value = 0.0;        // mean training target at this node
  std::int64_t samples = 0;
  double sse_decrease = 0.0; // parent SSE minus children SSE, for splits
  std::size_t feature = 0;
  double threshold = 0.0;    // numeric: x <= threshold goes left
  std::string category;      // categorical: x == category goes left
  int left = -1;
  int right = -1;
};

class RegressionTree {
 public:
  double predict(const FeatureVector& features) const;
  int depth() const;
  std::size_t leaf_count() const;

  const std::vector<TreeNode>& nodes() const { return nodes_; }
  const std::vector<FeatureSpec>& schema() const { return schema_; }
  const Hyperparams& hyperparams() const { return hyperparams_; }
  std::size_t training_rows() const { return training_rows_; }
  double min_target() const { return min_target_; }
  double max_target() const { return max_target_; }

 private:
  friend RegressionTree fit(const Dataset&, const Hyperparams&, std::uint64_t);

  std::vector<FeatureSpec> schema_;
  Hyperparams hyperparams_;
  std::vector<TreeNode> nodes_;
  // Training vocabulary of each categorical feature.
  std::vector<std::set<std::string>> vocabulary_;
  std::size_t training_rows_ = 0;
  double min_target_ = 0.0;
  double max_target_ = 0.0;
};

// Greedy CART with variance-reduction splits. Numeric splits are midpoints
// between consecutive distinct values; categorical splits are one-vs-rest.
// The seed is only consumed to break exact-gain ties.
// Throws std::invalid_argument for an empty dataset, fewer than
// 2 * min_samples_leaf rows, or bad hyperparameters.
RegressionTree fit(const Dataset& data, const Hyperparams& params, std::uint64_t seed);

inline double predict(const RegressionTree& model, const FeatureVector& features) {
  return model.predict(features);
}

// 1 - SS_res / SS_tot. nullopt when `actual` is constant.
std::optional<double> r2_score(std::span<const double> predicted, std::span<const double> actual);

struct FeatureImportance {
  std::string feature;
  double importance = 0.0;
};

// Normalized SSE decrease per feature, sorted descending (schema order on
// ties). All zeros for a single-leaf tree.
std::vector<FeatureImportance> feature_importance(const RegressionTree& model);

struct Evaluation {
  RegressionTree model;
  std::size_t train_rows = 0;
  std::size_t test_rows = 0;
  std::optional<double> train_r2;
  std::optional<double> test_r2;
  std::vector<FeatureImportance> importance;
};

// Seeded shuffle-split, fit on the train part, score both parts.
Evaluation train_test_evaluate(const Dataset& data, double split_fraction, const Hyperparams& params,
                               std::uint64_t seed);

// Synthetic face-detection benchmark. Each row draws
//   algorithm      in {haar, lbp}            (base 70 ms / 45 ms)
//   scale_factor   in {1.0, 1.1, ..., 1.9}
//   min_neighbors  in {1, ..., 10}
//   cpu_load       ~ U[0, 1]
//   mem_available  ~ U[1024, 16384] (MB, no effect)
// and sets
//   exec_time_ms = base * (1 + 0.3 cpu_load) * (1 - 0.15 (scale_factor - 1) / 0.9)
//                  + 0.4 min_neighbors
// times a mean-one lognormal multiplier with relative spread noise_sigma_rel.
// With pure_noise the target ignores the features: 60 ms times a lognormal
// multiplier with 20% spread.
struct BenchmarkOptions {
  std::int64_t rows = 5000;
  double noise_sigma_rel = 0.02;
  bool pure_noise = false;
  std::uint64_t seed = 1;
};

Dataset generate_face_detection_benchmark(const BenchmarkOptions& options);

// CSV with a schema header: "name:numeric", "name:categorical" and a final
// "name:target" column.
std::string dataset_csv(const Dataset& data);
Dataset parse_dataset_csv(const std::string& text);

}  // namespace varsim::profiler

#endif  // VARSIM_PROFILER_HPP
