#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace driftscan {

/// Row-major feature matrix with binary labels (1 = debris).
struct TrainingSet {
  std::size_t n_features = 0;
  std::vector<double> x;
  std::vector<std::uint8_t> y;

  std::size_t rows() const { return y.size(); }
  std::span<const double> row(std::size_t i) const {
    return std::span<const double>(x).subspan(i * n_features, n_features);
  }
  void add(std::span<const double> features, bool positive);
};

/// Internal nodes send x[feature] <= threshold left. Leaves have feature < 0.
struct TreeNode {
  int feature = -1;
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double probability = 0.0;

  bool is_leaf() const { return feature < 0; }
  friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

struct DecisionTree {
  std::vector<TreeNode> nodes;  // preorder; nodes[0] is the root

  double predict(std::span<const double> features) const;
  int depth() const;
  friend bool operator==(const DecisionTree&, const DecisionTree&) = default;
};

struct ForestConfig {
  int n_trees = 100;
  int max_depth = 0;           // 0 = unbounded
  int features_per_split = 0;  // 0 = ceil(sqrt(n_features))
  int min_leaf = 1;
  friend bool operator==(const ForestConfig&, const ForestConfig&) = default;
};

struct RandomForestModel {
  std::size_t n_features = 0;
  ForestConfig config;
  std::uint64_t seed = 0;
  std::vector<DecisionTree> trees;

  friend bool operator==(const RandomForestModel&, const RandomForestModel&) = default;
};

struct Split {
  int feature = -1;
  double threshold = 0.0;
  /// N_left * gini_left + N_right * gini_right.
  double weighted_impurity = 0.0;
};

/// Best Gini split of `rows` (duplicates allowed) over `features`, scanning
/// midpoints between consecutive distinct values. Lower impurity wins; ties go
/// to the earlier feature in `features`, then the lower threshold. Returns
/// nullopt when no candidate leaves min_leaf rows on both sides.
std::optional<Split> find_best_split(const TrainingSet& data,
                                     std::span<const std::size_t> rows,
                                     std::span<const int> features, int min_leaf = 1);

/// Bootstrap-aggregated CART trees with per-split feature subsampling.
/// Tree t draws from the substream derive_seed(seed, t).
RandomForestModel train_forest(const TrainingSet& data, const ForestConfig& config,
                               std::uint64_t seed);

/// Mean leaf probability across trees.
double predict_proba(const RandomForestModel& model, std::span<const double> features);

std::string serialize_model(const RandomForestModel& model);
RandomForestModel deserialize_model(const std::string& text);
void save_model(const RandomForestModel& model, const std::filesystem::path& path);
RandomForestModel load_model(const std::filesystem::path& path);

}  // namespace driftscan
