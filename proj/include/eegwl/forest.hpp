#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace eegwl {

using Matrix = std::vector<std::vector<double>>;  // row-major samples

struct ForestParams {
  int n_trees = 100;
  int max_depth = -1;          // -1 = unbounded
  int min_samples_split = 2;
  int min_samples_leaf = 1;
  int max_features = -1;       // -1 = floor(sqrt(n_features))
  bool bootstrap = true;       // sample size = n, with replacement
  std::uint64_t seed = 0;
};

struct TreeNode {
  int feature = -1;            // -1 marks a leaf
  double threshold = 0;
  int left = -1, right = -1;
  std::vector<std::size_t> class_counts;  // leaf histogram

  bool is_leaf() const { return feature < 0; }
};

struct Tree {
  std::vector<TreeNode> nodes;  // node 0 is the root
  int predict_class(const std::vector<double>& x) const;
};

struct ForestModel {
  std::vector<std::string> classes;  // sorted; ties resolve to lowest index
  std::size_t n_features = 0;
  std::vector<Tree> trees;

  std::string to_json() const;
  static ForestModel from_json(const std::string& text);
  void save(const std::string& path) const;
  static ForestModel load(const std::string& path);
};

struct SplitChoice {
  bool valid = false;
  int feature = -1;
  double threshold = 0;
  double impurity = 0;  // weighted child Gini
};

// Best Gini split over the given features; thresholds at midpoints between
// consecutive distinct values; ties break toward the lowest feature index,
// then the lowest threshold.
SplitChoice find_best_split(const Matrix& X, const std::vector<int>& y,
                            int n_classes,
                            const std::vector<std::size_t>& indices,
                            const std::vector<int>& features,
                            int min_samples_leaf);

ForestModel train_forest(const Matrix& X, const std::vector<std::string>& y,
                         const ForestParams& params);

std::vector<std::string> predict(const ForestModel& model, const Matrix& X);

struct ClassMetrics {
  std::string cls;
  double precision = 0, recall = 0, f1 = 0;
  std::size_t support = 0;
};

struct ClassificationReport {
  std::vector<ClassMetrics> per_class;  // sorted by class label
  double macro_precision = 0, macro_recall = 0, macro_f1 = 0;
  std::size_t total_support = 0;
};

ClassificationReport classification_report(const std::vector<std::string>& y_true,
                                           const std::vector<std::string>& y_pred);

void write_report_csv(const ClassificationReport& rep, const std::string& path);

}  // namespace eegwl
