#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <set>

#include "eegwl/errors.hpp"
#include "eegwl/forest.hpp"
#include "eegwl/rng.hpp"

using namespace eegwl;

namespace {

// exhaustive reference: every candidate split whose weighted child Gini ties
// the optimum (candidates an implementation may legitimately pick among)
std::vector<SplitChoice> brute_force_splits(const Matrix& X,
                                            const std::vector<int>& y,
                                            int n_classes,
                                            const std::vector<std::size_t>& indices,
                                            const std::vector<int>& features,
                                            int min_leaf) {
  auto gini = [&](const std::vector<std::size_t>& subset) {
    std::vector<double> counts(n_classes, 0);
    for (std::size_t i : subset) counts[y[i]] += 1;
    double g = 1.0;
    for (double c : counts) {
      const double p = c / subset.size();
      g -= p * p;
    }
    return g;
  };

  std::vector<SplitChoice> candidates;
  for (int f : features) {
    std::set<double> values;
    for (std::size_t i : indices) values.insert(X[i][f]);
    std::vector<double> sorted(values.begin(), values.end());
    for (std::size_t v = 0; v + 1 < sorted.size(); ++v) {
      const double thr = sorted[v] + (sorted[v + 1] - sorted[v]) / 2.0;
      std::vector<std::size_t> left, right;
      for (std::size_t i : indices)
        (X[i][f] <= thr ? left : right).push_back(i);
      if (left.size() < static_cast<std::size_t>(min_leaf) ||
          right.size() < static_cast<std::size_t>(min_leaf))
        continue;
      const double imp = (left.size() * gini(left) + right.size() * gini(right)) /
                         indices.size();
      candidates.push_back({true, f, thr, imp});
    }
  }
  if (candidates.empty()) return candidates;
  double best = candidates.front().impurity;
  for (const auto& c : candidates) best = std::min(best, c.impurity);
  std::vector<SplitChoice> ties;
  for (const auto& c : candidates)
    if (c.impurity <= best + 1e-9) ties.push_back(c);
  return ties;
}

Matrix blob_data(std::vector<std::string>& labels, double separation,
                 std::uint64_t seed, int n_per_class = 60) {
  Rng rng(seed);
  Matrix X;
  for (int cls = 0; cls < 2; ++cls)
    for (int i = 0; i < n_per_class; ++i) {
      X.push_back({cls * separation + rng.normal(),
                   cls * separation + rng.normal()});
      labels.push_back(cls == 0 ? "a" : "b");
    }
  return X;
}

}  // namespace

TEST_CASE("Gini split matches exhaustive search on small fixtures") {
  Rng rng(4242);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 4 + rng.uniform_index(9);  // <= 12 samples
    const int n_features = 1 + static_cast<int>(rng.uniform_index(3));
    const int n_classes = 2 + static_cast<int>(rng.uniform_index(2));
    Matrix X(n, std::vector<double>(n_features));
    std::vector<int> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      for (int f = 0; f < n_features; ++f)
        X[i][f] = std::floor(rng.uniform() * 6.0);  // duplicates likely
      y[i] = static_cast<int>(rng.uniform_index(n_classes));
    }
    std::vector<std::size_t> indices(n);
    std::iota(indices.begin(), indices.end(), 0);
    std::vector<int> features(n_features);
    std::iota(features.begin(), features.end(), 0);

    const SplitChoice got =
        find_best_split(X, y, n_classes, indices, features, 1);
    const auto want =
        brute_force_splits(X, y, n_classes, indices, features, 1);
    REQUIRE(got.valid == !want.empty());
    if (got.valid) {
      CHECK(got.impurity == doctest::Approx(want.front().impurity).epsilon(1e-9));
      // the chosen split must be one of the impurity-optimal candidates
      const bool matched = std::any_of(
          want.begin(), want.end(), [&](const SplitChoice& c) {
            return c.feature == got.feature &&
                   std::abs(c.threshold - got.threshold) <= 1e-9;
          });
      CHECK(matched);
    }
  }
}

TEST_CASE("separable blobs memorized by pure-leaf growth") {
  std::vector<std::string> labels;
  const Matrix X = blob_data(labels, 6.0, 1);
  ForestParams params;
  params.n_trees = 25;
  params.seed = 2;
  const ForestModel model = train_forest(X, labels, params);
  const auto pred = predict(model, X);
  for (std::size_t i = 0; i < labels.size(); ++i) CHECK(pred[i] == labels[i]);
}

TEST_CASE("XOR layout generalizes") {
  Rng rng(7);
  Matrix X;
  std::vector<std::string> labels;
  for (int i = 0; i < 400; ++i) {
    const int qx = static_cast<int>(rng.uniform_index(2));
    const int qy = static_cast<int>(rng.uniform_index(2));
    X.push_back({qx * 4.0 + rng.normal() * 0.5, qy * 4.0 + rng.normal() * 0.5});
    labels.push_back((qx ^ qy) ? "odd" : "even");
  }
  const std::size_t n_train = 300;
  Matrix X_train(X.begin(), X.begin() + n_train);
  Matrix X_test(X.begin() + n_train, X.end());
  std::vector<std::string> y_train(labels.begin(), labels.begin() + n_train);
  std::vector<std::string> y_test(labels.begin() + n_train, labels.end());

  ForestParams params;
  params.seed = 8;
  const auto pred = predict(train_forest(X_train, y_train, params), X_test);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < y_test.size(); ++i)
    if (pred[i] == y_test[i]) ++hits;
  CHECK(static_cast<double>(hits) / y_test.size() >= 0.9);
}

TEST_CASE("shuffled binary labels score near chance") {
  Rng rng(55);
  Matrix X;
  std::vector<std::string> labels;
  for (int i = 0; i < 600; ++i) {
    X.push_back({rng.normal(), rng.normal(), rng.normal()});
    labels.push_back(i % 2 ? "a" : "b");
  }
  rng.shuffle(labels);
  const std::size_t n_train = 400;
  ForestParams params;
  params.seed = 9;
  const ForestModel model = train_forest(
      Matrix(X.begin(), X.begin() + n_train),
      std::vector<std::string>(labels.begin(), labels.begin() + n_train),
      params);
  const auto pred = predict(model, Matrix(X.begin() + n_train, X.end()));
  const auto rep = classification_report(
      std::vector<std::string>(labels.begin() + n_train, labels.end()), pred);
  CHECK(rep.macro_f1 == doctest::Approx(0.5).epsilon(0.15));
}

TEST_CASE("prediction determinism and degenerate ensemble") {
  std::vector<std::string> labels;
  const Matrix X = blob_data(labels, 6.0, 3);
  ForestParams params;
  params.n_trees = 1;
  params.seed = 4;
  const ForestModel model = train_forest(X, labels, params);
  REQUIRE(model.trees.size() == 1);
  const auto p1 = predict(model, X);
  const auto p2 = predict(model, X);
  CHECK(p1 == p2);
  // single-tree forest equals that tree's leaf majority
  for (std::size_t i = 0; i < X.size(); ++i)
    CHECK(p1[i] == model.classes[model.trees[0].predict_class(X[i])]);
}

TEST_CASE("classification report metrics") {
  SUBCASE("perfect predictions") {
    const std::vector<std::string> y = {"a", "b", "a", "b"};
    const auto rep = classification_report(y, y);
    CHECK(rep.macro_precision == 1.0);
    CHECK(rep.macro_recall == 1.0);
    CHECK(rep.macro_f1 == 1.0);
    CHECK(rep.total_support == 4);
  }

  SUBCASE("hand-computed binary counts") {
    // class a: TP=2, FP=1, FN=1, TN=1
    const std::vector<std::string> y_true = {"a", "a", "a", "b", "b"};
    const std::vector<std::string> y_pred = {"a", "a", "b", "a", "b"};
    const auto rep = classification_report(y_true, y_pred);
    REQUIRE(rep.per_class.size() == 2);
    CHECK(rep.per_class[0].cls == "a");
    CHECK(rep.per_class[0].precision == doctest::Approx(2.0 / 3.0));
    CHECK(rep.per_class[0].recall == doctest::Approx(2.0 / 3.0));
    CHECK(rep.per_class[0].f1 == doctest::Approx(2.0 / 3.0));
    CHECK(rep.per_class[0].support == 3);
  }

  SUBCASE("constant predictor on balanced 4 classes has macro recall 0.25") {
    std::vector<std::string> y_true, y_pred;
    for (const std::string cls : {"a", "b", "c", "d"})
      for (int i = 0; i < 10; ++i) {
        y_true.push_back(cls);
        y_pred.push_back("a");
      }
    const auto rep = classification_report(y_true, y_pred);
    CHECK(rep.macro_recall == doctest::Approx(0.25));
  }
}

TEST_CASE("model json round-trip preserves predictions") {
  std::vector<std::string> labels;
  const Matrix X = blob_data(labels, 3.0, 6);
  ForestParams params;
  params.n_trees = 10;
  params.seed = 12;
  const ForestModel model = train_forest(X, labels, params);
  const ForestModel loaded = ForestModel::from_json(model.to_json());
  CHECK(loaded.classes == model.classes);
  CHECK(predict(loaded, X) == predict(model, X));
}

TEST_CASE("report csv has the macro row") {
  const std::vector<std::string> y = {"a", "b", "a", "b"};
  const auto rep = classification_report(y, y);
  const std::string path = "test_report.csv";
  write_report_csv(rep, path);
  std::ifstream in(path);
  std::string line, last, first;
  std::getline(in, first);
  CHECK(first == "class,precision,recall,f1,support");
  while (std::getline(in, line))
    if (!line.empty()) last = line;
  CHECK(last.rfind("macro,", 0) == 0);
  std::remove(path.c_str());
}
