#include "eegwl/forest.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <set>

#include <json.hpp>

#include "eegwl/csv.hpp"
#include "eegwl/errors.hpp"
#include "eegwl/rng.hpp"

namespace eegwl {

int Tree::predict_class(const std::vector<double>& x) const {
  int i = 0;
  while (!nodes[i].is_leaf())
    i = x[nodes[i].feature] <= nodes[i].threshold ? nodes[i].left
                                                  : nodes[i].right;
  const auto& counts = nodes[i].class_counts;
  return static_cast<int>(
      std::max_element(counts.begin(), counts.end()) - counts.begin());
}

namespace {

double gini(const std::vector<std::size_t>& counts, std::size_t total) {
  double g = 1.0;
  for (std::size_t c : counts) {
    const double p = static_cast<double>(c) / static_cast<double>(total);
    g -= p * p;
  }
  return g;
}

}  // namespace

SplitChoice find_best_split(const Matrix& X, const std::vector<int>& y,
                            int n_classes,
                            const std::vector<std::size_t>& indices,
                            const std::vector<int>& features,
                            int min_samples_leaf) {
  SplitChoice best;
  const std::size_t n = indices.size();
  std::vector<std::pair<double, int>> vals(n);  // (value, class)
  for (int f : features) {
    for (std::size_t i = 0; i < n; ++i)
      vals[i] = {X[indices[i]][f], y[indices[i]]};
    std::sort(vals.begin(), vals.end());

    std::vector<std::size_t> left(n_classes, 0), right(n_classes, 0);
    for (const auto& [v, c] : vals) right[c] += 1;
    std::size_t nl = 0, nr = n;
    for (std::size_t i = 0; i + 1 < n; ++i) {
      left[vals[i].second] += 1;
      right[vals[i].second] -= 1;
      ++nl;
      --nr;
      if (vals[i].first == vals[i + 1].first) continue;
      if (nl < static_cast<std::size_t>(min_samples_leaf) ||
          nr < static_cast<std::size_t>(min_samples_leaf))
        continue;
      const double thr = vals[i].first + (vals[i + 1].first - vals[i].first) / 2.0;
      const double imp =
          (nl * gini(left, nl) + nr * gini(right, nr)) / static_cast<double>(n);
      // strict improvement keeps ties at the lowest feature index / threshold
      if (!best.valid || imp < best.impurity) {
        best = {true, f, thr, imp};
      }
    }
  }
  return best;
}

namespace {

struct Builder {
  const Matrix& X;
  const std::vector<int>& y;
  int n_classes;
  const ForestParams& params;
  int n_feat_per_split;
  Rng& rng;
  Tree tree;

  int build(std::vector<std::size_t> indices, int depth) {
    std::vector<std::size_t> counts(n_classes, 0);
    for (std::size_t i : indices) counts[y[i]] += 1;
    const auto node_id = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();
    tree.nodes[node_id].class_counts = counts;

    const bool pure =
        std::count_if(counts.begin(), counts.end(),
                      [](std::size_t c) { return c > 0; }) <= 1;
    const bool depth_ok =
        params.max_depth < 0 || depth < params.max_depth;
    if (pure || !depth_ok ||
        indices.size() < static_cast<std::size_t>(params.min_samples_split))
      return node_id;

    // feature subset without replacement, drawn fresh at every node
    const auto n_features = static_cast<int>(X[0].size());
    const std::vector<std::size_t> chosen =
        rng.sample_without_replacement(n_features, n_feat_per_split);
    std::vector<int> features(chosen.begin(), chosen.end());
    std::sort(features.begin(), features.end());

    const SplitChoice split = find_best_split(X, y, n_classes, indices,
                                              features, params.min_samples_leaf);
    if (!split.valid) return node_id;

    std::vector<std::size_t> li, ri;
    for (std::size_t i : indices)
      (X[i][split.feature] <= split.threshold ? li : ri).push_back(i);
    if (li.empty() || ri.empty()) return node_id;

    tree.nodes[node_id].feature = split.feature;
    tree.nodes[node_id].threshold = split.threshold;
    const int l = build(std::move(li), depth + 1);
    tree.nodes[node_id].left = l;
    const int r = build(std::move(ri), depth + 1);
    tree.nodes[node_id].right = r;
    return node_id;
  }
};

}  // namespace

ForestModel train_forest(const Matrix& X, const std::vector<std::string>& y,
                         const ForestParams& params) {
  if (X.empty() || X.size() != y.size())
    throw ValidationError("training data empty or misaligned");
  const std::size_t n_features = X[0].size();
  for (const auto& row : X)
    if (row.size() != n_features)
      throw ValidationError("ragged feature matrix");

  ForestModel model;
  const std::set<std::string> label_set(y.begin(), y.end());
  model.classes.assign(label_set.begin(), label_set.end());
  if (model.classes.size() < 2)
    throw DataError("need at least 2 classes to train");
  model.n_features = n_features;

  std::map<std::string, int> class_index;
  for (std::size_t i = 0; i < model.classes.size(); ++i)
    class_index[model.classes[i]] = static_cast<int>(i);
  std::vector<int> yi(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) yi[i] = class_index[y[i]];

  const int n_feat_per_split =
      params.max_features > 0
          ? std::min<int>(params.max_features, static_cast<int>(n_features))
          : std::max(1, static_cast<int>(std::floor(
                            std::sqrt(static_cast<double>(n_features)))));

  const std::size_t n = X.size();
  model.trees.resize(params.n_trees);
  for (int t = 0; t < params.n_trees; ++t) {
    Rng rng(mix_seed(params.seed, static_cast<std::uint64_t>(t)));
    std::vector<std::size_t> indices(n);
    if (params.bootstrap) {
      for (auto& i : indices) i = rng.uniform_index(n);
    } else {
      std::iota(indices.begin(), indices.end(), 0);
    }
    Builder b{X, yi, static_cast<int>(model.classes.size()), params,
              n_feat_per_split, rng, {}};
    b.build(std::move(indices), 0);
    model.trees[t] = std::move(b.tree);
  }
  return model;
}

std::vector<std::string> predict(const ForestModel& model, const Matrix& X) {
  std::vector<std::string> out;
  out.reserve(X.size());
  for (const auto& row : X) {
    if (row.size() != model.n_features)
      throw ValidationError("feature count mismatch at prediction time");
    std::vector<std::size_t> votes(model.classes.size(), 0);
    for (const auto& tree : model.trees) votes[tree.predict_class(row)] += 1;
    // plurality; ties resolve to the lexicographically smallest class
    const auto winner =
        std::max_element(votes.begin(), votes.end()) - votes.begin();
    out.push_back(model.classes[winner]);
  }
  return out;
}

ClassificationReport classification_report(
    const std::vector<std::string>& y_true,
    const std::vector<std::string>& y_pred) {
  if (y_true.size() != y_pred.size() || y_true.empty())
    throw ValidationError("report inputs empty or misaligned");
  std::set<std::string> classes(y_true.begin(), y_true.end());
  classes.insert(y_pred.begin(), y_pred.end());

  ClassificationReport rep;
  for (const auto& cls : classes) {
    std::size_t tp = 0, fp = 0, fn = 0, support = 0;
    for (std::size_t i = 0; i < y_true.size(); ++i) {
      const bool t = y_true[i] == cls, p = y_pred[i] == cls;
      if (t) ++support;
      if (t && p) ++tp;
      if (!t && p) ++fp;
      if (t && !p) ++fn;
    }
    ClassMetrics m;
    m.cls = cls;
    m.support = support;
    m.precision = (tp + fp) ? static_cast<double>(tp) / (tp + fp) : 0.0;
    m.recall = (tp + fn) ? static_cast<double>(tp) / (tp + fn) : 0.0;
    m.f1 = (m.precision + m.recall) > 0
               ? 2.0 * m.precision * m.recall / (m.precision + m.recall)
               : 0.0;
    rep.per_class.push_back(m);
    rep.macro_precision += m.precision;
    rep.macro_recall += m.recall;
    rep.macro_f1 += m.f1;
    rep.total_support += support;
  }
  const double k = static_cast<double>(rep.per_class.size());
  rep.macro_precision /= k;
  rep.macro_recall /= k;
  rep.macro_f1 /= k;
  return rep;
}

void write_report_csv(const ClassificationReport& rep, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write " + path);
  out << "class,precision,recall,f1,support\n";
  for (const auto& m : rep.per_class)
    out << m.cls << ',' << format_double(m.precision) << ','
        << format_double(m.recall) << ',' << format_double(m.f1) << ','
        << m.support << '\n';
  out << "macro," << format_double(rep.macro_precision) << ','
      << format_double(rep.macro_recall) << ',' << format_double(rep.macro_f1)
      << ',' << rep.total_support << '\n';
}

namespace {

nlohmann::json node_to_json(const TreeNode& n) {
  return {{"feature", n.feature},
          {"threshold", n.threshold},
          {"left", n.left},
          {"right", n.right},
          {"counts", n.class_counts}};
}

TreeNode node_from_json(const nlohmann::json& j) {
  TreeNode n;
  n.feature = j.at("feature").get<int>();
  n.threshold = j.at("threshold").get<double>();
  n.left = j.at("left").get<int>();
  n.right = j.at("right").get<int>();
  n.class_counts = j.at("counts").get<std::vector<std::size_t>>();
  return n;
}

}  // namespace

std::string ForestModel::to_json() const {
  nlohmann::json trees_j = nlohmann::json::array();
  for (const auto& t : trees) {
    nlohmann::json nodes = nlohmann::json::array();
    for (const auto& n : t.nodes) nodes.push_back(node_to_json(n));
    trees_j.push_back(std::move(nodes));
  }
  return nlohmann::json{{"classes", classes},
                        {"n_features", n_features},
                        {"trees", trees_j}}
      .dump();
}

ForestModel ForestModel::from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError("model parse error: " + std::string(e.what()));
  }
  ForestModel m;
  m.classes = j.at("classes").get<std::vector<std::string>>();
  m.n_features = j.at("n_features").get<std::size_t>();
  for (const auto& tj : j.at("trees")) {
    Tree t;
    for (const auto& nj : tj) t.nodes.push_back(node_from_json(nj));
    m.trees.push_back(std::move(t));
  }
  return m;
}

void ForestModel::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write " + path);
  out << to_json() << '\n';
}

ForestModel ForestModel::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DependencyError("missing model file: " + path);
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  return from_json(text);
}

}  // namespace eegwl
