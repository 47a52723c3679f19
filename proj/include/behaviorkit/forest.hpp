#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "behaviorkit/featurize.hpp"
#include "behaviorkit/parallel.hpp"
#include "behaviorkit/rng.hpp"

namespace bkit {

class ForestError : public std::runtime_error {
 public:
  explicit ForestError(const std::string& what) : std::runtime_error(what) {}
};

enum class Target { Level, Gender };

inline const char* to_string(Target t) { return t == Target::Level ? "level" : "gender"; }
inline std::optional<Target> parse_target(std::string_view s) {
  if (s == "level") return Target::Level;
  if (s == "gender") return Target::Gender;
  return std::nullopt;
}

// Feature matrix plus encoded labels; the label vocabulary is the fixed
// domain order of the target, not data order.
struct Dataset {
  std::vector<std::vector<int>> X;
  std::vector<int> y;
  std::vector<std::string> labels;
  int n_features = kVocabularySize;
};

inline Dataset make_dataset(const Corpus& corpus, Target target) {
  Dataset ds;
  ds.labels = target == Target::Level ? std::vector<std::string>{"Low", "Medium", "High"}
                                      : std::vector<std::string>{"Male", "Female"};
  ds.X.reserve(corpus.samples.size());
  ds.y.reserve(corpus.samples.size());
  for (const auto& s : corpus.samples) {
    if (s.features.counts.empty()) {
      throw ForestError("corpus is not featurized (call featurize_corpus first)");
    }
    int label;
    if (target == Target::Level) {
      if (!s.level) throw ForestError("sample '" + s.turn_id + "' has no level label");
      label = static_cast<int>(*s.level);
    } else {
      if (!s.gender) throw ForestError("sample '" + s.turn_id + "' has no gender label");
      label = static_cast<int>(*s.gender);
    }
    ds.X.push_back(s.features.counts);
    ds.y.push_back(label);
  }
  if (!ds.X.empty()) ds.n_features = static_cast<int>(ds.X.front().size());
  return ds;
}

// decision rule everywhere: go left iff value <= threshold
struct TreeNode {
  int feature = -1;          // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  std::vector<int> counts;   // per-class training counts (leaves keep the vote)
  double cover = 0.0;        // training samples that reached this node
};

struct Tree {
  std::vector<TreeNode> nodes;

  bool is_leaf(int n) const { return nodes[n].feature < 0; }

  int descend(int n, const std::vector<int>& x) const {
    while (!is_leaf(n)) {
      const TreeNode& node = nodes[n];
      n = x[node.feature] <= node.threshold ? node.left : node.right;
    }
    return n;
  }

  // majority class at a leaf, ties to the lowest label index
  int leaf_vote(int leaf) const {
    const auto& c = nodes[leaf].counts;
    return static_cast<int>(std::max_element(c.begin(), c.end()) - c.begin());
  }

  int predict(const std::vector<int>& x) const { return leaf_vote(descend(0, x)); }
};

struct ForestConfig {
  int n_trees = 100;
  int mtry = 0;              // 0: round(sqrt(n_features))
  int min_samples_leaf = 1;
  int max_depth = 0;         // 0: unbounded
  bool bootstrap = true;
  std::uint64_t seed = 0;
};

struct Forest {
  std::vector<Tree> trees;
  std::vector<std::string> labels;
  Target target = Target::Level;
  ForestConfig config;
  std::vector<std::string> vocabulary;  // feature names, for compatibility checks

  int n_classes() const { return static_cast<int>(labels.size()); }
};

// Gini impurity 1 - sum((c/n)^2) over class counts.
inline double gini_impurity(const std::vector<int>& counts) {
  long n = 0;
  for (int c : counts) n += c;
  if (n == 0) return 0.0;
  double sum_sq = 0.0;
  for (int c : counts) {
    const double p = static_cast<double>(c) / static_cast<double>(n);
    sum_sq += p * p;
  }
  return 1.0 - sum_sq;
}

namespace detail {

struct SplitChoice {
  bool found = false;
  int feature = -1;
  double threshold = 0.0;
  double gain = 0.0;
};

// Exhaustive threshold scan for one feature. Counting buckets cover the
// common case (tag counts are tiny); high-cardinality features fall back to a
// sort.
inline SplitChoice eval_feature(const Dataset& ds, const std::vector<int>& idx,
                                const std::vector<int>& node_counts, double parent_impurity,
                                int feature, int min_leaf) {
  const int k = static_cast<int>(node_counts.size());
  const long n = static_cast<long>(idx.size());
  SplitChoice local;

  auto consider = [&](double threshold, const std::vector<int>& left, long n_left) {
    const long n_right = n - n_left;
    if (n_left < min_leaf || n_right < min_leaf) return;
    double left_sq = 0.0, right_sq = 0.0;
    for (int c = 0; c < k; ++c) {
      const double lc = left[c], rc = node_counts[c] - left[c];
      left_sq += lc * lc;
      right_sq += rc * rc;
    }
    const double child =
        (n_left - left_sq / n_left + n_right - right_sq / n_right) / static_cast<double>(n);
    const double gain = parent_impurity - child;
    if (!local.found || gain > local.gain) {
      local = {true, feature, threshold, gain};
    }
  };

  int max_v = 0;
  for (int i : idx) max_v = std::max(max_v, ds.X[i][feature]);
  if (max_v == 0) return local;  // constant zero at this node

  if (max_v <= 64) {
    std::vector<int> bucket(static_cast<std::size_t>(max_v + 1) * k, 0);
    for (int i : idx) ++bucket[static_cast<std::size_t>(ds.X[i][feature]) * k + ds.y[i]];
    std::vector<int> left(k, 0);
    long n_left = 0;
    int prev_value = -1;
    for (int v = 0; v <= max_v; ++v) {
      long row_total = 0;
      for (int c = 0; c < k; ++c) row_total += bucket[static_cast<std::size_t>(v) * k + c];
      if (row_total == 0) continue;
      if (prev_value >= 0) consider((prev_value + v) / 2.0, left, n_left);
      for (int c = 0; c < k; ++c) left[c] += bucket[static_cast<std::size_t>(v) * k + c];
      n_left += row_total;
      prev_value = v;
    }
  } else {
    std::vector<std::pair<int, int>> vals;
    vals.reserve(idx.size());
    for (int i : idx) vals.emplace_back(ds.X[i][feature], ds.y[i]);
    std::sort(vals.begin(), vals.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    std::vector<int> left(k, 0);
    long n_left = 0;
    for (std::size_t p = 0; p < vals.size();) {
      std::size_t q = p;
      while (q < vals.size() && vals[q].first == vals[p].first) {
        ++left[vals[q].second];
        ++q;
      }
      n_left += static_cast<long>(q - p);
      if (q < vals.size()) consider((vals[p].first + vals[q].first) / 2.0, left, n_left);
      p = q;
    }
  }
  return local;
}

// Features are visited in a fresh random order per node. The scan keeps going
// past mtry until some valid split has been seen, matching the reference tree
// tooling, so informative features are never starved by an unlucky draw. Ties
// on gain break to the lowest feature index, then lowest threshold, keeping
// the choice independent of visit order.
inline SplitChoice best_split(const Dataset& ds, const std::vector<int>& idx,
                              const std::vector<int>& node_counts, int mtry, int min_leaf,
                              Rng& rng) {
  const double parent_impurity = gini_impurity(node_counts);
  const std::vector<int> order = rng.sample_without_replacement(ds.n_features, ds.n_features);
  SplitChoice best;
  int visited = 0;
  for (int feature : order) {
    SplitChoice local = eval_feature(ds, idx, node_counts, parent_impurity, feature, min_leaf);
    ++visited;
    if (local.found) {
      const bool better =
          !best.found || local.gain > best.gain ||
          (local.gain == best.gain &&
           (local.feature < best.feature ||
            (local.feature == best.feature && local.threshold < best.threshold)));
      if (better) best = local;
    }
    if (visited >= mtry && best.found) break;
  }
  return best;
}

struct TreeBuilder {
  const Dataset& ds;
  const ForestConfig& cfg;
  int mtry;
  int k;
  Rng& rng;
  Tree tree;

  int build(std::vector<int> idx, int depth) {
    std::vector<int> counts(k, 0);
    for (int i : idx) ++counts[ds.y[i]];

    const int node_id = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();
    tree.nodes[node_id].counts = counts;
    tree.nodes[node_id].cover = static_cast<double>(idx.size());

    const bool pure = std::count(counts.begin(), counts.end(), 0) >= k - 1;
    const bool depth_capped = cfg.max_depth > 0 && depth >= cfg.max_depth;
    if (pure || depth_capped || static_cast<int>(idx.size()) < 2 * cfg.min_samples_leaf) {
      return node_id;
    }

    SplitChoice split = best_split(ds, idx, counts, mtry, cfg.min_samples_leaf, rng);
    if (!split.found || split.gain <= 0.0) return node_id;

    std::vector<int> left_idx, right_idx;
    left_idx.reserve(idx.size());
    right_idx.reserve(idx.size());
    for (int i : idx) {
      (ds.X[i][split.feature] <= split.threshold ? left_idx : right_idx).push_back(i);
    }
    idx.clear();
    idx.shrink_to_fit();

    tree.nodes[node_id].feature = split.feature;
    tree.nodes[node_id].threshold = split.threshold;
    const int left = build(std::move(left_idx), depth + 1);
    tree.nodes[node_id].left = left;
    const int right = build(std::move(right_idx), depth + 1);
    tree.nodes[node_id].right = right;
    return node_id;
  }
};

}  // namespace detail

inline int effective_mtry(const ForestConfig& cfg, int n_features) {
  if (cfg.mtry > 0) return std::min(cfg.mtry, n_features);
  return std::min(n_features, static_cast<int>(std::lround(std::sqrt(static_cast<double>(n_features)))));
}

// Bagged Gini trees: bootstrap resample per tree, random feature subset per
// node, grown to purity by default. Each tree draws from its own seed stream,
// so the forest is byte-stable no matter how the tree loop is scheduled.
inline Forest fit(const Dataset& ds, Target target, ForestConfig cfg,
                  const std::vector<std::string>& vocabulary = {}) {
  if (ds.X.empty()) throw ForestError("cannot fit on an empty dataset");
  if (cfg.n_trees <= 0) throw ForestError("tree count must be positive");
  const int k = static_cast<int>(ds.labels.size());
  {
    std::vector<int> present(k, 0);
    for (int y : ds.y) {
      if (y < 0 || y >= k) throw ForestError("label index out of range");
      present[y] = 1;
    }
    if (std::accumulate(present.begin(), present.end(), 0) < 2) {
      throw ForestError("training data contains a single class");
    }
  }

  Forest forest;
  forest.labels = ds.labels;
  forest.target = target;
  forest.config = cfg;
  forest.vocabulary = vocabulary;
  forest.trees.resize(cfg.n_trees);

  const int mtry = effective_mtry(cfg, ds.n_features);
  const int n = static_cast<int>(ds.X.size());

  parallel_for(cfg.n_trees, [&](int t) {
    Rng rng(mix_seed(cfg.seed, static_cast<std::uint64_t>(t)));
    std::vector<int> idx(n);
    if (cfg.bootstrap) {
      for (int i = 0; i < n; ++i) idx[i] = rng.index(n);
    } else {
      std::iota(idx.begin(), idx.end(), 0);
    }
    detail::TreeBuilder builder{ds, cfg, mtry, k, rng, {}};
    builder.build(std::move(idx), 0);
    forest.trees[t] = std::move(builder.tree);
  });
  return forest;
}

struct Prediction {
  int label = -1;
  std::vector<double> vote_fractions;
};

// Majority vote over trees; fractions always sum to one and ties break to the
// lowest label index.
inline Prediction predict(const Forest& forest, const std::vector<int>& x) {
  Prediction p;
  std::vector<int> votes(forest.labels.size(), 0);
  for (const auto& tree : forest.trees) ++votes[tree.predict(x)];
  p.vote_fractions.resize(votes.size());
  int best = 0;
  for (std::size_t c = 0; c < votes.size(); ++c) {
    p.vote_fractions[c] = static_cast<double>(votes[c]) / static_cast<double>(forest.trees.size());
    if (votes[c] > votes[best]) best = static_cast<int>(c);
  }
  p.label = best;
  return p;
}

inline Prediction predict(const Forest& forest, const FeatureVector& x) {
  return predict(forest, x.counts);
}

// ---------------------------------------------------------------------------
// Training / evaluation protocol: repeated stratified 80-20 splits
// ---------------------------------------------------------------------------

struct EvalReport {
  std::vector<double> accuracies;
  double mean = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  std::vector<std::vector<long>> confusion;  // [true][predicted], pooled over seeds
  std::vector<std::string> labels;
  int n_trees = 0;
  int n_seeds = 0;
};

struct SplitIndices {
  std::vector<int> train;
  std::vector<int> test;
};

// Stratified shuffle split: 20% of each class (at least one sample) goes to
// the test fold.
inline SplitIndices stratified_split(const Dataset& ds, double test_fraction, Rng& rng) {
  const int k = static_cast<int>(ds.labels.size());
  std::vector<std::vector<int>> by_class(k);
  for (int i = 0; i < static_cast<int>(ds.y.size()); ++i) by_class[ds.y[i]].push_back(i);

  SplitIndices split;
  for (int c = 0; c < k; ++c) {
    auto& members = by_class[c];
    if (members.empty()) continue;
    rng.shuffle(members);
    auto n_test = static_cast<std::size_t>(
        std::max<long>(1, std::lround(test_fraction * static_cast<double>(members.size()))));
    if (n_test >= members.size()) n_test = members.size() - 1;
    for (std::size_t i = 0; i < members.size(); ++i) {
      (i < n_test ? split.test : split.train).push_back(members[i]);
    }
  }
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.test.begin(), split.test.end());
  return split;
}

inline Dataset subset(const Dataset& ds, const std::vector<int>& idx) {
  Dataset out;
  out.labels = ds.labels;
  out.n_features = ds.n_features;
  out.X.reserve(idx.size());
  out.y.reserve(idx.size());
  for (int i : idx) {
    out.X.push_back(ds.X[i]);
    out.y.push_back(ds.y[i]);
  }
  return out;
}

inline EvalReport evaluate_protocol(const Dataset& ds, Target target, ForestConfig cfg,
                                    int n_seeds = 20, std::uint64_t protocol_seed = 0) {
  if (ds.X.empty()) throw ForestError("cannot evaluate an empty corpus");
  const int k = static_cast<int>(ds.labels.size());

  EvalReport report;
  report.labels = ds.labels;
  report.n_trees = cfg.n_trees;
  report.n_seeds = n_seeds;
  report.accuracies.resize(n_seeds);
  report.confusion.assign(k, std::vector<long>(k, 0));

  std::vector<std::vector<std::vector<long>>> fold_confusion(
      n_seeds, std::vector<std::vector<long>>(k, std::vector<long>(k, 0)));

  parallel_for(n_seeds, [&](int s) {
    Rng rng(mix_seed(protocol_seed, 0x5eedULL + static_cast<std::uint64_t>(s)));
    SplitIndices split = stratified_split(ds, 0.2, rng);
    Dataset train = subset(ds, split.train);
    Dataset test = subset(ds, split.test);
    if (train.X.empty() || test.X.empty()) {
      throw ForestError("corpus too small for an 80-20 split");
    }
    {
      // stratified construction keeps every class in both folds
      std::vector<int> seen_train(k, 0), seen_test(k, 0);
      for (int y : train.y) seen_train[y] = 1;
      for (int y : test.y) seen_test[y] = 1;
      for (int c = 0; c < k; ++c) {
        bool in_data = false;
        for (int y : ds.y) {
          if (y == c) { in_data = true; break; }
        }
        if (in_data && (!seen_train[c] || !seen_test[c])) {
          throw ForestError("class '" + ds.labels[c] + "' missing from a stratified fold");
        }
      }
    }

    ForestConfig fold_cfg = cfg;
    fold_cfg.seed = mix_seed(protocol_seed, 0xf17ULL + static_cast<std::uint64_t>(s));
    Forest forest = fit(train, target, fold_cfg);

    long correct = 0;
    for (std::size_t i = 0; i < test.X.size(); ++i) {
      const int pred = predict(forest, test.X[i]).label;
      if (pred == test.y[i]) ++correct;
      ++fold_confusion[s][test.y[i]][pred];
    }
    report.accuracies[s] = static_cast<double>(correct) / static_cast<double>(test.X.size());
  }, 1 /* forest fitting already saturates the cores */);

  for (int s = 0; s < n_seeds; ++s) {
    for (int a = 0; a < k; ++a) {
      for (int b = 0; b < k; ++b) report.confusion[a][b] += fold_confusion[s][a][b];
    }
  }

  double sum = 0.0;
  for (double a : report.accuracies) sum += a;
  report.mean = sum / n_seeds;
  double var = 0.0;
  for (double a : report.accuracies) var += (a - report.mean) * (a - report.mean);
  const double sd = n_seeds > 1 ? std::sqrt(var / (n_seeds - 1)) : 0.0;
  const double half = 1.96 * sd / std::sqrt(static_cast<double>(n_seeds));
  report.ci_low = report.mean - half;
  report.ci_high = report.mean + half;
  return report;
}

// presentation used in reports: "mean accuracy of 94.49% [95% CI: 94.10%, 94.87%]"
inline std::string format_accuracy_line(const EvalReport& r) {
  char buf[128];
  std::snprintf(buf, sizeof buf, "mean accuracy of %.2f%% [95%% CI: %.2f%%, %.2f%%]",
                100.0 * r.mean, 100.0 * r.ci_low, 100.0 * r.ci_high);
  return buf;
}

inline nlohmann::ordered_json eval_report_to_json(const EvalReport& r) {
  nlohmann::ordered_json doc;
  doc["format"] = "bkit-eval-report";
  doc["version"] = 1;
  doc["n_trees"] = r.n_trees;
  doc["n_seeds"] = r.n_seeds;
  doc["labels"] = r.labels;
  doc["accuracies"] = r.accuracies;
  doc["mean_accuracy"] = r.mean;
  doc["ci95"] = {r.ci_low, r.ci_high};
  doc["ci_method"] = "normal approximation over seed accuracies: mean +/- 1.96*sd/sqrt(seeds)";
  doc["confusion"] = r.confusion;
  doc["summary"] = format_accuracy_line(r);
  return doc;
}

// ---------------------------------------------------------------------------
// Model file
// ---------------------------------------------------------------------------

inline nlohmann::ordered_json forest_to_json(const Forest& f) {
  nlohmann::ordered_json doc;
  doc["format"] = "bkit-forest";
  doc["version"] = 1;
  doc["target"] = to_string(f.target);
  doc["labels"] = f.labels;
  doc["vocabulary"] = f.vocabulary;
  doc["config"] = {{"n_trees", f.config.n_trees},
                   {"mtry", f.config.mtry},
                   {"min_samples_leaf", f.config.min_samples_leaf},
                   {"max_depth", f.config.max_depth},
                   {"bootstrap", f.config.bootstrap},
                   {"seed", f.config.seed}};
  auto& trees = doc["trees"] = nlohmann::ordered_json::array();
  for (const auto& tree : f.trees) {
    nlohmann::ordered_json nodes = nlohmann::ordered_json::array();
    for (const auto& n : tree.nodes) {
      nodes.push_back({{"f", n.feature},
                       {"t", n.threshold},
                       {"l", n.left},
                       {"r", n.right},
                       {"c", n.counts},
                       {"w", n.cover}});
    }
    trees.push_back({{"nodes", std::move(nodes)}});
  }
  return doc;
}

inline void save_forest(const Forest& f, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ForestError("cannot write model file: " + path.string());
  out << forest_to_json(f).dump() << "\n";
}

inline Forest load_forest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ForestError("cannot open model file: " + path.string());
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw ForestError(std::string("malformed model file: ") + e.what());
  }
  if (doc.value("format", "") != "bkit-forest") throw ForestError("not a bkit-forest file");

  Forest f;
  auto target = parse_target(doc.at("target").get<std::string>());
  if (!target) throw ForestError("unknown prediction target in model file");
  f.target = *target;
  f.labels = doc.at("labels").get<std::vector<std::string>>();
  f.vocabulary = doc.value("vocabulary", std::vector<std::string>{});
  const auto& cfg = doc.at("config");
  f.config.n_trees = cfg.value("n_trees", 100);
  f.config.mtry = cfg.value("mtry", 0);
  f.config.min_samples_leaf = cfg.value("min_samples_leaf", 1);
  f.config.max_depth = cfg.value("max_depth", 0);
  f.config.bootstrap = cfg.value("bootstrap", true);
  f.config.seed = cfg.value("seed", 0ULL);
  for (const auto& jt : doc.at("trees")) {
    Tree tree;
    for (const auto& jn : jt.at("nodes")) {
      TreeNode n;
      n.feature = jn.at("f").get<int>();
      n.threshold = jn.at("t").get<double>();
      n.left = jn.at("l").get<int>();
      n.right = jn.at("r").get<int>();
      n.counts = jn.at("c").get<std::vector<int>>();
      n.cover = jn.at("w").get<double>();
      tree.nodes.push_back(std::move(n));
    }
    f.trees.push_back(std::move(tree));
  }
  return f;
}

}  // namespace bkit
