#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "behaviorkit/forest.hpp"
#include "behaviorkit/parallel.hpp"

namespace bkit {

class ExplainError : public std::runtime_error {
 public:
  explicit ExplainError(const std::string& what) : std::runtime_error(what) {}
};

// Per-class, per-feature additive attribution of the forest's vote fractions:
// for every class, sum(phi) + base equals the vote fraction on this sample.
struct ShapAttribution {
  std::vector<std::vector<double>> phi;  // [class][feature]
  std::vector<double> base;              // expected vote fraction over the background
  std::string sample_id;
};

// Node weights for the conditional expectations: how much of the background
// set reaches each node of each tree. The base value is the background mean of
// the per-tree one-hot votes.
struct BackgroundWeights {
  std::vector<std::vector<double>> covers;  // [tree][node]
  std::vector<double> base;                 // [class]
  std::size_t n_background = 0;
};

inline BackgroundWeights route_background(const Forest& forest,
                                          const std::vector<std::vector<int>>& background) {
  if (background.empty()) throw ExplainError("background set must be nonempty");
  BackgroundWeights bw;
  bw.n_background = background.size();
  bw.covers.resize(forest.trees.size());
  bw.base.assign(forest.n_classes(), 0.0);
  for (std::size_t t = 0; t < forest.trees.size(); ++t) {
    const Tree& tree = forest.trees[t];
    auto& cov = bw.covers[t];
    cov.assign(tree.nodes.size(), 0.0);
    for (const auto& z : background) {
      int n = 0;
      cov[0] += 1.0;
      while (!tree.is_leaf(n)) {
        n = z[tree.nodes[n].feature] <= tree.nodes[n].threshold ? tree.nodes[n].left
                                                                : tree.nodes[n].right;
        cov[n] += 1.0;
      }
      bw.base[tree.leaf_vote(n)] += 1.0;
    }
  }
  const double scale = 1.0 / (static_cast<double>(background.size()) *
                              static_cast<double>(forest.trees.size()));
  for (auto& b : bw.base) b *= scale;
  return bw;
}

namespace shap_detail {

struct PathElement {
  int feature;
  double zero_fraction;
  double one_fraction;
  double pweight;
};

inline void extend_path(PathElement* path, int unique_depth, double zero_fraction,
                        double one_fraction, int feature) {
  path[unique_depth] = {feature, zero_fraction, one_fraction, unique_depth == 0 ? 1.0 : 0.0};
  for (int i = unique_depth - 1; i >= 0; --i) {
    path[i + 1].pweight += one_fraction * path[i].pweight * (i + 1) / static_cast<double>(unique_depth + 1);
    path[i].pweight = zero_fraction * path[i].pweight * (unique_depth - i) / static_cast<double>(unique_depth + 1);
  }
}

inline void unwind_path(PathElement* path, int unique_depth, int index) {
  const double one_fraction = path[index].one_fraction;
  const double zero_fraction = path[index].zero_fraction;
  double next_one = path[unique_depth].pweight;
  for (int i = unique_depth - 1; i >= 0; --i) {
    if (one_fraction != 0.0) {
      const double tmp = path[i].pweight;
      path[i].pweight = next_one * (unique_depth + 1) / static_cast<double>((i + 1) * one_fraction);
      next_one = tmp - path[i].pweight * zero_fraction * (unique_depth - i) /
                           static_cast<double>(unique_depth + 1);
    } else {
      path[i].pweight =
          path[i].pweight * (unique_depth + 1) / (zero_fraction * (unique_depth - i));
    }
  }
  for (int i = index; i < unique_depth; ++i) {
    path[i].feature = path[i + 1].feature;
    path[i].zero_fraction = path[i + 1].zero_fraction;
    path[i].one_fraction = path[i + 1].one_fraction;
  }
}

inline double unwound_path_sum(const PathElement* path, int unique_depth, int index) {
  const double one_fraction = path[index].one_fraction;
  const double zero_fraction = path[index].zero_fraction;
  double next_one = path[unique_depth].pweight;
  double total = 0.0;
  if (one_fraction != 0.0) {
    for (int i = unique_depth - 1; i >= 0; --i) {
      const double tmp = next_one / static_cast<double>((i + 1) * one_fraction);
      total += tmp;
      next_one = path[i].pweight - tmp * zero_fraction * (unique_depth - i);
    }
  } else {
    for (int i = unique_depth - 1; i >= 0; --i) {
      total += path[i].pweight / (zero_fraction * (unique_depth - i));
    }
  }
  return total * (unique_depth + 1);
}

// Recursive walk over all paths the conditional expectation can take, keeping
// one PathElement per unique feature on the decision path. phi is [class][feature].
inline void tree_shap_recurse(const Tree& tree, const std::vector<double>& covers,
                              const std::vector<int>& x, int n_classes, double tree_scale,
                              std::vector<std::vector<double>>& phi, int node, int unique_depth,
                              PathElement* parent_path, double parent_zero, double parent_one,
                              int parent_feature) {
  PathElement* path = parent_path + unique_depth + 1;
  std::copy(parent_path, parent_path + unique_depth + 1, path);
  extend_path(path, unique_depth, parent_zero, parent_one, parent_feature);

  const TreeNode& nd = tree.nodes[node];
  if (tree.is_leaf(node)) {
    const int vote = tree.leaf_vote(node);
    for (int i = 1; i <= unique_depth; ++i) {
      const double w = unwound_path_sum(path, unique_depth, i);
      const PathElement& el = path[i];
      phi[vote][el.feature] += w * (el.one_fraction - el.zero_fraction) * tree_scale;
    }
    return;
  }

  const int hot = x[nd.feature] <= nd.threshold ? nd.left : nd.right;
  const int cold = hot == nd.left ? nd.right : nd.left;
  const double node_cover = covers[node];
  const double hot_zero = node_cover > 0.0 ? covers[hot] / node_cover : 0.0;
  const double cold_zero = node_cover > 0.0 ? covers[cold] / node_cover : 0.0;

  double incoming_zero = 1.0, incoming_one = 1.0;
  int path_index = 0;
  while (path_index <= unique_depth && path[path_index].feature != nd.feature) ++path_index;
  if (path_index != unique_depth + 1) {
    incoming_zero = path[path_index].zero_fraction;
    incoming_one = path[path_index].one_fraction;
    unwind_path(path, unique_depth, path_index);
    unique_depth -= 1;
  }

  // subtrees with no background coverage and no x-path weight contribute
  // exactly zero; skipping them keeps the unwind arithmetic away from 0/0
  const double hot_weight = hot_zero * incoming_zero;
  const double cold_weight = cold_zero * incoming_zero;
  if (hot_weight != 0.0 || incoming_one != 0.0) {
    tree_shap_recurse(tree, covers, x, n_classes, tree_scale, phi, hot, unique_depth + 1, path,
                      hot_weight, incoming_one, nd.feature);
  }
  if (cold_weight != 0.0) {
    tree_shap_recurse(tree, covers, x, n_classes, tree_scale, phi, cold, unique_depth + 1, path,
                      cold_weight, 0.0, nd.feature);
  }
}

inline int tree_depth(const Tree& tree, int node = 0) {
  if (tree.is_leaf(node)) return 1;
  return 1 + std::max(tree_depth(tree, tree.nodes[node].left),
                      tree_depth(tree, tree.nodes[node].right));
}

}  // namespace shap_detail

// Exact per-tree Shapley values of the vote fractions under the
// path-dependent tree formulation, with conditional expectations weighted by
// how the background set covers each tree. Satisfies local accuracy: for each
// class, sum(phi) + base reproduces the forest's vote fraction.
inline ShapAttribution tree_shap(const Forest& forest, const std::vector<int>& x,
                                 const BackgroundWeights& bw, std::string sample_id = {}) {
  if (static_cast<int>(x.size()) < 1) throw ExplainError("empty input vector");
  for (const auto& tree : forest.trees) {
    for (const auto& nd : tree.nodes) {
      if (nd.feature >= static_cast<int>(x.size())) {
        throw ExplainError("input vector shorter than the forest's feature space");
      }
    }
  }
  if (bw.covers.size() != forest.trees.size()) {
    throw ExplainError("background weights do not match the forest");
  }

  ShapAttribution out;
  out.sample_id = std::move(sample_id);
  out.base = bw.base;
  out.phi.assign(forest.n_classes(), std::vector<double>(x.size(), 0.0));

  const double tree_scale = 1.0 / static_cast<double>(forest.trees.size());
  for (std::size_t t = 0; t < forest.trees.size(); ++t) {
    const Tree& tree = forest.trees[t];
    const int maxd = shap_detail::tree_depth(tree) + 2;
    std::vector<shap_detail::PathElement> path_store(
        static_cast<std::size_t>(maxd) * (maxd + 1) / 2 + 1);
    shap_detail::tree_shap_recurse(tree, bw.covers[t], x, forest.n_classes(), tree_scale, out.phi,
                                   0, 0, path_store.data(), 1.0, 1.0, -1);
  }
  return out;
}

inline ShapAttribution tree_shap(const Forest& forest, const FeatureVector& x,
                                 const std::vector<FeatureVector>& background,
                                 std::string sample_id = {}) {
  std::vector<std::vector<int>> bg;
  bg.reserve(background.size());
  for (const auto& b : background) bg.push_back(b.counts);
  return tree_shap(forest, x.counts, route_background(forest, bg), std::move(sample_id));
}

// ---------------------------------------------------------------------------
// Brute-force oracle
// ---------------------------------------------------------------------------

// Shapley values by direct enumeration over coalitions of the features that
// actually appear in the forest, with the background supplying values for
// absent features. Exponential in the number of active features; guarded.
inline ShapAttribution brute_force_shapley(const Forest& forest, const std::vector<int>& x,
                                           const std::vector<std::vector<int>>& background,
                                           int max_active = 20, std::string sample_id = {}) {
  if (background.empty()) throw ExplainError("background set must be nonempty");
  std::set<int> active_set;
  for (const auto& tree : forest.trees) {
    for (const auto& nd : tree.nodes) {
      if (nd.feature >= 0) active_set.insert(nd.feature);
    }
  }
  std::vector<int> active(active_set.begin(), active_set.end());
  const int m = static_cast<int>(active.size());
  if (m > max_active) {
    throw ExplainError("too many active features for coalition enumeration: " +
                       std::to_string(m));
  }
  const int k = forest.n_classes();
  const std::size_t n_masks = std::size_t{1} << m;

  // v[mask][c]: expected vote fraction for class c when the coalition holds
  // x's values and the complement is drawn from the background
  std::vector<double> v(n_masks * k, 0.0);
  std::vector<int> hybrid(x.size());
  for (std::size_t mask = 0; mask < n_masks; ++mask) {
    for (const auto& z : background) {
      hybrid.assign(z.begin(), z.end());
      for (int j = 0; j < m; ++j) {
        if (mask & (std::size_t{1} << j)) hybrid[active[j]] = x[active[j]];
      }
      for (const auto& tree : forest.trees) {
        v[mask * k + tree.predict(hybrid)] += 1.0;
      }
    }
  }
  const double scale =
      1.0 / (static_cast<double>(background.size()) * static_cast<double>(forest.trees.size()));
  for (auto& val : v) val *= scale;

  // Shapley weights |S|! (m-|S|-1)! / m!
  std::vector<double> weight(std::max(m, 1));
  {
    std::vector<double> fact(m + 1, 1.0);
    for (int i = 1; i <= m; ++i) fact[i] = fact[i - 1] * i;
    for (int s = 0; s < m; ++s) weight[s] = fact[s] * fact[m - s - 1] / fact[m];
  }

  ShapAttribution out;
  out.sample_id = std::move(sample_id);
  out.phi.assign(k, std::vector<double>(x.size(), 0.0));
  out.base.assign(k, 0.0);
  for (int c = 0; c < k; ++c) out.base[c] = v[0 * k + c];

  for (std::size_t mask = 0; mask < n_masks; ++mask) {
    const int size = static_cast<int>(std::popcount(mask));
    for (int j = 0; j < m; ++j) {
      const std::size_t bit = std::size_t{1} << j;
      if (mask & bit) continue;
      const double w = weight[size];
      const std::size_t with = mask | bit;
      for (int c = 0; c < k; ++c) {
        out.phi[c][active[j]] += w * (v[with * k + c] - v[mask * k + c]);
      }
    }
  }
  return out;
}

inline ShapAttribution brute_force_shapley(const Forest& forest, const FeatureVector& x,
                                           const std::vector<FeatureVector>& background,
                                           int max_active = 20, std::string sample_id = {}) {
  std::vector<std::vector<int>> bg;
  bg.reserve(background.size());
  for (const auto& b : background) bg.push_back(b.counts);
  return brute_force_shapley(forest, x.counts, bg, max_active, std::move(sample_id));
}

// ---------------------------------------------------------------------------
// Summary statistics over a sample set
// ---------------------------------------------------------------------------

struct ShapFeatureStat {
  int feature = -1;
  std::string name;
  double mean_abs_phi = 0.0;
  // Pearson correlation between phi and binary feature presence; positive
  // means presence pushes the prediction toward the class.
  double presence_direction = 0.0;
};

struct ShapSummary {
  std::vector<std::string> labels;
  std::vector<std::vector<ShapFeatureStat>> ranked;  // [class], mean |phi| descending
};

inline ShapSummary summarize(const std::vector<ShapAttribution>& attributions,
                             const std::vector<std::vector<int>>& inputs,
                             const std::vector<std::string>& labels,
                             const std::vector<std::string>& feature_names, int top_k = 0) {
  if (attributions.empty()) throw ExplainError("need at least one attribution to summarize");
  if (attributions.size() != inputs.size()) {
    throw ExplainError("attributions and inputs differ in length");
  }
  const int k = static_cast<int>(labels.size());
  const int d = static_cast<int>(attributions.front().phi.front().size());
  const double n = static_cast<double>(attributions.size());

  ShapSummary summary;
  summary.labels = labels;
  summary.ranked.resize(k);

  for (int c = 0; c < k; ++c) {
    std::vector<ShapFeatureStat> stats(d);
    for (int f = 0; f < d; ++f) {
      double sum_abs = 0.0, sum_phi = 0.0, sum_pres = 0.0;
      for (std::size_t i = 0; i < attributions.size(); ++i) {
        const double phi = attributions[i].phi[c][f];
        sum_abs += std::abs(phi);
        sum_phi += phi;
        sum_pres += inputs[i][f] > 0 ? 1.0 : 0.0;
      }
      const double mean_phi = sum_phi / n;
      const double mean_pres = sum_pres / n;
      double cov = 0.0, var_phi = 0.0, var_pres = 0.0;
      for (std::size_t i = 0; i < attributions.size(); ++i) {
        const double dp = attributions[i].phi[c][f] - mean_phi;
        const double dq = (inputs[i][f] > 0 ? 1.0 : 0.0) - mean_pres;
        cov += dp * dq;
        var_phi += dp * dp;
        var_pres += dq * dq;
      }
      ShapFeatureStat& st = stats[f];
      st.feature = f;
      if (f < static_cast<int>(feature_names.size())) st.name = feature_names[f];
      st.mean_abs_phi = sum_abs / n;
      st.presence_direction =
          var_phi > 0.0 && var_pres > 0.0 ? cov / std::sqrt(var_phi * var_pres) : 0.0;
    }
    std::sort(stats.begin(), stats.end(), [](const ShapFeatureStat& a, const ShapFeatureStat& b) {
      if (a.mean_abs_phi != b.mean_abs_phi) return a.mean_abs_phi > b.mean_abs_phi;
      return a.feature < b.feature;
    });
    if (top_k > 0 && static_cast<int>(stats.size()) > top_k) stats.resize(top_k);
    summary.ranked[c] = std::move(stats);
  }
  return summary;
}

inline nlohmann::ordered_json shap_summary_to_json(const ShapSummary& s) {
  nlohmann::ordered_json doc;
  doc["format"] = "bkit-shap-summary";
  doc["version"] = 1;
  auto& classes = doc["classes"] = nlohmann::ordered_json::array();
  for (std::size_t c = 0; c < s.labels.size(); ++c) {
    nlohmann::ordered_json rows = nlohmann::ordered_json::array();
    for (const auto& st : s.ranked[c]) {
      rows.push_back({{"feature", st.feature},
                      {"name", st.name},
                      {"mean_abs_phi", st.mean_abs_phi},
                      {"direction", st.presence_direction}});
    }
    classes.push_back({{"label", s.labels[c]}, {"ranking", std::move(rows)}});
  }
  return doc;
}

// plot-data export: plain CSV usable by any plotting tool
inline void write_shap_plot_data(const ShapSummary& s, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ExplainError("cannot write plot data file: " + path.string());
  out << "class,rank,feature_index,feature_name,mean_abs_phi,direction\n";
  for (std::size_t c = 0; c < s.labels.size(); ++c) {
    for (std::size_t r = 0; r < s.ranked[c].size(); ++r) {
      const auto& st = s.ranked[c][r];
      std::string name = st.name;
      std::string quoted = "\"";
      for (char ch : name) {
        if (ch == '"') quoted += "\"\"";
        else quoted += ch;
      }
      quoted += "\"";
      out << s.labels[c] << "," << r + 1 << "," << st.feature << "," << quoted << ","
          << st.mean_abs_phi << "," << st.presence_direction << "\n";
    }
  }
}

}  // namespace bkit
