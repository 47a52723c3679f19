#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "behaviorkit/forest.hpp"

namespace bkit {

class AnalyzeError : public std::runtime_error {
 public:
  explicit AnalyzeError(const std::string& what) : std::runtime_error(what) {}
};

// ---------------------------------------------------------------------------
// Cross-application of a trained classifier to another corpus
// ---------------------------------------------------------------------------

struct CrossApplyReport {
  std::string classifier_id;
  std::string corpus_id;
  std::vector<std::string> labels;          // predicted-label vocabulary
  std::vector<long> counts;                 // predictions per label
  std::vector<double> percentages;          // counts scaled to 100
  long total = 0;
  struct Stratum {
    std::string name;                       // true stratum (level or gender)
    std::vector<long> counts;
    std::vector<double> percentages;
    long total = 0;
  };
  std::string stratified_by;                // "", "level" or "gender"
  std::vector<Stratum> strata;
};

// Classifies every sample and aggregates the predicted-label distribution.
// When the corpus carries labels on another axis (e.g. a gender classifier
// applied to a leveled corpus) the report also breaks predictions down per
// true stratum.
inline CrossApplyReport cross_apply(const Forest& forest, const Corpus& corpus,
                                    const std::vector<std::string>& vocabulary,
                                    std::string classifier_id = "classifier",
                                    std::string corpus_id = "corpus") {
  if (corpus.samples.empty()) throw AnalyzeError("corpus is empty");
  if (!forest.vocabulary.empty() && forest.vocabulary != vocabulary) {
    throw AnalyzeError("forest and corpus use different feature vocabularies");
  }
  const int k = forest.n_classes();

  CrossApplyReport report;
  report.classifier_id = std::move(classifier_id);
  report.corpus_id = std::move(corpus_id);
  report.labels = forest.labels;
  report.counts.assign(k, 0);

  const bool has_level = corpus.samples.front().level.has_value();
  const bool has_gender = corpus.samples.front().gender.has_value();
  const bool level_strata = has_level;
  report.stratified_by = level_strata ? "level" : (has_gender ? "gender" : "");

  std::map<std::string, std::vector<long>> strata;
  for (const auto& s : corpus.samples) {
    if (s.features.counts.empty()) throw AnalyzeError("corpus is not featurized");
    const int pred = predict(forest, s.features).label;
    ++report.counts[pred];
    ++report.total;
    if (level_strata && s.level) {
      auto& row = strata[to_string(*s.level)];
      if (row.empty()) row.assign(k, 0);
      ++row[pred];
    } else if (!level_strata && s.gender) {
      auto& row = strata[to_string(*s.gender)];
      if (row.empty()) row.assign(k, 0);
      ++row[pred];
    }
  }

  auto to_percent = [](const std::vector<long>& counts, long total) {
    std::vector<double> out(counts.size(), 0.0);
    for (std::size_t i = 0; i < counts.size(); ++i) {
      out[i] = total > 0 ? 100.0 * static_cast<double>(counts[i]) / static_cast<double>(total) : 0.0;
    }
    return out;
  };
  report.percentages = to_percent(report.counts, report.total);

  // fixed presentation order for strata
  const std::vector<std::string> order = level_strata
                                             ? std::vector<std::string>{"Low", "Medium", "High"}
                                             : std::vector<std::string>{"Male", "Female"};
  for (const auto& name : order) {
    auto it = strata.find(name);
    if (it == strata.end()) continue;
    CrossApplyReport::Stratum st;
    st.name = name;
    st.counts = it->second;
    for (long c : st.counts) st.total += c;
    st.percentages = to_percent(st.counts, st.total);
    report.strata.push_back(std::move(st));
  }
  return report;
}

inline nlohmann::ordered_json cross_apply_to_json(const CrossApplyReport& r) {
  nlohmann::ordered_json doc;
  doc["format"] = "bkit-cross-apply";
  doc["version"] = 1;
  doc["classifier"] = r.classifier_id;
  doc["corpus"] = r.corpus_id;
  doc["labels"] = r.labels;
  doc["counts"] = r.counts;
  doc["percentages"] = r.percentages;
  doc["total"] = r.total;
  doc["stratified_by"] = r.stratified_by;
  auto& strata = doc["strata"] = nlohmann::ordered_json::array();
  for (const auto& st : r.strata) {
    strata.push_back({{"stratum", st.name},
                      {"counts", st.counts},
                      {"percentages", st.percentages},
                      {"total", st.total}});
  }
  return doc;
}

inline std::string render_cross_apply(const CrossApplyReport& r) {
  std::ostringstream out;
  out << "classifier " << r.classifier_id << " applied to " << r.corpus_id << " (" << r.total
      << " samples)\n";
  char buf[64];
  for (std::size_t i = 0; i < r.labels.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%6.2f%%", r.percentages[i]);
    out << "  " << r.labels[i] << ": " << buf << " (" << r.counts[i] << ")\n";
  }
  for (const auto& st : r.strata) {
    out << "  [" << r.stratified_by << " = " << st.name << ", n = " << st.total << "]";
    for (std::size_t i = 0; i < r.labels.size(); ++i) {
      std::snprintf(buf, sizeof buf, " %s %.2f%%", r.labels[i].c_str(), st.percentages[i]);
      out << buf;
    }
    out << "\n";
  }
  return out.str();
}

// ---------------------------------------------------------------------------
// Binary feature co-occurrence (phi coefficient)
// ---------------------------------------------------------------------------

struct CooccurrenceReport {
  std::vector<std::string> feature_names;
  long n_samples = 0;
  long min_count = 0;
  std::vector<std::vector<double>> phi;   // symmetric, diagonal zero
  std::vector<std::vector<long>> joint;   // joint presence counts
  struct Pair {
    int a = -1, b = -1;
    double phi = 0.0;
    long joint = 0;
  };
  std::vector<Pair> ranked;               // |phi| descending, joint >= min_count
};

// Binarizes counts to presence and computes the phi coefficient for each
// feature pair: phi = (n*n11 - n1a*n1b) / sqrt(n1a*n0a*n1b*n0b). Pairs with a
// degenerate margin are reported as zero and excluded from the ranking.
inline CooccurrenceReport cooccurrence(const Corpus& corpus,
                                       const std::vector<std::string>& feature_names,
                                       long min_count = 1) {
  if (corpus.samples.empty()) throw AnalyzeError("corpus is empty");
  const int d = static_cast<int>(feature_names.size());
  const long n = static_cast<long>(corpus.samples.size());

  std::vector<std::vector<char>> presence(corpus.samples.size(), std::vector<char>(d, 0));
  std::vector<long> ones(d, 0);
  for (std::size_t i = 0; i < corpus.samples.size(); ++i) {
    const auto& counts = corpus.samples[i].features.counts;
    if (static_cast<int>(counts.size()) != d) throw AnalyzeError("corpus is not featurized");
    for (int f = 0; f < d; ++f) {
      if (counts[f] > 0) {
        presence[i][f] = 1;
        ++ones[f];
      }
    }
  }

  CooccurrenceReport report;
  report.feature_names = feature_names;
  report.n_samples = n;
  report.min_count = min_count;
  report.phi.assign(d, std::vector<double>(d, 0.0));
  report.joint.assign(d, std::vector<long>(d, 0));

  for (int a = 0; a < d; ++a) {
    if (ones[a] == 0) continue;
    for (int b = a + 1; b < d; ++b) {
      if (ones[b] == 0) continue;
      long n11 = 0;
      for (std::size_t i = 0; i < presence.size(); ++i) {
        if (presence[i][a] && presence[i][b]) ++n11;
      }
      report.joint[a][b] = report.joint[b][a] = n11;
      const double margin = static_cast<double>(ones[a]) * (n - ones[a]) *
                            static_cast<double>(ones[b]) * (n - ones[b]);
      if (margin <= 0.0) continue;
      const double phi =
          (static_cast<double>(n) * n11 - static_cast<double>(ones[a]) * ones[b]) /
          std::sqrt(margin);
      report.phi[a][b] = report.phi[b][a] = phi;
      if (n11 >= min_count) {
        report.ranked.push_back({a, b, phi, n11});
      }
    }
  }
  std::sort(report.ranked.begin(), report.ranked.end(),
            [](const CooccurrenceReport::Pair& x, const CooccurrenceReport::Pair& y) {
              const double ax = std::abs(x.phi), ay = std::abs(y.phi);
              if (ax != ay) return ax > ay;
              if (x.a != y.a) return x.a < y.a;
              return x.b < y.b;
            });
  return report;
}

inline nlohmann::ordered_json cooccurrence_to_json(const CooccurrenceReport& r, int top_k = 0) {
  nlohmann::ordered_json doc;
  doc["format"] = "bkit-cooccurrence";
  doc["version"] = 1;
  doc["n_samples"] = r.n_samples;
  doc["min_count"] = r.min_count;
  auto& pairs = doc["pairs"] = nlohmann::ordered_json::array();
  const std::size_t limit =
      top_k > 0 ? std::min<std::size_t>(top_k, r.ranked.size()) : r.ranked.size();
  for (std::size_t i = 0; i < limit; ++i) {
    const auto& p = r.ranked[i];
    pairs.push_back({{"a", r.feature_names[p.a]},
                     {"b", r.feature_names[p.b]},
                     {"phi", p.phi},
                     {"joint", p.joint}});
  }
  return doc;
}

inline std::string render_cooccurrence(const CooccurrenceReport& r, int top_k = 20) {
  std::ostringstream out;
  out << "top co-occurring tag pairs (n = " << r.n_samples << ", min joint count = "
      << r.min_count << ")\n";
  const std::size_t limit = std::min<std::size_t>(top_k, r.ranked.size());
  char buf[32];
  for (std::size_t i = 0; i < limit; ++i) {
    const auto& p = r.ranked[i];
    std::snprintf(buf, sizeof buf, "%+.4f", p.phi);
    out << "  " << i + 1 << ". " << r.feature_names[p.a] << " + " << r.feature_names[p.b]
        << "  phi " << buf << "  joint " << p.joint << "\n";
  }
  return out.str();
}

}  // namespace bkit
