#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "behaviorkit/distributions.hpp"
#include "behaviorkit/featurize.hpp"

namespace bkit {

class StatsError : public std::runtime_error {
 public:
  explicit StatsError(const std::string& what) : std::runtime_error(what) {}
};

// One questionnaire answer on the 5-point scale, already mapped to -2..2.
struct RatingRecord {
  std::string participant;
  Level condition;
  std::string item;
  int response;
};

// Delimiter-separated ratings with a header row: participant, condition,
// item, response. Comma, semicolon and tab delimiters are accepted.
inline std::vector<RatingRecord> load_ratings(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw StatsError("cannot open ratings file: " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw StatsError("ratings file is empty: " + path.string());

  char delim = ',';
  if (line.find('\t') != std::string::npos) delim = '\t';
  else if (line.find(';') != std::string::npos) delim = ';';

  auto split = [&](const std::string& s) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream ss(s);
    while (std::getline(ss, field, delim)) {
      while (!field.empty() && (field.back() == '\r' || field.back() == ' ')) field.pop_back();
      std::size_t b = 0;
      while (b < field.size() && field[b] == ' ') ++b;
      out.push_back(field.substr(b));
    }
    return out;
  };

  const auto header = split(line);
  if (header.size() < 4 || header[0] != "participant" || header[1] != "condition" ||
      header[2] != "item" || header[3] != "response") {
    throw StatsError("ratings header must be: participant, condition, item, response");
  }

  std::vector<RatingRecord> records;
  std::set<std::tuple<std::string, int, std::string>> seen;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    auto fields = split(line);
    if (fields.size() < 4) {
      throw StatsError("line " + std::to_string(lineno) + ": expected 4 fields");
    }
    auto condition = parse_level(fields[1]);
    if (!condition) {
      throw StatsError("line " + std::to_string(lineno) + ": condition '" + fields[1] +
                       "' is not one of Low/Medium/High");
    }
    int response = 0;
    try {
      response = std::stoi(fields[3]);
    } catch (const std::exception&) {
      throw StatsError("line " + std::to_string(lineno) + ": response is not an integer");
    }
    if (response < -2 || response > 2) {
      throw StatsError("line " + std::to_string(lineno) + ": response " + fields[3] +
                       " outside the -2..2 scale");
    }
    if (!seen.emplace(fields[0], static_cast<int>(*condition), fields[2]).second) {
      throw StatsError("line " + std::to_string(lineno) + ": duplicate (participant, condition, item)");
    }
    records.push_back({fields[0], *condition, fields[2], response});
  }
  return records;
}

// ---------------------------------------------------------------------------
// Score table
// ---------------------------------------------------------------------------

struct ScoreTable {
  std::vector<std::string> items;                       // presentation order of first appearance
  std::map<std::string, std::array<double, 3>> means;   // item -> mean per condition
  std::map<std::string, std::array<long, 3>> counts;
  // scale aggregates: mean of member item means per condition
  std::vector<std::pair<std::string, std::array<double, 3>>> aggregates;
};

// Arithmetic means per (item, condition). Items named with an "ability" or
// "benevolence" prefix roll up into the matching scale aggregate row.
inline ScoreTable score_table(const std::vector<RatingRecord>& records) {
  if (records.empty()) throw StatsError("no rating records");
  ScoreTable table;
  std::map<std::string, std::array<double, 3>> sums;
  for (const auto& r : records) {
    if (!sums.count(r.item)) {
      table.items.push_back(r.item);
      sums[r.item] = {0.0, 0.0, 0.0};
      table.counts[r.item] = {0, 0, 0};
    }
    sums[r.item][static_cast<int>(r.condition)] += r.response;
    ++table.counts[r.item][static_cast<int>(r.condition)];
  }
  for (const auto& item : table.items) {
    std::array<double, 3> mean{};
    for (int c = 0; c < 3; ++c) {
      if (table.counts[item][c] == 0) {
        throw StatsError("item '" + item + "' has no responses in condition " +
                         to_string(static_cast<Level>(c)));
      }
      mean[c] = sums[item][c] / static_cast<double>(table.counts[item][c]);
    }
    table.means[item] = mean;
  }

  auto lower = [](std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
  };
  for (const char* scale : {"ability", "benevolence"}) {
    std::array<double, 3> agg{};
    int members = 0;
    for (const auto& item : table.items) {
      if (lower(item).rfind(scale, 0) == 0) {
        for (int c = 0; c < 3; ++c) agg[c] += table.means[item][c];
        ++members;
      }
    }
    if (members > 0) {
      for (int c = 0; c < 3; ++c) agg[c] /= members;
      table.aggregates.emplace_back(std::string("Mean ") + (scale[0] == 'a' ? "Ability" : "Benevolence"),
                                    agg);
    }
  }
  return table;
}

inline std::string render_score_table(const ScoreTable& table) {
  std::ostringstream out;
  std::size_t width = 24;
  for (const auto& item : table.items) width = std::max(width, item.size() + 2);
  for (const auto& [name, agg] : table.aggregates) width = std::max(width, name.size() + 2);

  auto pad = [&](const std::string& s) {
    std::string p = s;
    p.resize(width, ' ');
    return p;
  };
  out << pad("Instructed behavior") << "     Low  Medium    High\n";
  char buf[16];
  auto row = [&](const std::string& name, const std::array<double, 3>& vals) {
    out << pad(name);
    for (int c = 0; c < 3; ++c) {
      std::snprintf(buf, sizeof buf, "%8.2f", vals[c]);
      out << buf;
    }
    out << "\n";
  };
  for (const auto& item : table.items) row(item, table.means.at(item));
  for (const auto& [name, agg] : table.aggregates) row(name, agg);
  return out.str();
}

// ---------------------------------------------------------------------------
// Repeated-measures ANOVA with Mauchly's sphericity test
// ---------------------------------------------------------------------------

struct PairwiseComparison {
  int a = 0, b = 0;          // condition indices
  double mean_diff = 0.0;    // mean(a) - mean(b)
  double t_stat = 0.0;
  double raw_p = 1.0;
  double adjusted_p = 1.0;   // Bonferroni: min(1, raw * comparisons)
};

struct RmAnovaResult {
  bool degenerate = false;
  std::string note;
  int n_subjects = 0;
  int k_conditions = 0;
  std::vector<double> condition_means;
  double f_stat = 0.0;
  int df_num = 0, df_den = 0;
  double p_value = 1.0;
  double mauchly_w = 1.0;
  double mauchly_chi2 = 0.0;
  int mauchly_df = 0;
  double mauchly_p = 1.0;
  std::string mauchly_note;
  double gg_epsilon = 1.0;   // computed for transparency, not applied
  std::vector<PairwiseComparison> pairwise;
};

namespace stats_detail {

// determinant by Gaussian elimination with partial pivoting; matrices here
// are (k-1) x (k-1) with tiny k
inline double determinant(std::vector<std::vector<double>> m) {
  const std::size_t n = m.size();
  double det = 1.0;
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t pivot = col;
    for (std::size_t r = col + 1; r < n; ++r) {
      if (std::fabs(m[r][col]) > std::fabs(m[pivot][col])) pivot = r;
    }
    if (m[pivot][col] == 0.0) return 0.0;
    if (pivot != col) {
      std::swap(m[pivot], m[col]);
      det = -det;
    }
    det *= m[col][col];
    for (std::size_t r = col + 1; r < n; ++r) {
      const double factor = m[r][col] / m[col][col];
      for (std::size_t c = col; c < n; ++c) m[r][c] -= factor * m[col][c];
    }
  }
  return det;
}

// orthonormal Helmert contrasts: k-1 rows orthogonal to the unit vector
inline std::vector<std::vector<double>> helmert_contrasts(int k) {
  std::vector<std::vector<double>> c(k - 1, std::vector<double>(k, 0.0));
  for (int i = 1; i < k; ++i) {
    const double norm = std::sqrt(static_cast<double>(i) * (i + 1));
    for (int j = 0; j < i; ++j) c[i - 1][j] = 1.0 / norm;
    c[i - 1][i] = -static_cast<double>(i) / norm;
  }
  return c;
}

}  // namespace stats_detail

// Within-subjects one-way ANOVA over a complete subjects x conditions matrix
// of condition means; F with df (k-1, (k-1)(n-1)), Mauchly's W via the
// covariance of orthonormalized contrasts, Bonferroni-corrected paired
// comparisons.
inline RmAnovaResult rm_anova(const std::vector<std::vector<double>>& data) {
  const int n = static_cast<int>(data.size());
  if (n == 0) throw StatsError("no subjects");
  const int k = static_cast<int>(data.front().size());
  if (k < 2) throw StatsError("need at least two conditions");
  for (const auto& row : data) {
    if (static_cast<int>(row.size()) != k) {
      throw StatsError("incomplete design: every subject needs every condition");
    }
  }
  if (n < k) throw StatsError("need at least as many subjects as conditions");

  RmAnovaResult res;
  res.n_subjects = n;
  res.k_conditions = k;

  double grand = 0.0;
  std::vector<double> cond_mean(k, 0.0), subj_mean(n, 0.0);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < k; ++j) {
      grand += data[i][j];
      cond_mean[j] += data[i][j];
      subj_mean[i] += data[i][j];
    }
  }
  grand /= n * k;
  for (int j = 0; j < k; ++j) cond_mean[j] /= n;
  for (int i = 0; i < n; ++i) subj_mean[i] /= k;
  res.condition_means = cond_mean;

  double ss_cond = 0.0, ss_subj = 0.0, ss_total = 0.0;
  for (int j = 0; j < k; ++j) ss_cond += (cond_mean[j] - grand) * (cond_mean[j] - grand);
  ss_cond *= n;
  for (int i = 0; i < n; ++i) ss_subj += (subj_mean[i] - grand) * (subj_mean[i] - grand);
  ss_subj *= k;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < k; ++j) ss_total += (data[i][j] - grand) * (data[i][j] - grand);
  }
  const double ss_err = ss_total - ss_cond - ss_subj;

  res.df_num = k - 1;
  res.df_den = (k - 1) * (n - 1);
  const double ms_cond = ss_cond / res.df_num;
  const double ms_err = ss_err / res.df_den;

  if (ms_err <= 1e-12 * std::max(1.0, std::fabs(ss_total))) {
    res.degenerate = true;
    res.note = ss_cond <= 1e-12 ? "zero variance everywhere: no effect to test"
                                : "zero residual variance: F undefined";
    return res;
  }
  res.f_stat = ms_cond / ms_err;
  res.p_value = f_sf(res.f_stat, res.df_num, res.df_den);

  // Mauchly's W over orthonormal contrast covariances
  res.mauchly_df = k * (k - 1) / 2 - 1;
  if (k == 2) {
    res.mauchly_w = 1.0;
    res.mauchly_chi2 = 0.0;
    res.mauchly_p = 1.0;
    res.gg_epsilon = 1.0;
    res.mauchly_note = "two conditions: a single difference variable, sphericity holds trivially";
  } else {
    const auto contrasts = stats_detail::helmert_contrasts(k);
    const int m = k - 1;
    std::vector<std::vector<double>> y(n, std::vector<double>(m, 0.0));
    for (int i = 0; i < n; ++i) {
      for (int r = 0; r < m; ++r) {
        double acc = 0.0;
        for (int j = 0; j < k; ++j) acc += contrasts[r][j] * data[i][j];
        y[i][r] = acc;
      }
    }
    std::vector<double> ymean(m, 0.0);
    for (int i = 0; i < n; ++i) {
      for (int r = 0; r < m; ++r) ymean[r] += y[i][r];
    }
    for (int r = 0; r < m; ++r) ymean[r] /= n;
    std::vector<std::vector<double>> s(m, std::vector<double>(m, 0.0));
    for (int i = 0; i < n; ++i) {
      for (int r = 0; r < m; ++r) {
        for (int c = 0; c < m; ++c) {
          s[r][c] += (y[i][r] - ymean[r]) * (y[i][c] - ymean[c]);
        }
      }
    }
    for (int r = 0; r < m; ++r) {
      for (int c = 0; c < m; ++c) s[r][c] /= n - 1;
    }

    double trace = 0.0, trace_sq = 0.0;
    for (int r = 0; r < m; ++r) trace += s[r][r];
    for (int r = 0; r < m; ++r) {
      for (int c = 0; c < m; ++c) trace_sq += s[r][c] * s[c][r];
    }
    const double det = stats_detail::determinant(s);
    const double denom = std::pow(trace / m, m);
    res.mauchly_w = denom > 0.0 ? std::max(det / denom, 0.0) : 1.0;
    res.gg_epsilon = trace_sq > 0.0 ? trace * trace / (m * trace_sq) : 1.0;

    if (res.mauchly_w <= 0.0) {
      res.mauchly_note = "singular contrast covariance: W degenerate";
      res.mauchly_w = std::numeric_limits<double>::min();
    }
    const double correction =
        1.0 - (2.0 * m * m + m + 2.0) / (6.0 * m * static_cast<double>(n - 1));
    res.mauchly_chi2 = -(n - 1) * correction * std::log(res.mauchly_w);
    res.mauchly_p = chi2_sf(res.mauchly_chi2, res.mauchly_df);
  }

  // Bonferroni-corrected paired t tests
  const int comparisons = k * (k - 1) / 2;
  for (int a = 0; a < k; ++a) {
    for (int b = a + 1; b < k; ++b) {
      PairwiseComparison cmp;
      cmp.a = a;
      cmp.b = b;
      double mean = 0.0;
      for (int i = 0; i < n; ++i) mean += data[i][a] - data[i][b];
      mean /= n;
      double var = 0.0;
      for (int i = 0; i < n; ++i) {
        const double d = data[i][a] - data[i][b] - mean;
        var += d * d;
      }
      var /= n - 1;
      cmp.mean_diff = mean;
      if (var <= 0.0) {
        cmp.t_stat = mean == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
        cmp.raw_p = mean == 0.0 ? 1.0 : 0.0;
      } else {
        cmp.t_stat = mean / std::sqrt(var / n);
        cmp.raw_p = t_sf_two_sided(cmp.t_stat, n - 1);
      }
      cmp.adjusted_p = std::min(1.0, cmp.raw_p * comparisons);
      res.pairwise.push_back(cmp);
    }
  }
  return res;
}

// Per-subject condition means over a chosen set of items (empty = all items).
// Every subject must cover every condition or the design is incomplete.
inline std::vector<std::vector<double>> subject_condition_matrix(
    const std::vector<RatingRecord>& records, const std::set<std::string>& items = {}) {
  std::map<std::string, std::array<std::pair<double, long>, 3>> acc;  // participant -> (sum, n)
  for (const auto& r : records) {
    if (!items.empty() && !items.count(r.item)) continue;
    auto& cell = acc[r.participant][static_cast<int>(r.condition)];
    cell.first += r.response;
    ++cell.second;
  }
  if (acc.empty()) throw StatsError("no records match the requested items");
  std::vector<std::vector<double>> matrix;
  for (const auto& [participant, cells] : acc) {
    std::vector<double> row(3, 0.0);
    for (int c = 0; c < 3; ++c) {
      if (cells[c].second == 0) {
        throw StatsError("incomplete design: participant '" + participant +
                         "' has no responses in condition " + to_string(static_cast<Level>(c)));
      }
      row[c] = cells[c].first / cells[c].second;
    }
    matrix.push_back(std::move(row));
  }
  return matrix;
}

// journal-style p formatting: "p < .001" below the reporting floor, else "p = .xxx"
inline std::string format_p(double p) {
  if (p < 0.001) return "p < .001";
  char buf[16];
  std::snprintf(buf, sizeof buf, "%.3f", p);
  std::string s = buf;
  if (s.size() > 1 && s[0] == '0') s.erase(0, 1);
  return "p = " + s;
}

inline std::string render_rm_anova(const RmAnovaResult& r,
                                   const std::vector<std::string>& condition_names = {"Low", "Medium",
                                                                                      "High"}) {
  std::ostringstream out;
  if (r.degenerate) {
    out << "repeated-measures ANOVA degenerate: " << r.note << "\n";
    return out.str();
  }
  char buf[160];
  if (r.k_conditions > 2) {
    std::snprintf(buf, sizeof buf, "Mauchly's test: W = %.4f, chi2(%d) = %.2f, %s%s\n",
                  r.mauchly_w, r.mauchly_df, r.mauchly_chi2, format_p(r.mauchly_p).c_str(),
                  r.mauchly_p >= 0.05 ? " (sphericity assumption met)" : "");
    out << buf;
    std::snprintf(buf, sizeof buf, "Greenhouse-Geisser epsilon = %.4f (shown, not applied)\n",
                  r.gg_epsilon);
    out << buf;
  } else if (!r.mauchly_note.empty()) {
    out << "Mauchly's test: " << r.mauchly_note << "\n";
  }
  std::snprintf(buf, sizeof buf, "F(%d,%d) = %.2f, %s\n", r.df_num, r.df_den, r.f_stat,
                format_p(r.p_value).c_str());
  out << buf;
  out << "condition means:";
  for (int j = 0; j < r.k_conditions; ++j) {
    const std::string name =
        j < static_cast<int>(condition_names.size()) ? condition_names[j] : std::to_string(j);
    std::snprintf(buf, sizeof buf, " %s %.3f", name.c_str(), r.condition_means[j]);
    out << buf;
  }
  out << "\npairwise (Bonferroni over " << r.pairwise.size() << " comparisons):\n";
  for (const auto& cmp : r.pairwise) {
    const std::string an =
        cmp.a < static_cast<int>(condition_names.size()) ? condition_names[cmp.a] : std::to_string(cmp.a);
    const std::string bn =
        cmp.b < static_cast<int>(condition_names.size()) ? condition_names[cmp.b] : std::to_string(cmp.b);
    std::snprintf(buf, sizeof buf, "  %s vs %s: diff = %+.3f, t = %.3f, %s\n", an.c_str(),
                  bn.c_str(), cmp.mean_diff, cmp.t_stat,
                  format_p(cmp.adjusted_p).c_str());
    out << buf;
  }
  return out.str();
}

inline nlohmann::ordered_json rm_anova_to_json(const RmAnovaResult& r) {
  nlohmann::ordered_json doc;
  doc["format"] = "bkit-rm-anova";
  doc["version"] = 1;
  doc["degenerate"] = r.degenerate;
  doc["note"] = r.note;
  doc["n_subjects"] = r.n_subjects;
  doc["k_conditions"] = r.k_conditions;
  doc["condition_means"] = r.condition_means;
  doc["F"] = r.f_stat;
  doc["df"] = {r.df_num, r.df_den};
  doc["p"] = r.p_value;
  doc["mauchly"] = {{"W", r.mauchly_w},
                    {"chi2", r.mauchly_chi2},
                    {"df", r.mauchly_df},
                    {"p", r.mauchly_p},
                    {"note", r.mauchly_note}};
  doc["gg_epsilon"] = r.gg_epsilon;
  auto& pw = doc["pairwise"] = nlohmann::ordered_json::array();
  for (const auto& cmp : r.pairwise) {
    pw.push_back({{"a", cmp.a},
                  {"b", cmp.b},
                  {"mean_diff", cmp.mean_diff},
                  {"t", cmp.t_stat},
                  {"raw_p", cmp.raw_p},
                  {"bonferroni_p", cmp.adjusted_p}});
  }
  return doc;
}

}  // namespace bkit
