#include <catch2/catch_amalgamated.hpp>

#include "behaviorkit/analyze.hpp"
#include "behaviorkit/synth.hpp"

using namespace bkit;

namespace {

const BehaviorLexicon& lex() {
  static BehaviorLexicon instance = BehaviorLexicon::standard();
  return instance;
}

// corpus built directly from feature vectors (raw strings unused here)
Corpus corpus_from_features(const std::vector<std::vector<int>>& X,
                            const std::vector<std::optional<Level>>& levels = {}) {
  Corpus corpus;
  corpus.metadata.trait = levels.empty() ? Trait::None : Trait::Ability;
  for (std::size_t i = 0; i < X.size(); ++i) {
    LabeledSample s;
    s.trait = corpus.metadata.trait;
    if (!levels.empty()) s.level = levels[i];
    s.turn_id = "t" + std::to_string(i);
    s.features = FeatureVector(X[i]);
    corpus.samples.push_back(std::move(s));
  }
  return corpus;
}

}  // namespace

TEST_CASE("cross-apply percentages sum to 100 and conserve samples") {
  auto profile = default_profile(lex(), Trait::Ability);
  auto small = preset(PresetName::NeutralAbility);
  small.size = 150;
  auto corpus = generate_dataset(small, offline_generator(profile, lex()), 3, default_intents(),
                                 "offline-synth");
  featurize_corpus(corpus, lex());
  auto ds = make_dataset(corpus, Target::Level);
  ForestConfig cfg;
  cfg.n_trees = 20;
  cfg.seed = 5;
  auto forest = fit(ds, Target::Level, cfg, lex().vocabulary_names());

  auto report = cross_apply(forest, corpus, lex().vocabulary_names(), "ability", "self");
  double sum = 0;
  long count = 0;
  for (double p : report.percentages) sum += p;
  for (long c : report.counts) count += c;
  CHECK(std::fabs(sum - 100.0) <= 0.01);
  CHECK(count == report.total);
  CHECK(report.total == 150);
  CHECK(report.stratified_by == "level");
  REQUIRE(report.strata.size() == 3);
  long strata_total = 0;
  for (const auto& st : report.strata) {
    strata_total += st.total;
    double ssum = 0;
    for (double p : st.percentages) ssum += p;
    CHECK(std::fabs(ssum - 100.0) <= 0.01);
  }
  CHECK(strata_total == report.total);
}

TEST_CASE("self-application is consistent with near-perfect separation") {
  auto profile = default_profile(lex(), Trait::Ability);
  auto small = preset(PresetName::NeutralAbility);
  small.size = 120;
  auto corpus = generate_dataset(small, offline_generator(profile, lex()), 13, default_intents(),
                                 "offline-synth");
  featurize_corpus(corpus, lex());
  auto ds = make_dataset(corpus, Target::Level);
  ForestConfig cfg;
  cfg.n_trees = 20;
  cfg.seed = 4;
  auto forest = fit(ds, Target::Level, cfg, lex().vocabulary_names());
  auto report = cross_apply(forest, corpus, lex().vocabulary_names());
  // every stratum should classify overwhelmingly as itself
  for (const auto& st : report.strata) {
    int self_idx = st.name == "Low" ? 0 : st.name == "Medium" ? 1 : 2;
    CHECK(st.percentages[self_idx] >= 99.0);
  }
}

TEST_CASE("vocabulary mismatch is an error") {
  auto X = std::vector<std::vector<int>>{std::vector<int>(94, 0)};
  auto corpus = corpus_from_features(X);
  Forest forest;
  forest.labels = {"Male", "Female"};
  forest.vocabulary = {"not", "the", "same"};
  forest.trees.emplace_back();
  forest.trees[0].nodes.emplace_back();
  forest.trees[0].nodes[0].counts = {1, 0};
  CHECK_THROWS_AS(cross_apply(forest, corpus, lex().vocabulary_names()), AnalyzeError);
}

TEST_CASE("perfect co-presence gives phi exactly one and first rank") {
  const int d = 94;
  auto hesitant = *lex().resolve("hesitant", Channel::Audio);
  auto whisper = *lex().resolve("whisper", Channel::Audio);
  Rng rng(71);
  std::vector<std::vector<int>> X;
  for (int i = 0; i < 400; ++i) {
    std::vector<int> x(d, 0);
    for (int j = 0; j < 4; ++j) x[rng.index(d)] += 1;
    x[hesitant] = x[whisper] = (i % 3 == 0) ? 1 : 0;
    X.push_back(std::move(x));
  }
  auto corpus = corpus_from_features(X);
  auto report = cooccurrence(corpus, lex().vocabulary_names(), 5);
  CHECK(report.phi[hesitant][whisper] == 1.0);
  REQUIRE_FALSE(report.ranked.empty());
  CHECK(((report.ranked[0].a == std::min(hesitant, whisper)) &&
         (report.ranked[0].b == std::max(hesitant, whisper))));
  CHECK(report.ranked[0].phi == 1.0);
}

TEST_CASE("independent tags stay within the sampling bound") {
  const int d = 20;
  Rng rng(2025);
  std::vector<std::vector<int>> X;
  const int n = 2000;
  for (int i = 0; i < n; ++i) {
    std::vector<int> x(d, 0);
    for (int f = 0; f < d; ++f) x[f] = rng.chance(0.3) ? 1 : 0;
    X.push_back(std::move(x));
  }
  auto corpus = corpus_from_features(X);
  std::vector<std::string> names(d);
  for (int f = 0; f < d; ++f) names[f] = "tag" + std::to_string(f);
  auto report = cooccurrence(corpus, names, 1);
  const double bound = 3.0 / std::sqrt(static_cast<double>(n));
  int total = 0, within = 0;
  for (int a = 0; a < d; ++a) {
    for (int b = a + 1; b < d; ++b) {
      ++total;
      if (std::fabs(report.phi[a][b]) <= bound) ++within;
    }
  }
  CHECK(static_cast<double>(within) / total >= 0.95);
}

TEST_CASE("phi matrix is symmetric, bounded, with an empty diagonal") {
  auto profile = default_profile(lex(), Trait::Ability);
  auto small = preset(PresetName::NeutralAbility);
  small.size = 200;
  auto corpus = generate_dataset(small, offline_generator(profile, lex()), 6, default_intents(),
                                 "offline-synth");
  featurize_corpus(corpus, lex());
  auto report = cooccurrence(corpus, lex().vocabulary_names(), 3);
  for (int a = 0; a < 94; ++a) {
    CHECK(report.phi[a][a] == 0.0);
    for (int b = 0; b < 94; ++b) {
      CHECK(report.phi[a][b] == report.phi[b][a]);
      CHECK(std::fabs(report.phi[a][b]) <= 1.0 + 1e-12);
    }
  }
  for (const auto& p : report.ranked) {
    CHECK(p.joint >= report.min_count);
    CHECK(p.a < p.b);
  }
  // ranking sorted by |phi| descending
  for (std::size_t i = 1; i < report.ranked.size(); ++i) {
    CHECK(std::fabs(report.ranked[i - 1].phi) >= std::fabs(report.ranked[i].phi) - 1e-15);
  }
}

TEST_CASE("profile-paired tags rank at the top on synthetic corpora") {
  auto profile = default_profile(lex(), Trait::Ability);
  auto small = preset(PresetName::NeutralAbility);
  small.size = 600;
  auto corpus = generate_dataset(small, offline_generator(profile, lex()), 21, default_intents(),
                                 "offline-synth");
  featurize_corpus(corpus, lex());
  auto report = cooccurrence(corpus, lex().vocabulary_names(), 5);
  auto hesitant = *lex().resolve("hesitant", Channel::Audio);
  auto whisper = *lex().resolve("whisper", Channel::Audio);
  bool in_top3 = false;
  for (std::size_t i = 0; i < std::min<std::size_t>(3, report.ranked.size()); ++i) {
    if (report.ranked[i].a == std::min(hesitant, whisper) &&
        report.ranked[i].b == std::max(hesitant, whisper)) {
      in_top3 = true;
    }
  }
  CHECK(in_top3);
}

TEST_CASE("min_count filters sparse pairs from the ranking") {
  const int d = 94;
  std::vector<std::vector<int>> X(50, std::vector<int>(d, 0));
  // one co-occurrence only
  X[0][3] = X[0][7] = 1;
  // a frequent pair
  for (int i = 0; i < 30; ++i) X[i][10] = X[i][12] = 1;
  auto corpus = corpus_from_features(X);
  auto report = cooccurrence(corpus, lex().vocabulary_names(), 5);
  for (const auto& p : report.ranked) {
    CHECK(!(p.a == 3 && p.b == 7));
  }
}
