#include <catch2/catch_amalgamated.hpp>

#include <filesystem>

#include "behaviorkit/forest.hpp"
#include "behaviorkit/synth.hpp"

using namespace bkit;

namespace {

const BehaviorLexicon& lex() {
  static BehaviorLexicon instance = BehaviorLexicon::standard();
  return instance;
}

// tiny synthetic dataset: label is a deterministic function of one feature
Dataset one_feature_dataset(int n, int feature, int d = 94) {
  Dataset ds;
  ds.labels = {"Low", "Medium", "High"};
  ds.n_features = d;
  for (int i = 0; i < n; ++i) {
    std::vector<int> x(d, 0);
    const int cls = i % 3;
    x[feature] = cls;  // 0, 1 or 2 occurrences decide the class
    ds.X.push_back(std::move(x));
    ds.y.push_back(cls);
  }
  return ds;
}

}  // namespace

TEST_CASE("gini impurity hand values") {
  CHECK(gini_impurity({5, 5}) == Catch::Approx(0.5).epsilon(0));
  CHECK(gini_impurity({1, 0}) == 0.0);
  CHECK(gini_impurity({0, 0}) == 0.0);
  CHECK(gini_impurity({1, 1, 2}) == Catch::Approx(0.625).epsilon(0));
  CHECK(gini_impurity({2, 2, 2}) == Catch::Approx(2.0 / 3.0));
}

TEST_CASE("separable-by-one-feature data trains to perfect training accuracy") {
  auto ds = one_feature_dataset(200, 17);
  ForestConfig cfg;
  cfg.n_trees = 20;
  cfg.seed = 1;
  auto forest = fit(ds, Target::Level, cfg);
  for (std::size_t i = 0; i < ds.X.size(); ++i) {
    CHECK(predict(forest, ds.X[i]).label == ds.y[i]);
  }
}

TEST_CASE("degenerate training inputs are rejected") {
  Dataset empty;
  empty.labels = {"Low", "Medium", "High"};
  CHECK_THROWS_AS(fit(empty, Target::Level, {}), ForestError);

  Dataset single;
  single.labels = {"Low", "Medium", "High"};
  single.n_features = 4;
  for (int i = 0; i < 10; ++i) {
    single.X.push_back({i, 0, 0, 0});
    single.y.push_back(1);
  }
  CHECK_THROWS_AS(fit(single, Target::Level, {}), ForestError);
}

TEST_CASE("fit is byte-deterministic under a fixed seed") {
  auto ds = one_feature_dataset(120, 3);
  ForestConfig cfg;
  cfg.n_trees = 15;
  cfg.seed = 77;
  auto a = forest_to_json(fit(ds, Target::Level, cfg)).dump();
  auto b = forest_to_json(fit(ds, Target::Level, cfg)).dump();
  CHECK(a == b);
  cfg.seed = 78;
  CHECK(a != forest_to_json(fit(ds, Target::Level, cfg)).dump());
}

TEST_CASE("vote fractions sum to one and ties break to the lowest label") {
  auto ds = one_feature_dataset(90, 11);
  ForestConfig cfg;
  cfg.n_trees = 30;
  cfg.seed = 2;
  auto forest = fit(ds, Target::Level, cfg);
  Rng rng(9);
  for (int i = 0; i < 50; ++i) {
    std::vector<int> x(94, 0);
    for (int j = 0; j < 5; ++j) x[rng.index(94)] = rng.index(3);
    auto p = predict(forest, x);
    double sum = 0;
    for (double f : p.vote_fractions) sum += f;
    CHECK(std::fabs(sum - 1.0) <= 1e-12);
    for (std::size_t c = 0; c < p.vote_fractions.size(); ++c) {
      CHECK(p.vote_fractions[p.label] >= p.vote_fractions[c]);
      if (p.vote_fractions[c] == p.vote_fractions[p.label]) CHECK(p.label <= static_cast<int>(c));
    }
  }
}

TEST_CASE("every decision path stays inside the feature space") {
  auto ds = one_feature_dataset(100, 40);
  ForestConfig cfg;
  cfg.n_trees = 10;
  cfg.seed = 4;
  auto forest = fit(ds, Target::Level, cfg);
  for (const auto& tree : forest.trees) {
    for (const auto& node : tree.nodes) {
      if (node.feature >= 0) {
        CHECK(node.feature < 94);
        CHECK(node.left >= 0);
        CHECK(node.right >= 0);
      } else {
        bool any = false;
        for (int c : node.counts) {
          CHECK(c >= 0);
          any = any || c > 0;
        }
        CHECK(any);
      }
    }
  }
}

TEST_CASE("an always-zero extra feature never changes predictions") {
  // with every feature considered at each node (mtry = d) the zero column can
  // never host a split, so trees are identical up to the unused dimension
  auto ds = one_feature_dataset(120, 2, 10);
  ForestConfig cfg;
  cfg.n_trees = 12;
  cfg.seed = 6;
  cfg.mtry = 10;
  auto base = fit(ds, Target::Level, cfg);

  Dataset wide = ds;
  wide.n_features = 11;
  for (auto& x : wide.X) x.push_back(0);
  ForestConfig wide_cfg = cfg;
  wide_cfg.mtry = 11;
  auto extended = fit(wide, Target::Level, wide_cfg);

  Rng rng(13);
  for (int i = 0; i < 80; ++i) {
    std::vector<int> x(10);
    for (auto& v : x) v = rng.index(3);
    auto xw = x;
    xw.push_back(0);
    CHECK(predict(base, x).label == predict(extended, xw).label);
  }
}

TEST_CASE("stratified splits keep all classes in both folds") {
  auto ds = one_feature_dataset(60, 8);
  Rng rng(3);
  auto split = stratified_split(ds, 0.2, rng);
  CHECK(split.train.size() + split.test.size() == ds.X.size());
  std::set<int> train_classes, test_classes;
  for (int i : split.train) train_classes.insert(ds.y[i]);
  for (int i : split.test) test_classes.insert(ds.y[i]);
  CHECK(train_classes.size() == 3);
  CHECK(test_classes.size() == 3);
  // no index in both folds
  std::set<int> all(split.train.begin(), split.train.end());
  for (int i : split.test) CHECK(all.insert(i).second);
}

TEST_CASE("perfectly separable corpus evaluates to mean accuracy one") {
  auto ds = one_feature_dataset(150, 5);
  ForestConfig cfg;
  cfg.n_trees = 15;
  auto report = evaluate_protocol(ds, Target::Level, cfg, 6, 42);
  CHECK(report.accuracies.size() == 6);
  CHECK(report.mean == 1.0);
  CHECK(report.ci_low == 1.0);
  CHECK(report.ci_high == 1.0);
  long total = 0, diag = 0;
  for (int a = 0; a < 3; ++a) {
    for (int b = 0; b < 3; ++b) {
      total += report.confusion[a][b];
      if (a == b) diag += report.confusion[a][b];
    }
  }
  CHECK(total == diag);
  CHECK(total == 6 * 30);  // 20% of 150 per seed
}

TEST_CASE("label-independent features evaluate near the majority rate") {
  Dataset ds;
  ds.labels = {"Low", "Medium", "High"};
  ds.n_features = 20;
  Rng rng(99);
  // balanced labels drawn independently of the features
  for (int i = 0; i < 450; ++i) {
    std::vector<int> x(20, 0);
    for (int j = 0; j < 4; ++j) x[rng.index(20)] = rng.index(3);
    ds.X.push_back(std::move(x));
    ds.y.push_back(i % 3);
  }
  const double majority = 150.0 / 450.0;
  ForestConfig cfg;
  cfg.n_trees = 40;
  auto report = evaluate_protocol(ds, Target::Level, cfg, 10, 17);
  CHECK(std::fabs(report.mean - majority) <= 0.06);
}

TEST_CASE("accuracy line follows the mean-plus-CI presentation") {
  EvalReport r;
  r.mean = 0.9449;
  r.ci_low = 0.9410;
  r.ci_high = 0.9487;
  CHECK(format_accuracy_line(r) == "mean accuracy of 94.49% [95% CI: 94.10%, 94.87%]");
}

TEST_CASE("forest serialization round-trips exactly") {
  auto ds = one_feature_dataset(100, 9);
  ForestConfig cfg;
  cfg.n_trees = 8;
  cfg.seed = 21;
  auto forest = fit(ds, Target::Level, cfg, lex().vocabulary_names());
  auto path = std::filesystem::temp_directory_path() / "bkit_forest_roundtrip.json";
  save_forest(forest, path);
  auto back = load_forest(path);
  CHECK(forest_to_json(back).dump() == forest_to_json(forest).dump());
  CHECK(back.vocabulary == lex().vocabulary_names());
  std::filesystem::remove(path);
}

TEST_CASE("corpus-backed dataset construction validates labels") {
  auto profile = default_profile(lex(), Trait::Ability);
  auto small = preset(PresetName::NeutralAbility);
  small.size = 30;
  auto corpus = generate_dataset(small, offline_generator(profile, lex()), 2, default_intents(),
                                 "offline-synth");
  featurize_corpus(corpus, lex());
  auto ds = make_dataset(corpus, Target::Level);
  CHECK(ds.X.size() == 30);
  CHECK(ds.labels == std::vector<std::string>{"Low", "Medium", "High"});
  CHECK_THROWS_AS(make_dataset(corpus, Target::Gender), ForestError);  // ungendered corpus
}
