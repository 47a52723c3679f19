#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>

#include "behaviorkit/featurize.hpp"
#include "behaviorkit/rng.hpp"
#include "corpus_rows.hpp"

using namespace bkit;

namespace {

const BehaviorLexicon& lex() {
  static BehaviorLexicon instance = BehaviorLexicon::standard();
  return instance;
}

Channel channel_of(const char* c) {
  switch (c[0]) {
    case 'g': return Channel::Gesture;
    case 'f': return Channel::Facial;
    default: return Channel::Audio;
  }
}

void check_counts(const std::string& row, const std::vector<rows::TagCount>& expected) {
  auto v = featurize(parse(row), lex());
  std::vector<int> want(lex().vocabulary().size(), 0);
  for (const auto& tc : expected) {
    auto idx = lex().resolve(tc.name, channel_of(tc.channel));
    REQUIRE(idx.has_value());
    want[*idx] = tc.count;
  }
  CHECK(v.counts == want);
}

}  // namespace

TEST_CASE("reference rows featurize to the hand-derived count vectors") {
  check_counts(rows::kLowAbility, rows::low_ability_counts());
  check_counts(rows::kHighAbility, rows::high_ability_counts());
  check_counts(rows::kLowBenevolence, rows::low_benevolence_counts());
  check_counts(rows::kHighBenevolence, rows::high_benevolence_counts());
}

TEST_CASE("empty transcript gives the zero vector") {
  auto v = featurize(parse(""), lex());
  CHECK(v.l1() == 0);
  CHECK(v.counts.size() == 94);
}

TEST_CASE("repeated tags count per occurrence") {
  auto v = featurize(parse("{g: Head Nod Yes}{g: Head Nod Yes}"), lex());
  auto idx = lex().resolve("Head Nod Yes", Channel::Gesture);
  REQUIRE(idx.has_value());
  CHECK(v.counts[*idx] == 2);
  CHECK(v.l1() == 2);
}

TEST_CASE("unknown tags go to the report, never the vector") {
  std::vector<UnknownTagReport> unknown;
  auto v = featurize(parse("{g: moonwalk} {f: confident} [blorp]"), lex(), &unknown);
  CHECK(v.l1() == 1);
  REQUIRE(unknown.size() == 2);
  CHECK(unknown[0].name == "moonwalk");
  CHECK(unknown[0].channel == Channel::Gesture);
  CHECK(unknown[0].offset == 0);
  CHECK(unknown[1].name == "blorp");
  CHECK(unknown[1].channel == Channel::Audio);
}

TEST_CASE("emphasis contributes nothing to the vector") {
  auto plain = featurize(parse("go left"), lex());
  auto loud = featurize(parse("GO LEFT... now!!"), lex());
  CHECK(plain.l1() == 0);
  CHECK(loud.l1() == 0);
}

TEST_CASE("featurize is permutation-invariant in tag order") {
  Rng rng(41);
  std::vector<std::string> tags = {"{f: confident}", "{g: Clap}", "[pause]", "{g: Clap}",
                                   "[thoughtful]"};
  auto base = featurize(parse("{f: confident}{g: Clap}[pause]{g: Clap}[thoughtful]"), lex());
  for (int i = 0; i < 20; ++i) {
    rng.shuffle(tags);
    std::string source;
    for (const auto& t : tags) source += t + " ";
    CHECK(featurize(parse(source), lex()).counts == base.counts);
  }
}

TEST_CASE("corpus L1 mass equals resolved tag occurrences by independent scan") {
  // independent oracle: count tag openers in the raw strings and subtract the
  // reported unknowns
  Corpus corpus;
  corpus.metadata.trait = Trait::Ability;
  const std::vector<std::string> raws = {rows::kLowAbility, rows::kHighAbility, "{g: bogus} hello",
                                         "[pause] [pause] fine"};
  for (std::size_t i = 0; i < raws.size(); ++i) {
    LabeledSample s;
    s.trait = Trait::Ability;
    s.level = Level::Low;
    s.turn_id = "t" + std::to_string(i);
    s.raw = raws[i];
    corpus.samples.push_back(s);
  }
  auto unknowns = featurize_corpus(corpus, lex());

  long total_l1 = 0;
  for (const auto& s : corpus.samples) total_l1 += s.features.l1();

  long scanned = 0;
  for (const auto& raw : raws) {
    for (std::size_t p = 0; p < raw.size(); ++p) {
      if (raw[p] == '[') ++scanned;
      if (raw[p] == '{') ++scanned;
    }
  }
  CHECK(total_l1 == scanned - static_cast<long>(unknowns.size()));
}

TEST_CASE("featurize is deterministic on identical bytes") {
  auto a = featurize(parse(rows::kHighBenevolence), lex());
  auto b = featurize(parse(rows::kHighBenevolence), lex());
  CHECK(a.counts == b.counts);
}

TEST_CASE("corpus save/load round-trip") {
  Corpus corpus;
  corpus.metadata.trait = Trait::Benevolence;
  corpus.metadata.gendered = true;
  corpus.metadata.provenance = "offline-synth";
  corpus.metadata.created = "2026-01-01T00:00:00Z";
  for (int i = 0; i < 3; ++i) {
    LabeledSample s;
    s.trait = Trait::Benevolence;
    s.level = static_cast<Level>(i);
    s.gender = i % 2 == 0 ? std::optional<Gender>(Gender::Male) : std::optional<Gender>(Gender::Female);
    s.turn_id = "turn-" + std::to_string(i);
    // one row carries multi-byte punctuation to pin UTF-8 handling
    s.raw = i == 1 ? rows::kHighAbility : rows::kHighBenevolence;
    corpus.samples.push_back(s);
  }
  auto path = std::filesystem::temp_directory_path() / "bkit_corpus_roundtrip.jsonl";
  save_corpus(corpus, path);
  auto back = load_corpus(path);
  REQUIRE(back.samples.size() == corpus.samples.size());
  CHECK(back.metadata.trait == corpus.metadata.trait);
  CHECK(back.metadata.gendered == corpus.metadata.gendered);
  CHECK(back.metadata.provenance == corpus.metadata.provenance);
  CHECK(back.metadata.created == corpus.metadata.created);
  for (std::size_t i = 0; i < corpus.samples.size(); ++i) {
    CHECK(back.samples[i].turn_id == corpus.samples[i].turn_id);
    CHECK(back.samples[i].raw == corpus.samples[i].raw);
    CHECK(back.samples[i].level == corpus.samples[i].level);
    CHECK(back.samples[i].gender == corpus.samples[i].gender);
    CHECK(back.samples[i].trait == corpus.samples[i].trait);
  }
  std::filesystem::remove(path);
}

TEST_CASE("malformed corpus records report their line") {
  auto path = std::filesystem::temp_directory_path() / "bkit_corpus_bad.jsonl";
  {
    std::ofstream out(path);
    out << R"({"format":"bkit-corpus","version":1,"trait":"ability","gendered":false,"provenance":"x","created":"now","count":2})"
        << "\n";
    out << R"({"turn_id":"a","trait":"ability","level":"High","gender":null,"raw":"ok"})" << "\n";
    out << R"({"turn_id":"b","trait":"ability","level":"Extreme","gender":null,"raw":"ok"})" << "\n";
  }
  try {
    load_corpus(path);
    FAIL("expected CorpusError");
  } catch (const CorpusError& e) {
    CHECK(e.line() == 3);
    CHECK(std::string(e.what()).find("Extreme") != std::string::npos);
  }
  std::filesystem::remove(path);
}

TEST_CASE("level without trait and trait without level are rejected") {
  auto path = std::filesystem::temp_directory_path() / "bkit_corpus_bad2.jsonl";
  {
    std::ofstream out(path);
    out << R"({"format":"bkit-corpus","version":1,"trait":"none","gendered":false,"provenance":"x","created":"now","count":1})"
        << "\n";
    out << R"({"turn_id":"a","trait":"none","level":"High","gender":null,"raw":"ok"})" << "\n";
  }
  CHECK_THROWS_AS(load_corpus(path), CorpusError);
  std::filesystem::remove(path);
}
