#pragma once

#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "behaviorkit/lexicon.hpp"
#include "behaviorkit/transcript.hpp"

namespace bkit {

enum class Trait { None, Ability, Benevolence };
enum class Level { Low, Medium, High };
enum class Gender { Male, Female };

inline const char* to_string(Trait t) {
  switch (t) {
    case Trait::None: return "none";
    case Trait::Ability: return "ability";
    case Trait::Benevolence: return "benevolence";
  }
  return "?";
}
inline const char* to_string(Level l) {
  switch (l) {
    case Level::Low: return "Low";
    case Level::Medium: return "Medium";
    case Level::High: return "High";
  }
  return "?";
}
inline const char* to_string(Gender g) { return g == Gender::Male ? "Male" : "Female"; }

inline std::optional<Trait> parse_trait(std::string_view s) {
  if (s == "none") return Trait::None;
  if (s == "ability") return Trait::Ability;
  if (s == "benevolence") return Trait::Benevolence;
  return std::nullopt;
}
inline std::optional<Level> parse_level(std::string_view s) {
  if (s == "Low") return Level::Low;
  if (s == "Medium") return Level::Medium;
  if (s == "High") return Level::High;
  return std::nullopt;
}
inline std::optional<Gender> parse_gender(std::string_view s) {
  if (s == "Male") return Gender::Male;
  if (s == "Female") return Gender::Female;
  return std::nullopt;
}

// 94 per-turn occurrence counts, indexed by the lexicon vocabulary.
struct FeatureVector {
  std::vector<int> counts;

  FeatureVector() : counts(kVocabularySize, 0) {}
  explicit FeatureVector(std::vector<int> c) : counts(std::move(c)) {}

  int l1() const {
    int s = 0;
    for (int c : counts) s += c;
    return s;
  }
  bool operator==(const FeatureVector& o) const { return counts == o.counts; }
};

struct UnknownTagReport {
  Channel channel;
  std::string name;
  std::size_t offset;
};

// Counts every resolvable tag at its canonical index. Unknown names go to the
// side report; emphasis devices contribute nothing.
inline FeatureVector featurize(const AugmentedTranscript& t, const BehaviorLexicon& lex,
                               std::vector<UnknownTagReport>* unknown = nullptr) {
  FeatureVector v;
  v.counts.assign(lex.vocabulary().size(), 0);
  for (const auto& seg : t.segments) {
    Channel ch;
    switch (seg.kind) {
      case SegmentKind::Text: continue;
      case SegmentKind::FacialTag: ch = Channel::Facial; break;
      case SegmentKind::GestureTag: ch = Channel::Gesture; break;
      case SegmentKind::AudioTag: ch = Channel::Audio; break;
    }
    if (auto idx = lex.resolve(seg.payload, ch)) {
      ++v.counts[*idx];
    } else if (unknown) {
      unknown->push_back({ch, seg.payload, seg.char_offset});
    }
  }
  return v;
}

struct LabeledSample {
  FeatureVector features;  // filled by featurize_corpus
  std::optional<Level> level;
  std::optional<Gender> gender;
  Trait trait = Trait::None;
  std::string turn_id;
  std::string raw;
};

struct CorpusMetadata {
  Trait trait = Trait::None;
  bool gendered = false;
  std::string provenance;  // model name or "offline-synth"
  std::string created;     // ISO-8601
};

struct Corpus {
  CorpusMetadata metadata;
  std::vector<LabeledSample> samples;
};

class CorpusError : public std::runtime_error {
 public:
  CorpusError(std::size_t line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// Corpus files are UTF-8 JSON lines. The first line is a metadata record;
// every following line is one speech turn with fields
// {turn_id, trait, level, gender, raw}.
inline nlohmann::ordered_json sample_to_json(const LabeledSample& s) {
  nlohmann::ordered_json rec;
  rec["turn_id"] = s.turn_id;
  rec["trait"] = to_string(s.trait);
  rec["level"] = s.level ? nlohmann::ordered_json(to_string(*s.level)) : nlohmann::ordered_json(nullptr);
  rec["gender"] = s.gender ? nlohmann::ordered_json(to_string(*s.gender)) : nlohmann::ordered_json(nullptr);
  rec["raw"] = s.raw;
  return rec;
}

inline nlohmann::ordered_json corpus_meta_to_json(const CorpusMetadata& m, std::size_t count) {
  nlohmann::ordered_json meta;
  meta["format"] = "bkit-corpus";
  meta["version"] = 1;
  meta["trait"] = to_string(m.trait);
  meta["gendered"] = m.gendered;
  meta["provenance"] = m.provenance;
  meta["created"] = m.created;
  meta["count"] = count;
  return meta;
}

inline void save_corpus(const Corpus& corpus, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw CorpusError(0, "cannot write corpus file: " + path.string());
  out << corpus_meta_to_json(corpus.metadata, corpus.samples.size()).dump() << "\n";
  for (const auto& s : corpus.samples) out << sample_to_json(s).dump() << "\n";
}

inline LabeledSample sample_from_json(const nlohmann::json& rec, std::size_t line) {
  LabeledSample s;
  try {
    s.turn_id = rec.at("turn_id").get<std::string>();
    auto trait = parse_trait(rec.at("trait").get<std::string>());
    if (!trait) throw CorpusError(line, "unknown trait '" + rec["trait"].get<std::string>() + "'");
    s.trait = *trait;
    if (!rec.at("level").is_null()) {
      auto level = parse_level(rec["level"].get<std::string>());
      if (!level) throw CorpusError(line, "level '" + rec["level"].get<std::string>() +
                                              "' is not one of Low/Medium/High");
      s.level = *level;
    }
    if (!rec.at("gender").is_null()) {
      auto gender = parse_gender(rec["gender"].get<std::string>());
      if (!gender) throw CorpusError(line, "gender '" + rec["gender"].get<std::string>() +
                                               "' is not one of Male/Female");
      s.gender = *gender;
    }
    s.raw = rec.at("raw").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw CorpusError(line, std::string("malformed record: ") + e.what());
  }
  if (s.trait != Trait::None && !s.level) throw CorpusError(line, "labeled trait requires a level");
  if (s.trait == Trait::None && s.level) throw CorpusError(line, "level present without a trait");
  return s;
}

inline Corpus load_corpus(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CorpusError(0, "cannot open corpus file: " + path.string());
  Corpus corpus;
  std::unordered_set<std::string> turn_ids;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    nlohmann::json rec;
    try {
      rec = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw CorpusError(lineno, std::string("not valid JSON: ") + e.what());
    }
    if (lineno == 1 && rec.contains("format")) {
      if (rec["format"] != "bkit-corpus") throw CorpusError(1, "not a bkit-corpus file");
      auto trait = parse_trait(rec.at("trait").get<std::string>());
      if (!trait) throw CorpusError(1, "unknown corpus trait");
      corpus.metadata.trait = *trait;
      corpus.metadata.gendered = rec.value("gendered", false);
      corpus.metadata.provenance = rec.value("provenance", "");
      corpus.metadata.created = rec.value("created", "");
      continue;
    }
    LabeledSample s = sample_from_json(rec, lineno);
    if (s.trait != corpus.metadata.trait) {
      throw CorpusError(lineno, std::string("sample trait '") + to_string(s.trait) +
                                    "' differs from corpus trait '" + to_string(corpus.metadata.trait) + "'");
    }
    if (!turn_ids.insert(s.turn_id).second) {
      throw CorpusError(lineno, "duplicate turn_id '" + s.turn_id + "'");
    }
    corpus.samples.push_back(std::move(s));
  }
  return corpus;
}

struct CorpusUnknownTag {
  std::string turn_id;
  UnknownTagReport report;
};

// Parses and counts every sample in place. Parse failures become CorpusError
// with the failing sample index; unknown tag names are collected, not fatal.
inline std::vector<CorpusUnknownTag> featurize_corpus(Corpus& corpus, const BehaviorLexicon& lex) {
  std::vector<CorpusUnknownTag> unknowns;
  for (std::size_t i = 0; i < corpus.samples.size(); ++i) {
    auto& s = corpus.samples[i];
    AugmentedTranscript t;
    try {
      t = parse(s.raw);
    } catch (const ParseError& e) {
      throw CorpusError(i + 2, "turn '" + s.turn_id + "' fails to parse: " + e.what());
    }
    std::vector<UnknownTagReport> local;
    s.features = featurize(t, lex, &local);
    for (auto& u : local) unknowns.push_back({s.turn_id, std::move(u)});
  }
  return unknowns;
}

}  // namespace bkit
