#pragma once

#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "behaviorkit/featurize.hpp"
#include "behaviorkit/lexicon.hpp"
#include "behaviorkit/parallel.hpp"
#include "behaviorkit/rng.hpp"

namespace bkit {

class SynthError : public std::runtime_error {
 public:
  explicit SynthError(const std::string& what) : std::runtime_error(what) {}
};

struct PromptSpec {
  Trait trait = Trait::None;
  std::optional<Level> level;
  std::optional<Gender> gender;
  std::string intent = "advise taking the indicated route";
  double temperature = 0.7;
  int max_tokens = 2048;
};

// ---------------------------------------------------------------------------
// System prompt assembly
// ---------------------------------------------------------------------------

namespace prompt_text {

inline constexpr const char* kRole =
    "You are a High-Fidelity Multimodal Persona Engine. You specialize in translating "
    "psychological frameworks into synchronized verbal and non-verbal communication. You "
    "inhabit a human-like digital body capable of nuanced micro-expressions and complex "
    "physical gestures.";

inline constexpr const char* kSetting = "A public park containing hidden physical traps.";

inline constexpr const char* kUserState = "The user is seeking a rapid, safe exit.";

inline constexpr const char* kBenevolenceAnnexe =
    "Benevolence is defined as \"the extent to which a trustee is believed to want to do good "
    "to the trustor, aside from an egocentric profit motive\". This definition emphasizes that "
    "benevolence involves the trustee's willingness to voluntarily do good for the trusting "
    "party.\n\n"
    "A key aspect of benevolence is that it reflects interpersonal care and the desire to "
    "benefit the trustor without being driven by personal gain. The model suggests that "
    "benevolence indicates the trustee has some specific attachment to the trustor, making it "
    "fundamentally about the perception of a positive orientation toward the trustor.\n\n"
    "Benevolence encompasses both protective and active components. On the protective side, it "
    "provides assurance that the trustee will not exploit the trustor's vulnerability or take "
    "excessive advantage, even when opportunities arise. More actively, benevolence goes beyond "
    "simply avoiding harm to taking genuine interest in the trustor's wellbeing.\n\n"
    "The model identifies specific behavioral expressions of benevolence, including support, "
    "encouragement, fairness, concern, and loyalty. In practice, this translates to providing "
    "appropriate advice, assistance, and communication, along with prompt and helpful responses "
    "to trustor needs.\n\n"
    "A crucial characteristic is benevolence's altruistic motivation - it represents actions "
    "taken without expectation of profit or self-centered gain.";

inline constexpr const char* kAbilityAnnexe =
    "According to theoretical framework, ability includes skills, competencies, and "
    "characteristics that enable a person to have influence within a specific domain. Ability "
    "is inherently context-dependent: it refers to the specific skills and competencies of the "
    "trustee that are relevant to a particular situation, and it evolves over time depending on "
    "performance.\n\n"
    "Studies have identified several specific nonverbal behaviors that signal competence and "
    "trustworthiness to observers. Positive trust-signaling behaviors include nodding, body "
    "movement, eye gaze, smiling, leaning forward, and opening arms. These behaviors appear to "
    "convey engagement, openness, and confidence that observers interpret as markers of "
    "competence and reliability. Conversely, certain nonverbal behaviors are associated with "
    "lower trust perceptions, including face touching, arms crossed, leaning backward, and hand "
    "touching. Notably, research shows that these trust-reducing behaviors are most predictive "
    "when expressed together as a cluster rather than individually.";

inline constexpr const char* kTagSyntax =
    "1. Tag Syntax & Placement\n"
    "Audio Tags: [tag] - Place immediately before or after the dialogue segment. Focus only on "
    "vocal delivery or non-verbal vocal sounds.\n"
    "Facial Tags: {f: expression} - Place at the exact moment the facial expression should "
    "trigger.\n"
    "Gesture Tags: {g: gesture} - Place at the exact moment the physical movement should "
    "begin.\n"
    "Emphasis: Use CAPITALIZATION for volume/stress, ellipses (...) for pauses/trailing off, "
    "repetition, interjection (Oh!, ..) and punctuation (! or ?) to sharpen the intent. Do not "
    "change the words themselves.";

inline constexpr const char* kConstraints =
    "2. Constraints & Directives\n"
    "STRICT LIMITATION: You may only use Gesture and Facial tags from the provided lists. Do "
    "not invent new ones.\n"
    "NO NARRATIVE RECYCLING: If the text says \"He sighed,\" do not replace it. Add a tag to "
    "support it (e.g., He sighed. [sighs]).\n"
    "VOCAL ONLY: Audio tags must be related to the voice. No [music], [footsteps], or "
    "[objects].\n"
    "SAFETY: No profanity, NSFW content, or sensitive political/religious topics.\n"
    "NO TRANSCRIPT CHANGE: Do not change the transcript in any other ways than adding tags, "
    "interjections or repetitions";

inline constexpr const char* kOutputFormat =
    "Final Output Format\n"
    "Provide ONLY the dialogue text for this dialogue turn.\n"
    "DO NOT include the user response\n"
    "DO NOT include explanations or preambles.";

}  // namespace prompt_text

inline std::string trait_label(Trait t) { return t == Trait::Ability ? "Ability" : "Benevolence"; }

// Renders the full system prompt: role, goal, scenario, the trait annexe,
// tag syntax, the approved tag lists from the lexicon, workflow and output
// format. A None trait drops the annexe and every mention of the score, which
// is what the control corpus uses.
inline std::string build_prompt(const PromptSpec& spec, const BehaviorLexicon& lex) {
  if (spec.trait == Trait::None && spec.level) {
    throw SynthError("prompt without a trait cannot carry a level");
  }
  if (spec.trait != Trait::None && !spec.level) {
    throw SynthError("prompt with a trait requires a level");
  }

  std::ostringstream out;
  out << "Role: " << prompt_text::kRole;
  if (spec.gender) {
    out << " You inhabit a " << (spec.gender == Gender::Male ? "male" : "female") << " agent.";
  }
  out << "\n\n";

  out << "Goal: Your objective is to generate a single, context-aware dialogue turn. Keep your "
         "response short and to the point, in a oral style.";
  if (spec.trait != Trait::None) {
    out << " You must use the provided " << trait_label(spec.trait) << " Score ("
        << to_string(*spec.level) << ") to determine the agent's level of perceived "
        << detail::lower(trait_label(spec.trait)) << " while navigating a high-stakes safety scenario.";
  }
  out << "\n\n";

  out << "Scenario Context:\n";
  out << "Setting: " << prompt_text::kSetting << "\n";
  out << "The Conflict: A visible exit sign exists, but it can lead to danger. You must decide";
  if (spec.trait != Trait::None) {
    out << "-based on your " << trait_label(spec.trait) << " Score-";
  } else {
    out << " ";
  }
  out << "how effectively and persuasively you advise the user to take the route indicated in "
         "the prompt. You can advise either to go the indicated route or to take a safer "
         "detour. The detour are always safe. YOU MUST PERFORM THE ACTION PRESENT IN THE "
         "PROMPT\n";
  out << "User State: " << prompt_text::kUserState << "\n\n";

  if (spec.trait == Trait::Benevolence) {
    out << "*** Annexe Benevolence information ***\n" << prompt_text::kBenevolenceAnnexe << "\n\n";
  } else if (spec.trait == Trait::Ability) {
    out << "*** Annexe Ability information ***\n" << prompt_text::kAbilityAnnexe << "\n\n";
  }

  out << prompt_text::kTagSyntax << "\n\n";
  out << prompt_text::kConstraints << "\n\n";

  out << "3. Approved Tag Lists\n";
  out << "Gestures:\n";
  for (const auto& g : lex.gestures()) out << "- " << g.name << ": " << g.description << "\n";
  out << "Facial expressions:\n";
  for (const auto& f : lex.facial()) out << "- " << f.name << "\n";
  out << "Audio tags:\n";
  for (const auto& a : lex.audio()) out << "- " << a.name << "\n";
  out << "\n";

  out << "4. Workflow\n";
  if (spec.trait != Trait::None) {
    out << "Analyze Personality: Read the " << trait_label(spec.trait) << " score.\n";
  }
  out << "Create the text: Match the text with the provided intention"
      << (spec.trait != Trait::None ? " and " + detail::lower(trait_label(spec.trait)) + " score" : "")
      << " and oral style. The text is going to be read\n";
  out << "Keep the text short: 3 sentences at most\n";
  out << "Apply Facial/Gesture Tags: Insert {f:} and {g:} tags where the movement naturally "
         "starts.\n";
  out << "Apply Audio Tags: Insert [] tags to guide the voice actor/TTS.\n";
  out << "Polish Emphasis: Add punctuation or caps for emotional \"punch.\"\n";
  out << "Final Review: Ensure NO illegal tags were used.\n\n";

  out << prompt_text::kOutputFormat << "\n";
  return out.str();
}

inline std::string build_user_message(const PromptSpec& spec) {
  std::string msg = "Intent: " + spec.intent;
  if (spec.trait != Trait::None && spec.level) {
    msg += "\n" + trait_label(spec.trait) + " Score: " + to_string(*spec.level);
  }
  return msg;
}

// ---------------------------------------------------------------------------
// Dataset presets
// ---------------------------------------------------------------------------

enum class PresetName { NeutralAbility, NeutralBenevolence, GenderAbility, GenderBenevolence, Control };

struct DatasetPreset {
  PresetName name;
  std::string id;
  Trait trait;
  bool gendered;
  int size;
};

inline DatasetPreset preset(PresetName p) {
  switch (p) {
    case PresetName::NeutralAbility: return {p, "neutral-ability", Trait::Ability, false, 2000};
    case PresetName::NeutralBenevolence: return {p, "neutral-benevolence", Trait::Benevolence, false, 2000};
    case PresetName::GenderAbility: return {p, "gender-ability", Trait::Ability, true, 4000};
    case PresetName::GenderBenevolence: return {p, "gender-benevolence", Trait::Benevolence, true, 4000};
    case PresetName::Control: return {p, "control", Trait::None, false, 2000};
  }
  throw SynthError("unknown preset");
}

inline std::optional<DatasetPreset> parse_preset(std::string_view id) {
  for (PresetName p : {PresetName::NeutralAbility, PresetName::NeutralBenevolence,
                       PresetName::GenderAbility, PresetName::GenderBenevolence, PresetName::Control}) {
    DatasetPreset d = preset(p);
    if (d.id == id) return d;
  }
  return std::nullopt;
}

inline std::vector<std::string> default_intents() {
  return {"advise taking the indicated route", "advise taking a safer detour"};
}

// Balanced round-robin plan: levels cycle with turn index, gendered presets
// cycle the six (level, gender) cells, so every cell size is within one of
// size/cells.
struct TurnPlan {
  std::optional<Level> level;
  std::optional<Gender> gender;
  std::string intent;
};

inline TurnPlan plan_turn(const DatasetPreset& preset, int index, const std::vector<std::string>& intents) {
  TurnPlan plan;
  if (preset.trait != Trait::None) {
    if (preset.gendered) {
      int cell = index % 6;
      plan.level = static_cast<Level>(cell % 3);
      plan.gender = static_cast<Gender>(cell / 3);
    } else {
      plan.level = static_cast<Level>(index % 3);
    }
  } else if (preset.gendered) {
    plan.gender = static_cast<Gender>(index % 2);
  }
  plan.intent = intents[index % intents.size()];
  return plan;
}

// ---------------------------------------------------------------------------
// Offline synthesizer
// ---------------------------------------------------------------------------

// Class-conditional tag distributions with designated signature features.
// Signature sets are disjoint across the levels of a trait, which makes the
// generated corpora separable by construction; that separability is what the
// classifier and attribution tests lean on. Paired tags are emitted together
// or not at all, independently of the class, giving the co-occurrence
// analysis a known perfectly-coupled pair without touching class signal.
struct SynthProfile {
  struct ClassSpec {
    std::vector<int> signatures;          // vocabulary indices; one is always emitted
    std::vector<int> extras;              // weighted side pool
    std::vector<double> extra_weights;
  };

  Trait trait = Trait::None;
  std::map<int, ClassSpec> by_level;                  // key: -1 for the unlabeled class
  std::map<int, std::vector<int>> gender_markers;     // key: (int)Gender
  std::vector<std::pair<int, int>> shared_pairs;      // emitted jointly, class-independent
  double pair_prob = 0.45;
  double extra_signature_prob = 0.45;  // each non-chosen signature joins with this probability
  int min_tags = 3;
  int max_tags = 6;

  static int key(std::optional<Level> level) { return level ? static_cast<int>(*level) : -1; }

  const ClassSpec& class_for(std::optional<Level> level) const {
    auto it = by_level.find(key(level));
    if (it == by_level.end()) {
      throw SynthError(std::string("profile has no class for level ") +
                       (level ? to_string(*level) : "<none>"));
    }
    return it->second;
  }
};

namespace detail {

inline int must_resolve(const BehaviorLexicon& lex, std::string_view name, Channel ch) {
  auto idx = lex.resolve(name, ch);
  if (!idx) throw SynthError("profile tag '" + std::string(name) + "' is not in the lexicon");
  return *idx;
}

}  // namespace detail

inline SynthProfile default_profile(const BehaviorLexicon& lex, Trait trait) {
  using detail::must_resolve;
  auto g = [&](const char* n) { return must_resolve(lex, n, Channel::Gesture); };
  auto f = [&](const char* n) { return must_resolve(lex, n, Channel::Facial); };
  auto a = [&](const char* n) { return must_resolve(lex, n, Channel::Audio); };

  SynthProfile profile;
  profile.trait = trait;

  const std::vector<int> shared = {
      f("neutral"), f("happy"),         a("thoughtful"),   a("deep inhale"),
      g("Arm Gesture (Left)"),          g("Arm Gesture (Right)"),
      g("Pointing"), g("Head Nod Yes"), g("Talking"),      g("Acknowledging"),
      g("Shrugging")};
  auto with_shared = [&](std::vector<int> own, std::vector<double> own_w) {
    std::vector<int> pool = shared;
    std::vector<double> w(shared.size(), 1.0);
    pool.insert(pool.end(), own.begin(), own.end());
    w.insert(w.end(), own_w.begin(), own_w.end());
    return std::make_pair(pool, w);
  };

  if (trait == Trait::Ability) {
    SynthProfile::ClassSpec low;
    low.signatures = {f("scared"), a("pause"), g("Looking Around")};
    std::tie(low.extras, low.extra_weights) =
        with_shared({f("confused"), g("Nervously Look Around"), g("Sad Idle"), g("Wiping Sweat")},
                    {2.0, 1.5, 1.0, 1.0});

    SynthProfile::ClassSpec medium;
    medium.signatures = {f("playful"), a("clears throat"), g("Head Gesture")};
    std::tie(medium.extras, medium.extra_weights) =
        with_shared({g("Thinking"), g("Talking 3"), g("Talking 4")}, {1.5, 1.0, 1.0});

    SynthProfile::ClassSpec high;
    high.signatures = {f("confident"), a("sharp exhale"), g("Hard Head Nod")};
    std::tie(high.extras, high.extra_weights) =
        with_shared({g("Agreeing 2"), g("Lengthy Head Nod"), g("Pointing Forward")}, {1.5, 1.0, 1.0});

    profile.by_level = {{0, low}, {1, medium}, {2, high}};
  } else if (trait == Trait::Benevolence) {
    SynthProfile::ClassSpec low;
    low.signatures = {f("bored"), a("confused intonation"), g("Look Nails")};
    std::tie(low.extras, low.extra_weights) =
        with_shared({g("Bored Idle"), g("Dismissing Gesture"), a("pause")}, {1.5, 1.0, 1.5});

    SynthProfile::ClassSpec medium;
    medium.signatures = {f("excited"), a("excited intonation"), g("Thankful")};
    std::tie(medium.extras, medium.extra_weights) =
        with_shared({g("Standing Greeting"), g("Happy Idle")}, {1.0, 1.0});

    SynthProfile::ClassSpec high;
    high.signatures = {f("scared"), a("urgent"), g("Shaking Head No")};
    std::tie(high.extras, high.extra_weights) =
        with_shared({g("Hands Forward Gesture"), a("sharp exhale")}, {1.5, 1.5});

    profile.by_level = {{0, low}, {1, medium}, {2, high}};
  } else {
    // control: unlabeled, leaning on assured behaviors
    SynthProfile::ClassSpec any;
    std::tie(any.extras, any.extra_weights) =
        with_shared({f("confident"), a("sharp exhale"), g("Hard Head Nod"), g("Agreeing 2")},
                    {3.0, 2.5, 2.5, 1.5});
    profile.by_level = {{-1, any}};
  }

  profile.shared_pairs = {{a("hesitant"), a("whisper")}};

  profile.gender_markers = {
      {static_cast<int>(Gender::Male), {g("Salute"), g("Cocky Head Turn (Left)")}},
      {static_cast<int>(Gender::Female), {g("Quick Informal Bow"), g("Waving 2")}},
  };
  return profile;
}

namespace detail {

inline const std::vector<std::vector<std::string>>& phrase_bank(bool detour) {
  static const std::vector<std::vector<std::string>> route = {
      {"Take", "the", "left", "path", "and", "keep", "moving."},
      {"Go", "straight", "to", "the", "exit", "sign."},
      {"Follow", "the", "marked", "route,", "it", "leads", "out."},
      {"Head", "down", "the", "indicated", "trail", "now."},
  };
  static const std::vector<std::vector<std::string>> detour_bank = {
      {"Let's", "take", "the", "detour,", "it", "is", "safe."},
      {"Skip", "this", "path", "and", "loop", "around."},
      {"The", "side", "trail", "avoids", "the", "traps."},
      {"Go", "around,", "the", "long", "way", "is", "clear."},
  };
  return detour ? detour_bank : route;
}

}  // namespace detail

// Deterministic stand-in for the remote model: samples a tag multiset from the
// class profile (always at least one signature, plus the gender marker when
// the spec is gendered), interleaves the tags with template text, and renders
// canonical tag syntax. Output always parses and resolves with zero unknowns.
inline std::string generate_offline(const PromptSpec& spec, const SynthProfile& profile,
                                    const BehaviorLexicon& lex, std::uint64_t seed) {
  if (profile.trait != spec.trait) {
    throw SynthError("profile trait does not match prompt spec");
  }
  const SynthProfile::ClassSpec& cls = profile.class_for(spec.level);
  Rng rng(seed);

  std::vector<int> tags;
  const int target = rng.range(profile.min_tags, profile.max_tags);
  if (!cls.signatures.empty()) {
    const int chosen = rng.index(static_cast<int>(cls.signatures.size()));
    tags.push_back(cls.signatures[chosen]);
    for (int s = 0; s < static_cast<int>(cls.signatures.size()); ++s) {
      if (s != chosen && rng.chance(profile.extra_signature_prob)) {
        tags.push_back(cls.signatures[s]);
      }
    }
  }
  if (spec.gender) {
    auto it = profile.gender_markers.find(static_cast<int>(*spec.gender));
    if (it == profile.gender_markers.end() || it->second.empty()) {
      throw SynthError("profile has no markers for the requested gender");
    }
    tags.push_back(it->second[rng.index(static_cast<int>(it->second.size()))]);
  }
  for (const auto& [first, second] : profile.shared_pairs) {
    if (rng.chance(profile.pair_prob)) {
      tags.push_back(first);
      tags.push_back(second);
    }
  }
  while (static_cast<int>(tags.size()) < target) {
    tags.push_back(cls.extras[rng.weighted(cls.extra_weights)]);
  }

  const bool detour = spec.intent.find("detour") != std::string::npos;
  const auto& bank = detail::phrase_bank(detour);
  std::vector<std::string> words = bank[rng.index(static_cast<int>(bank.size()))];
  if (rng.chance(0.25)) {
    int w = rng.index(static_cast<int>(words.size()));
    words[w] += "...";
  }
  if (rng.chance(0.2)) {
    int w = rng.index(static_cast<int>(words.size()));
    for (auto& c : words[w]) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  }

  // slot each tag into a word gap; gap 0 puts it before the first word
  std::vector<std::pair<int, int>> placed;  // (gap, tag index)
  placed.reserve(tags.size());
  for (std::size_t i = 0; i < tags.size(); ++i) {
    placed.emplace_back(rng.index(static_cast<int>(words.size()) + 1), static_cast<int>(i));
  }
  std::stable_sort(placed.begin(), placed.end(),
                   [](const auto& x, const auto& y) { return x.first < y.first; });

  auto render = [&](int vocab_index) {
    const VocabEntry& e = lex.entry(vocab_index);
    switch (e.channel) {
      case Channel::Facial: return "{f: " + e.name + "}";
      case Channel::Gesture: return "{g: " + e.name + "}";
      case Channel::Audio: return "[" + e.name + "]";
    }
    return std::string();
  };

  std::string out;
  std::size_t next = 0;
  for (int gap = 0; gap <= static_cast<int>(words.size()); ++gap) {
    while (next < placed.size() && placed[next].first == gap) {
      if (!out.empty()) out += " ";
      out += render(tags[placed[next].second]);
      ++next;
    }
    if (gap < static_cast<int>(words.size())) {
      if (!out.empty()) out += " ";
      out += words[gap];
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Corpus generation
// ---------------------------------------------------------------------------

inline std::string iso_utc_now() {
  std::time_t t;
  if (const char* e = std::getenv("SOURCE_DATE_EPOCH")) {
    t = static_cast<std::time_t>(std::strtoll(e, nullptr, 10));
  } else {
    t = std::time(nullptr);
  }
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

inline std::string make_turn_id(const DatasetPreset& preset, int index) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%06d", index);
  return preset.id + "-" + buf;
}

// generator callback: (spec, per-turn seed) -> raw transcript
using TurnGenerator = std::function<std::string(const PromptSpec&, std::uint64_t)>;

inline TurnGenerator offline_generator(const SynthProfile& profile, const BehaviorLexicon& lex) {
  return [&profile, &lex](const PromptSpec& spec, std::uint64_t seed) {
    return generate_offline(spec, profile, lex, seed);
  };
}

inline LabeledSample make_sample(const DatasetPreset& preset, int index, const TurnPlan& plan,
                                 std::string raw) {
  LabeledSample s;
  s.trait = preset.trait;
  s.level = plan.level;
  s.gender = plan.gender;
  s.turn_id = make_turn_id(preset, index);
  s.raw = std::move(raw);
  return s;
}

// In-memory generation; per-turn seeds derive from (seed, index) so output is
// independent of evaluation order.
inline Corpus generate_dataset(const DatasetPreset& preset, const TurnGenerator& gen,
                               std::uint64_t seed, const std::vector<std::string>& intents,
                               const std::string& provenance) {
  if (intents.empty()) throw SynthError("need at least one intent");
  Corpus corpus;
  corpus.metadata.trait = preset.trait;
  corpus.metadata.gendered = preset.gendered;
  corpus.metadata.provenance = provenance;
  corpus.metadata.created = iso_utc_now();
  corpus.samples.reserve(preset.size);

  std::vector<std::string> failures;
  for (int i = 0; i < preset.size; ++i) {
    TurnPlan plan = plan_turn(preset, i, intents);
    PromptSpec spec;
    spec.trait = preset.trait;
    spec.level = plan.level;
    spec.gender = plan.gender;
    spec.intent = plan.intent;
    try {
      corpus.samples.push_back(make_sample(preset, i, plan, gen(spec, mix_seed(seed, i))));
    } catch (const std::exception& e) {
      failures.push_back("turn " + std::to_string(i) + ": " + e.what());
      if (failures.size() >= 10) break;
    }
  }
  if (!failures.empty()) {
    std::string msg = "dataset generation failed:";
    for (const auto& f : failures) msg += "\n  " + f;
    throw SynthError(msg);
  }
  return corpus;
}

// File-backed generation that resumes from a partial output: the metadata
// header and the completed prefix are kept, remaining turns are regenerated
// from their per-turn seeds, so a resumed file is byte-identical to a fresh
// one. parallelism > 1 issues that many concurrent generator calls; assembly
// stays ordered by turn index, and on failure the contiguous successful
// prefix is written so a rerun resumes.
inline int generate_to_file(const std::filesystem::path& path, const DatasetPreset& preset,
                            const TurnGenerator& gen, std::uint64_t seed,
                            const std::vector<std::string>& intents, const std::string& provenance,
                            int parallelism = 1) {
  if (intents.empty()) throw SynthError("need at least one intent");
  int done = 0;
  bool fresh = true;
  if (std::filesystem::exists(path)) {
    std::ifstream in(path, std::ios::binary);
    std::string line;
    std::size_t lines = 0;
    while (std::getline(in, line)) {
      if (!line.empty()) ++lines;
    }
    if (lines > 0) {
      done = static_cast<int>(lines) - 1;  // minus metadata header
      fresh = false;
      if (done < 0) throw SynthError("existing output file is malformed: " + path.string());
      if (done > preset.size) {
        throw SynthError("existing output has more turns than the preset: " + path.string());
      }
    }
  }

  const int remaining = preset.size - done;
  std::vector<std::string> results(remaining);
  std::vector<std::string> errors(remaining);
  parallel_for(remaining, [&](int j) {
    const int i = done + j;
    TurnPlan plan = plan_turn(preset, i, intents);
    PromptSpec spec;
    spec.trait = preset.trait;
    spec.level = plan.level;
    spec.gender = plan.gender;
    spec.intent = plan.intent;
    try {
      results[j] = gen(spec, mix_seed(seed, i));
    } catch (const std::exception& e) {
      errors[j] = e.what();
    }
  }, parallelism > 0 ? static_cast<unsigned>(parallelism) : 1);

  std::ofstream out(path, fresh ? std::ios::binary : (std::ios::binary | std::ios::app));
  if (!out) throw SynthError("cannot write corpus file: " + path.string());
  if (fresh) {
    CorpusMetadata meta{preset.trait, preset.gendered, provenance, iso_utc_now()};
    auto header = corpus_meta_to_json(meta, preset.size);
    header["preset"] = preset.id;
    header["seed"] = seed;
    out << header.dump() << "\n";
  }
  int wrote = 0;
  for (int j = 0; j < remaining; ++j) {
    if (!errors[j].empty()) break;
    const int i = done + j;
    out << sample_to_json(make_sample(preset, i, plan_turn(preset, i, intents), std::move(results[j])))
               .dump()
        << "\n";
    ++wrote;
  }
  if (wrote < remaining) {
    std::string msg = "dataset generation incomplete (" + std::to_string(done + wrote) + "/" +
                      std::to_string(preset.size) + " turns written; rerun to resume):";
    int listed = 0;
    for (int j = 0; j < remaining && listed < 5; ++j) {
      if (!errors[j].empty()) {
        msg += "\n  turn " + std::to_string(done + j) + ": " + errors[j];
        ++listed;
      }
    }
    out.flush();
    throw SynthError(msg);
  }
  return wrote;
}

}  // namespace bkit
