#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

namespace bkit {

inline constexpr int kGestureCount = 72;
inline constexpr int kFacialCount = 12;
inline constexpr int kAudioCount = 10;
inline constexpr int kVocabularySize = kGestureCount + kFacialCount + kAudioCount;  // 94

enum class Channel { Gesture, Facial, Audio };

inline const char* channel_name(Channel c) {
  switch (c) {
    case Channel::Gesture: return "gesture";
    case Channel::Facial: return "facial";
    case Channel::Audio: return "audio";
  }
  return "?";
}

struct GestureSpec {
  std::string name;
  std::string description;
  int duration_ms = 0;  // stored at millisecond precision so timeline math is exact

  double duration_s() const { return duration_ms / 1000.0; }
};

struct FacialExpression {
  std::string name;
  std::vector<std::string> aliases;
};

struct AudioTag {
  std::string name;
  std::vector<std::string> aliases;
};

struct VocabEntry {
  int index;
  Channel channel;
  std::string name;
};

class LexiconError : public std::runtime_error {
 public:
  explicit LexiconError(const std::string& what) : std::runtime_error(what) {}
};

namespace detail {

inline std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

inline std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

}  // namespace detail

// Registries of the gesture animations, facial emotes, and vocal-delivery tags
// the generator and renderer share, plus the fixed 94-entry feature vocabulary
// derived from them. Immutable after construction; concurrent reads are safe.
class BehaviorLexicon {
 public:
  static BehaviorLexicon standard();
  static BehaviorLexicon from_json(const nlohmann::json& doc);
  static BehaviorLexicon load(const std::filesystem::path& path);

  const std::vector<GestureSpec>& gestures() const { return gestures_; }
  const std::vector<FacialExpression>& facial() const { return facial_; }
  const std::vector<AudioTag>& audio() const { return audio_; }

  // 94 entries: gestures in library order, then facial and audio blocks,
  // each alphabetical by canonical name
  const std::vector<VocabEntry>& vocabulary() const { return vocab_; }

  std::vector<std::string> vocabulary_names() const {
    std::vector<std::string> out;
    out.reserve(vocab_.size());
    for (const auto& e : vocab_) out.push_back(e.name);
    return out;
  }

  // Case-insensitive, alias-aware lookup into the feature vocabulary.
  // Unknown names yield nullopt; they are values for the caller to report,
  // never errors.
  std::optional<int> resolve(std::string_view raw_name, Channel channel) const {
    const auto& map = map_for(channel);
    auto it = map.find(detail::lower(detail::trim(raw_name)));
    if (it == map.end()) return std::nullopt;
    return it->second;
  }

  const VocabEntry& entry(int index) const { return vocab_.at(index); }

  const GestureSpec* find_gesture(std::string_view name) const {
    auto idx = resolve(name, Channel::Gesture);
    if (!idx) return nullptr;
    return &gestures_[*idx];
  }

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json doc;
    doc["format"] = "bkit-lexicon";
    doc["version"] = 1;
    auto& gl = doc["gestures"] = nlohmann::ordered_json::array();
    for (const auto& g : gestures_) {
      gl.push_back({{"name", g.name}, {"description", g.description}, {"duration_s", g.duration_ms / 1000.0}});
    }
    auto& fl = doc["facial"] = nlohmann::ordered_json::array();
    for (const auto& f : facial_) fl.push_back({{"name", f.name}, {"aliases", f.aliases}});
    auto& al = doc["audio"] = nlohmann::ordered_json::array();
    for (const auto& a : audio_) al.push_back({{"name", a.name}, {"aliases", a.aliases}});
    return doc;
  }

  void save(const std::filesystem::path& path) const {
    std::ofstream out(path);
    if (!out) throw LexiconError("cannot write lexicon file: " + path.string());
    out << to_json().dump(2) << "\n";
  }

 private:
  BehaviorLexicon(std::vector<GestureSpec> gestures, std::vector<FacialExpression> facial,
                  std::vector<AudioTag> audio)
      : gestures_(std::move(gestures)), facial_(std::move(facial)), audio_(std::move(audio)) {
    validate();
    build_vocabulary();
  }

  void validate() const {
    if (gestures_.size() != kGestureCount) {
      throw LexiconError("gesture registry must contain exactly " + std::to_string(kGestureCount) +
                         " entries, got " + std::to_string(gestures_.size()));
    }
    if (facial_.size() != kFacialCount) {
      throw LexiconError("facial registry must contain exactly " + std::to_string(kFacialCount) +
                         " entries, got " + std::to_string(facial_.size()));
    }
    if (audio_.size() != kAudioCount) {
      throw LexiconError("audio registry must contain exactly " + std::to_string(kAudioCount) +
                         " entries, got " + std::to_string(audio_.size()));
    }
    std::unordered_map<std::string, int> seen;
    for (const auto& g : gestures_) {
      if (g.duration_ms <= 0) throw LexiconError("gesture '" + g.name + "' has non-positive duration");
      if (!seen.emplace(detail::lower(g.name), 1).second) {
        throw LexiconError("duplicate gesture name '" + g.name + "'");
      }
    }
  }

  void build_vocabulary() {
    // gesture block keeps library order; facial and audio blocks are sorted
    // alphabetically so indices are a pure function of the registries
    std::vector<int> fac_order(facial_.size()), aud_order(audio_.size());
    for (std::size_t i = 0; i < fac_order.size(); ++i) fac_order[i] = static_cast<int>(i);
    for (std::size_t i = 0; i < aud_order.size(); ++i) aud_order[i] = static_cast<int>(i);
    std::sort(fac_order.begin(), fac_order.end(),
              [&](int a, int b) { return facial_[a].name < facial_[b].name; });
    std::sort(aud_order.begin(), aud_order.end(),
              [&](int a, int b) { return audio_[a].name < audio_[b].name; });

    vocab_.clear();
    vocab_.reserve(kVocabularySize);
    for (std::size_t i = 0; i < gestures_.size(); ++i) {
      int idx = static_cast<int>(vocab_.size());  // == registry row for gestures
      vocab_.push_back({idx, Channel::Gesture, gestures_[i].name});
      gesture_map_[detail::lower(gestures_[i].name)] = idx;
    }
    for (int fi : fac_order) {
      int idx = static_cast<int>(vocab_.size());
      vocab_.push_back({idx, Channel::Facial, facial_[fi].name});
      facial_map_[detail::lower(facial_[fi].name)] = idx;
      for (const auto& alias : facial_[fi].aliases) facial_map_[detail::lower(alias)] = idx;
    }
    for (int ai : aud_order) {
      int idx = static_cast<int>(vocab_.size());
      vocab_.push_back({idx, Channel::Audio, audio_[ai].name});
      audio_map_[detail::lower(audio_[ai].name)] = idx;
      for (const auto& alias : audio_[ai].aliases) audio_map_[detail::lower(alias)] = idx;
    }
  }

  const std::unordered_map<std::string, int>& map_for(Channel c) const {
    switch (c) {
      case Channel::Gesture: return gesture_map_;
      case Channel::Facial: return facial_map_;
      case Channel::Audio: return audio_map_;
    }
    return gesture_map_;
  }

  std::vector<GestureSpec> gestures_;
  std::vector<FacialExpression> facial_;
  std::vector<AudioTag> audio_;
  std::vector<VocabEntry> vocab_;
  std::unordered_map<std::string, int> gesture_map_, facial_map_, audio_map_;

 public:
  // gesture vocabulary indices coincide with registry rows
  const GestureSpec& gesture_at_vocab(int vocab_index) const { return gestures_.at(vocab_index); }
};

inline BehaviorLexicon BehaviorLexicon::from_json(const nlohmann::json& doc) {
  std::vector<GestureSpec> gestures;
  if (!doc.contains("gestures") || !doc["gestures"].is_array()) {
    throw LexiconError("lexicon document missing 'gestures' array");
  }
  for (const auto& row : doc["gestures"]) {
    if (!row.contains("name") || !row.contains("description") || !row.contains("duration_s")) {
      throw LexiconError("gesture record needs name, description, duration_s");
    }
    double dur = row["duration_s"].get<double>();
    if (!(dur > 0)) throw LexiconError("gesture '" + row["name"].get<std::string>() + "' has non-positive duration");
    gestures.push_back({row["name"].get<std::string>(), row["description"].get<std::string>(),
                        static_cast<int>(std::lround(dur * 1000.0))});
  }

  auto parse_named = [&](const char* key, auto& out) {
    if (!doc.contains(key)) return false;
    for (const auto& row : doc[key]) {
      typename std::remove_reference_t<decltype(out)>::value_type item;
      item.name = row.at("name").template get<std::string>();
      if (row.contains("aliases")) {
        for (const auto& a : row["aliases"]) item.aliases.push_back(a.template get<std::string>());
      }
      out.push_back(std::move(item));
    }
    return true;
  };

  std::vector<FacialExpression> facial;
  std::vector<AudioTag> audio;
  BehaviorLexicon defaults = standard();
  if (!parse_named("facial", facial)) facial = defaults.facial();
  if (!parse_named("audio", audio)) audio = defaults.audio();
  return BehaviorLexicon(std::move(gestures), std::move(facial), std::move(audio));
}

inline BehaviorLexicon BehaviorLexicon::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw LexiconError("cannot open lexicon file: " + path.string());
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw LexiconError("malformed lexicon file " + path.string() + ": " + e.what());
  }
  return from_json(doc);
}

inline BehaviorLexicon BehaviorLexicon::standard() {
  std::vector<GestureSpec> gestures = {
      {"Defeated", "The character raises their arms and left foot, then slams them against the ground.", 6733},
      {"Joyful Jump", "The character jumps and bends their leg while raising their hands.", 1867},
      {"Offensive Idle", "The character shakes their legs and arms.", 10567},
      {"Clap", "The character claps their hands.", 2067},
      {"Arm Stretching", "The character stretches both arms.", 8867},
      {"Pointing Forward", "The character looks down, then points forward without punch.", 4700},
      {"Nervously Look Around", "The character looks around with shock.", 6267},
      {"Happy Idle", "The character looks up and bounces.", 2933},
      {"Surprised", "The character leans backward and raises their hand.", 4000},
      {"Telling a Secret (Left)", "The character leans toward the left and puts their hand in front of their mouth.", 10933},
      {"Telling a Secret (Right)", "The character leans toward the right and puts their hand in front of their mouth.", 10933},
      {"Thankful", "The character puts their right hand to their chest and leans a little.", 3000},
      {"Thoughtful Head Shake", "The character looks up and shakes their head \"no.\"", 3067},
      {"Standing Greeting", "The character waves and looks up.", 5100},
      {"Salute", "The character salutes militarily.", 2833},
      {"Look Over Shoulder (Left)", "The character looks over their shoulder toward the left quickly in a tense manner.", 3767},
      {"Look Over Shoulder (Right)", "The character looks over their shoulder toward the right quickly in a tense manner.", 3767},
      {"Acknowledging", "The character leans a little and performs a head nod.", 1933},
      {"Idle", "The character breathes without any particular gestures.", 8333},
      {"Talking", "The character has one arm on their hip and the other going side to side.", 5167},
      {"Look Around", "The character looks around with their limb close to their chest.", 4467},
      {"Loser", "The character leans forward and makes an \"L\" with their fingers.", 3267},
      {"Standing Arguing", "The character talks with tense arm gestures.", 20800},
      {"Pouting", "The character bends their knees slightly as if there is a weight on their shoulders.", 2967},
      {"Agreeing", "The character takes a step back and raises their hands with a tilted head.", 4700},
      {"Talking 2", "The character punctuates their speech with arm gestures.", 10267},
      {"Cocky Head Turn (Left)", "The character tilts their head and shoulder toward the left.", 2533},
      {"Cocky Head Turn (Right)", "The character tilts their head and shoulder toward the right.", 2533},
      {"Disappointed", "The character punches the air from left to right.", 4200},
      {"Yelling Out", "The character takes a step forward and extends their arm backward.", 4300},
      {"Lengthy Head Nod", "The character makes a big head nod, emphasized with their hands.", 1733},
      {"Dismissing Gesture", "The character makes a swiping hand gesture.", 3267},
      {"Look Around 2", "The character looks around at their hands and studies their own body.", 13333},
      {"Wiping Sweat", "The character wipes sweat from their face.", 2633},
      {"Looking Around", "The character looks around with uncertainty.", 6333},
      {"Searching Pocket (Left)", "The character searches their pocket and then points toward the left.", 5000},
      {"Searching Pocket (Right)", "The character searches their pocket and then points toward the right.", 5000},
      {"Look Nails", "The character looks at their nails.", 4433},
      {"Sad Idle", "The character looks down.", 4000},
      {"Quick Informal Bow", "The character bows.", 2733},
      {"Look Away Gesture (Left)", "The character points toward the left with their head.", 2333},
      {"Look Away Gesture (Right)", "The character points toward the right with their head.", 2333},
      {"No", "The character leans forward heavily and signals \"no\" with their finger.", 5000},
      {"Neutral Idle", "The character breathes with shoulder open and high.", 8767},
      {"Hard Head Nod", "The character makes a big head nod, emphasized with their hands.", 1633},
      {"Looking", "The character uses their hand as a visor to look far away.", 4867},
      {"Fist Pump", "The character fist-pumps the air.", 3800},
      {"Being Cocky", "The character leans backward with their hands forward.", 2900},
      {"Waving", "The character waves with their hand.", 4733},
      {"Looking 2", "The character leans heavily forward and uses their hand as a visor to look far away.", 8000},
      {"Bashful Idle", "Being bashful while standing.", 11000},
      {"Thinking", "The character thinks with one hand on the hip and one on the chin.", 4233},
      {"Shrugging", "The character lifts their shoulders and hands as if they do not know.", 2000},
      {"Shake Fist", "The character shakes a fist in the air.", 2433},
      {"Pointing", "The character points forward.", 2767},
      {"Agreeing 2", "The character makes a head nod signifying agreement.", 1833},
      {"Arm Gesture (Left)", "The character points toward the left with their hand and head.", 3400},
      {"Arm Gesture (Right)", "The character points toward the right with their hand and head.", 3400},
      {"Talking 3", "The character puts their palm up.", 3767},
      {"Yawn", "The character yawns with a hand in front of the mouth and one stretching.", 8333},
      {"Talking 4", "The character talks with hands on their hips and beat gestures.", 5933},
      {"Happy Idle 2", "The character swings with extended arms.", 10000},
      {"Head Nod Yes", "The character performs small head nods.", 2600},
      {"Hands Forward Gesture", "The character makes a forward movement with two hands with a little lean back.", 3100},
      {"Annoyed Head Shake", "The character shakes their head with a small, dismissive hand gesture.", 2567},
      {"Head Gesture", "The character makes a gesture from side to side with hands emphasizing each side.", 2800},
      {"Shaking Head No", "The character shakes their head \"no\" and looks down.", 1800},
      {"Looking Behind (Left)", "The character looks for a long time behind them on their left.", 4033},
      {"Looking Behind (Right)", "The character looks for a long time behind them on their right.", 4033},
      {"Bored Idle", "The character bounces their arms.", 10667},
      {"Laughing", "The character laughs with arm motion.", 9767},
      {"Waving 2", "The character waves with both arms.", 3167},
  };

  std::vector<FacialExpression> facial = {
      {"neutral", {}},
      {"scared", {"fear", "afraid"}},
      {"angry", {"anger"}},
      {"surprised", {"surprise"}},
      {"sad", {"sadness"}},
      {"disgusted", {"disgust"}},
      {"happy", {"happiness"}},
      {"confident", {"confidence"}},
      {"excited", {"excitement"}},
      {"playful", {}},
      {"bored", {"boredom"}},
      {"confused", {"confusion"}},
  };

  std::vector<AudioTag> audio = {
      {"pause", {"short pause", "long pause", "pauses"}},
      {"deep inhale", {"deep inhales", "inhale"}},
      {"sharp exhale", {"sharp exhales", "exhale"}},
      {"thoughtful", {"thoughtful intonation"}},
      {"urgent", {"urgent intonation"}},
      {"hesitant", {"hesitant intonation"}},
      {"confused intonation", {"confused"}},
      {"excited intonation", {"excited"}},
      {"whisper", {"whispers", "whispered", "whispering"}},
      {"clears throat", {"clear throat", "throat clearing"}},
  };

  return BehaviorLexicon(std::move(gestures), std::move(facial), std::move(audio));
}

}  // namespace bkit
