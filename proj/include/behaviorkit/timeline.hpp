#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "behaviorkit/lexicon.hpp"
#include "behaviorkit/transcript.hpp"

namespace bkit {

class TimelineError : public std::runtime_error {
 public:
  explicit TimelineError(const std::string& what) : std::runtime_error(what) {}
};

enum class TimelineChannel { Gesture, Face, Voice };

inline const char* to_string(TimelineChannel c) {
  switch (c) {
    case TimelineChannel::Gesture: return "gesture";
    case TimelineChannel::Face: return "face";
    case TimelineChannel::Voice: return "voice";
  }
  return "?";
}

// All times are integer milliseconds so exported documents diff bit-exactly.
struct TimelineEvent {
  TimelineChannel channel;
  std::string name;   // canonical lexicon name
  long start_ms = 0;
  long dur_ms = 0;

  bool operator==(const TimelineEvent&) const = default;
};

struct SpeechInterval {
  std::string word;
  long start_ms = 0;
  long end_ms = 0;

  bool operator==(const SpeechInterval&) const = default;
};

struct DroppedTag {
  std::string channel;
  std::string name;
  long offset = 0;     // byte offset of the tag in the source
  std::string reason;

  bool operator==(const DroppedTag&) const = default;
};

struct BehaviorTimeline {
  std::vector<TimelineEvent> events;
  std::vector<SpeechInterval> speech;
  std::vector<DroppedTag> drops;
  long total_ms = 0;

  bool operator==(const BehaviorTimeline&) const = default;
};

enum class OverlapPolicy { Queue, CutPrevious, DropNew };

inline const char* to_string(OverlapPolicy p) {
  switch (p) {
    case OverlapPolicy::Queue: return "queue";
    case OverlapPolicy::CutPrevious: return "cut-previous";
    case OverlapPolicy::DropNew: return "drop-new";
  }
  return "?";
}

inline std::optional<OverlapPolicy> parse_overlap_policy(std::string_view s) {
  if (s == "queue") return OverlapPolicy::Queue;
  if (s == "cut-previous") return OverlapPolicy::CutPrevious;
  if (s == "drop-new") return OverlapPolicy::DropNew;
  return std::nullopt;
}

struct TimingConfig {
  double words_per_minute = 160.0;
  long pause_ms = 400;        // inserted at each pause tag and each ellipsis
  OverlapPolicy overlap = OverlapPolicy::Queue;
  bool strict = false;        // unknown tag names become errors instead of drops
};

// Compiles a parsed transcript into a renderer-agnostic schedule. Words get
// constant-rate timing; gesture events start at the word boundary where their
// tag sits, with durations from the lexicon; face events hold until the next
// face event; voice tags span the following text segment. Every tag ends up
// as exactly one event or one recorded drop.
inline BehaviorTimeline compile(const AugmentedTranscript& transcript, const BehaviorLexicon& lex,
                                const TimingConfig& cfg = {}) {
  if (cfg.words_per_minute <= 0) throw TimelineError("words_per_minute must be positive");
  if (cfg.pause_ms < 0) throw TimelineError("pause_ms must be nonnegative");
  const long word_ms = std::lround(60000.0 / cfg.words_per_minute);

  BehaviorTimeline tl;
  long cursor = 0;
  int last_gesture = -1;                 // index into tl.events
  std::vector<int> open_faces;           // face events waiting for their end
  std::vector<int> open_voices;          // voice events spanning the next text
  std::vector<char> removed;             // tombstones, compacted before returning

  auto add_event = [&](TimelineEvent e) {
    tl.events.push_back(std::move(e));
    removed.push_back(0);
    return static_cast<int>(tl.events.size()) - 1;
  };
  auto close_voices = [&](long end) {
    for (int idx : open_voices) {
      tl.events[idx].dur_ms = std::max<long>(1, end - tl.events[idx].start_ms);
    }
    open_voices.clear();
  };

  for (const auto& seg : transcript.segments) {
    switch (seg.kind) {
      case SegmentKind::Text: {
        std::istringstream words(seg.raw);
        std::string word;
        while (words >> word) {
          tl.speech.push_back({word, cursor, cursor + word_ms});
          cursor += word_ms;
          // trailing-off: each ellipsis inside the word adds a pause after it
          for (std::size_t p = 0; p + 3 <= word.size();) {
            if (word.compare(p, 3, "...") == 0) {
              cursor += cfg.pause_ms;
              p += 3;
            } else {
              ++p;
            }
          }
        }
        close_voices(cursor);
        break;
      }
      case SegmentKind::GestureTag: {
        auto idx = lex.resolve(seg.payload, Channel::Gesture);
        if (!idx) {
          if (cfg.strict) {
            throw TimelineError("unknown gesture name '" + seg.payload + "' at offset " +
                                std::to_string(seg.char_offset));
          }
          tl.drops.push_back({"gesture", seg.payload, static_cast<long>(seg.char_offset),
                              "unknown gesture name"});
          break;
        }
        const GestureSpec& spec = lex.gesture_at_vocab(*idx);
        long start = cursor;
        if (last_gesture >= 0) {
          TimelineEvent& prev = tl.events[last_gesture];
          const long prev_end = prev.start_ms + prev.dur_ms;
          if (start < prev_end) {
            switch (cfg.overlap) {
              case OverlapPolicy::Queue:
                start = prev_end;
                break;
              case OverlapPolicy::CutPrevious:
                if (start <= prev.start_ms) {
                  tl.drops.push_back({"gesture", prev.name, static_cast<long>(seg.char_offset),
                                      "cut to zero length by " + spec.name});
                  removed[last_gesture] = 1;
                  last_gesture = -1;
                } else {
                  prev.dur_ms = start - prev.start_ms;
                }
                break;
              case OverlapPolicy::DropNew:
                tl.drops.push_back({"gesture", spec.name, static_cast<long>(seg.char_offset),
                                    "overlaps active gesture " + prev.name});
                goto next_segment;
            }
          }
        }
        last_gesture = add_event({TimelineChannel::Gesture, spec.name, start, spec.duration_ms});
        break;
      }
      case SegmentKind::FacialTag: {
        auto idx = lex.resolve(seg.payload, Channel::Facial);
        if (!idx) {
          if (cfg.strict) {
            throw TimelineError("unknown facial expression '" + seg.payload + "' at offset " +
                                std::to_string(seg.char_offset));
          }
          tl.drops.push_back({"face", seg.payload, static_cast<long>(seg.char_offset),
                              "unknown facial expression"});
          break;
        }
        // previous face holds until this one starts
        for (int open : open_faces) {
          tl.events[open].dur_ms = std::max<long>(1, cursor - tl.events[open].start_ms);
        }
        open_faces.clear();
        open_faces.push_back(add_event({TimelineChannel::Face, lex.entry(*idx).name, cursor, 0}));
        break;
      }
      case SegmentKind::AudioTag: {
        auto idx = lex.resolve(seg.payload, Channel::Audio);
        if (!idx) {
          if (cfg.strict) {
            throw TimelineError("unknown audio tag '" + seg.payload + "' at offset " +
                                std::to_string(seg.char_offset));
          }
          tl.drops.push_back({"voice", seg.payload, static_cast<long>(seg.char_offset),
                              "unknown audio tag"});
          break;
        }
        const std::string& name = lex.entry(*idx).name;
        if (name == "pause") {
          add_event({TimelineChannel::Voice, name, cursor, cfg.pause_ms});
          cursor += cfg.pause_ms;
        } else {
          open_voices.push_back(add_event({TimelineChannel::Voice, name, cursor, 0}));
        }
        break;
      }
    }
  next_segment:;
  }

  close_voices(cursor);
  long total = tl.speech.empty() ? cursor : std::max(cursor, tl.speech.back().end_ms);
  for (std::size_t i = 0; i < tl.events.size(); ++i) {
    if (!removed[i]) total = std::max(total, tl.events[i].start_ms + tl.events[i].dur_ms);
  }
  // a trailing face expression holds to the end of the timeline
  for (int open : open_faces) {
    tl.events[open].dur_ms = std::max<long>(1, total - tl.events[open].start_ms);
    total = std::max(total, tl.events[open].start_ms + tl.events[open].dur_ms);
  }

  std::vector<TimelineEvent> kept;
  kept.reserve(tl.events.size());
  for (std::size_t i = 0; i < tl.events.size(); ++i) {
    if (!removed[i]) kept.push_back(std::move(tl.events[i]));
  }
  tl.events = std::move(kept);
  tl.total_ms = total;

  std::stable_sort(tl.events.begin(), tl.events.end(),
                   [](const TimelineEvent& a, const TimelineEvent& b) {
                     return a.start_ms < b.start_ms;
                   });
  return tl;
}

// ---------------------------------------------------------------------------
// Versioned document format
// ---------------------------------------------------------------------------

inline nlohmann::ordered_json timeline_to_json(const BehaviorTimeline& tl) {
  nlohmann::ordered_json doc;
  doc["format"] = "bkit-timeline";
  doc["version"] = 1;
  doc["total_ms"] = tl.total_ms;
  auto& events = doc["events"] = nlohmann::ordered_json::array();
  for (const auto& e : tl.events) {
    events.push_back({{"channel", to_string(e.channel)},
                      {"name", e.name},
                      {"start_ms", e.start_ms},
                      {"dur_ms", e.dur_ms}});
  }
  auto& speech = doc["speech"] = nlohmann::ordered_json::array();
  for (const auto& w : tl.speech) {
    speech.push_back({{"word", w.word}, {"start_ms", w.start_ms}, {"end_ms", w.end_ms}});
  }
  auto& drops = doc["drops"] = nlohmann::ordered_json::array();
  for (const auto& d : tl.drops) {
    drops.push_back({{"channel", d.channel},
                     {"name", d.name},
                     {"offset", d.offset},
                     {"reason", d.reason}});
  }
  return doc;
}

inline void export_timeline(const BehaviorTimeline& tl, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw TimelineError("cannot write timeline file: " + path.string());
  out << timeline_to_json(tl).dump(2) << "\n";
}

inline BehaviorTimeline timeline_from_json(const nlohmann::json& doc) {
  if (doc.value("format", "") != "bkit-timeline") throw TimelineError("not a bkit-timeline file");
  if (doc.value("version", 0) != 1) throw TimelineError("unsupported timeline version");
  BehaviorTimeline tl;
  tl.total_ms = doc.at("total_ms").get<long>();
  for (const auto& je : doc.at("events")) {
    TimelineEvent e;
    const std::string ch = je.at("channel").get<std::string>();
    if (ch == "gesture") e.channel = TimelineChannel::Gesture;
    else if (ch == "face") e.channel = TimelineChannel::Face;
    else if (ch == "voice") e.channel = TimelineChannel::Voice;
    else throw TimelineError("unknown event channel '" + ch + "'");
    e.name = je.at("name").get<std::string>();
    e.start_ms = je.at("start_ms").get<long>();
    e.dur_ms = je.at("dur_ms").get<long>();
    tl.events.push_back(std::move(e));
  }
  for (const auto& jw : doc.at("speech")) {
    tl.speech.push_back({jw.at("word").get<std::string>(), jw.at("start_ms").get<long>(),
                         jw.at("end_ms").get<long>()});
  }
  for (const auto& jd : doc.at("drops")) {
    tl.drops.push_back({jd.at("channel").get<std::string>(), jd.at("name").get<std::string>(),
                        jd.at("offset").get<long>(), jd.at("reason").get<std::string>()});
  }
  return tl;
}

inline BehaviorTimeline import_timeline(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw TimelineError("cannot open timeline file: " + path.string());
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw TimelineError(std::string("malformed timeline file: ") + e.what());
  }
  return timeline_from_json(doc);
}

}  // namespace bkit
