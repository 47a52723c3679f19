#pragma once

#include <cctype>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace bkit {

enum class SegmentKind { Text, FacialTag, GestureTag, AudioTag };

// One parsed piece of a speech turn. `payload` is the trimmed tag name (or the
// text itself); `raw` is the exact source substring including delimiters, so
// concatenating raws reproduces the source byte for byte.
struct Segment {
  SegmentKind kind;
  std::string payload;
  std::size_t char_offset = 0;
  std::string raw;

  bool operator==(const Segment& o) const { return kind == o.kind && payload == o.payload; }
};

struct AugmentedTranscript {
  std::vector<Segment> segments;
  std::string source;
};

class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t offset, const std::string& what)
      : std::runtime_error("offset " + std::to_string(offset) + ": " + what), offset_(offset) {}
  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

enum class EmphasisKind { Caps, Ellipsis, ExclamationOrQuestion, Repetition };

// Byte span [begin, end) into the transcript source; spans always lie inside
// Text segments.
struct EmphasisAnnotation {
  std::size_t begin;
  std::size_t end;
  EmphasisKind kind;
};

namespace detail {

inline std::string trim_copy(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

}  // namespace detail

// Single-pass character tokenizer. Kept free of regular expressions so every
// diagnostic carries the exact byte offset of the offending delimiter.
inline AugmentedTranscript parse(std::string_view source) {
  AugmentedTranscript out;
  out.source.assign(source);

  std::size_t i = 0;
  std::size_t text_start = 0;

  auto flush_text = [&](std::size_t end) {
    if (end > text_start) {
      std::string text(source.substr(text_start, end - text_start));
      out.segments.push_back({SegmentKind::Text, text, text_start, text});
    }
  };

  while (i < source.size()) {
    const char c = source[i];
    if (c == '{') {
      flush_text(i);
      const std::size_t open = i;
      // tag shape is fixed: '{' immediately followed by 'f:' or 'g:'
      const bool has_prefix = i + 2 < source.size() &&
                              (source[i + 1] == 'f' || source[i + 1] == 'g') && source[i + 2] == ':';
      if (!has_prefix) {
        std::size_t probe = source.find('}', i);
        if (probe == std::string_view::npos) throw ParseError(open, "unbalanced '{': missing '}'");
        throw ParseError(open, "brace tag without 'f:' or 'g:' prefix: \"" +
                                   std::string(source.substr(i, probe - i + 1)) + "\"");
      }
      const SegmentKind kind =
          source[i + 1] == 'f' ? SegmentKind::FacialTag : SegmentKind::GestureTag;
      std::size_t j = i + 3;
      while (j < source.size() && source[j] != '}') {
        if (source[j] == '{' || source[j] == '[') throw ParseError(j, "nested tag inside brace tag");
        if (source[j] == ']') throw ParseError(j, "unbalanced ']' inside brace tag");
        ++j;
      }
      if (j == source.size()) throw ParseError(open, "unbalanced '{': missing '}'");
      std::string payload = detail::trim_copy(source.substr(i + 3, j - (i + 3)));
      if (payload.empty()) throw ParseError(open, "empty tag name");
      out.segments.push_back({kind, payload, open, std::string(source.substr(open, j - open + 1))});
      i = j + 1;
      text_start = i;
    } else if (c == '[') {
      flush_text(i);
      const std::size_t open = i;
      std::size_t j = i + 1;
      while (j < source.size() && source[j] != ']') {
        if (source[j] == '{' || source[j] == '[') throw ParseError(j, "nested tag inside audio tag");
        if (source[j] == '}') throw ParseError(j, "unbalanced '}' inside audio tag");
        ++j;
      }
      if (j == source.size()) throw ParseError(open, "unbalanced '[': missing ']'");
      std::string payload = detail::trim_copy(source.substr(i + 1, j - (i + 1)));
      if (payload.empty()) throw ParseError(open, "empty tag name");
      out.segments.push_back(
          {SegmentKind::AudioTag, payload, open, std::string(source.substr(open, j - open + 1))});
      i = j + 1;
      text_start = i;
    } else if (c == '}' || c == ']') {
      throw ParseError(i, std::string("unbalanced '") + c + "' without opener");
    } else {
      ++i;
    }
  }
  flush_text(source.size());
  return out;
}

// Inverse of parse: concatenates segment raws. serialize(parse(s)) == s.
inline std::string serialize(const AugmentedTranscript& t) {
  std::string out;
  out.reserve(t.source.size());
  for (const auto& seg : t.segments) out += seg.raw;
  return out;
}

// Canonical segment constructors for programmatic transcript assembly.
inline Segment text_segment(std::string text) {
  Segment s{SegmentKind::Text, text, 0, text};
  return s;
}

inline Segment tag_segment(SegmentKind kind, const std::string& name) {
  Segment s;
  s.kind = kind;
  s.payload = name;
  switch (kind) {
    case SegmentKind::FacialTag: s.raw = "{f: " + name + "}"; break;
    case SegmentKind::GestureTag: s.raw = "{g: " + name + "}"; break;
    case SegmentKind::AudioTag: s.raw = "[" + name + "]"; break;
    case SegmentKind::Text: s.raw = name; break;
  }
  return s;
}

inline AugmentedTranscript from_segments(std::vector<Segment> segments) {
  AugmentedTranscript t;
  std::size_t offset = 0;
  for (auto& seg : segments) {
    seg.char_offset = offset;
    offset += seg.raw.size();
    t.source += seg.raw;
  }
  t.segments = std::move(segments);
  return t;
}

// Emphasis devices are annotations only; they never enter the feature vector.
// Caps requires a whole word of >=2 uppercase letters, so "I" and "A" never
// match. Repetition fires on immediately doubled words ("yeah, yeah"), a
// deliberately narrow heuristic.
inline std::vector<EmphasisAnnotation> detect_emphasis(const AugmentedTranscript& t) {
  std::vector<EmphasisAnnotation> out;
  auto is_letter = [](char c) {
    return std::isalpha(static_cast<unsigned char>(c)) != 0;
  };
  auto is_upper = [](char c) {
    return std::isupper(static_cast<unsigned char>(c)) != 0;
  };

  for (const auto& seg : t.segments) {
    if (seg.kind != SegmentKind::Text) continue;
    const std::string& s = seg.raw;
    const std::size_t base = seg.char_offset;

    // capitalized words
    std::size_t i = 0;
    while (i < s.size()) {
      if (is_upper(s[i])) {
        std::size_t j = i;
        while (j < s.size() && is_upper(s[j])) ++j;
        const bool starts_word = i == 0 || !is_letter(s[i - 1]);
        const bool ends_word = j == s.size() || !is_letter(s[j]);
        if (j - i >= 2 && starts_word && ends_word) {
          out.push_back({base + i, base + j, EmphasisKind::Caps});
        }
        i = j;
      } else {
        ++i;
      }
    }

    // ellipses, non-overlapping left to right
    for (std::size_t k = 0; k + 3 <= s.size();) {
      if (s[k] == '.' && s[k + 1] == '.' && s[k + 2] == '.') {
        out.push_back({base + k, base + k + 3, EmphasisKind::Ellipsis});
        k += 3;
      } else {
        ++k;
      }
    }

    // sharpening punctuation
    for (std::size_t k = 0; k < s.size(); ++k) {
      if (s[k] == '!' || s[k] == '?') {
        out.push_back({base + k, base + k + 1, EmphasisKind::ExclamationOrQuestion});
      }
    }

    // doubled words, optionally separated by a comma
    std::size_t w = 0;
    while (w < s.size()) {
      if (!is_letter(s[w])) {
        ++w;
        continue;
      }
      std::size_t we = w;
      while (we < s.size() && (is_letter(s[we]) || s[we] == '\'')) ++we;
      std::size_t gap = we;
      if (gap < s.size() && s[gap] == ',') ++gap;
      std::size_t spaces = gap;
      while (spaces < s.size() && s[spaces] == ' ') ++spaces;
      if (spaces > gap && spaces < s.size() && is_letter(s[spaces])) {
        std::size_t w2e = spaces;
        while (w2e < s.size() && (is_letter(s[w2e]) || s[w2e] == '\'')) ++w2e;
        if (w2e - spaces == we - w) {
          bool equal = true;
          for (std::size_t k = 0; k < we - w; ++k) {
            if (std::tolower(static_cast<unsigned char>(s[w + k])) !=
                std::tolower(static_cast<unsigned char>(s[spaces + k]))) {
              equal = false;
              break;
            }
          }
          if (equal) out.push_back({base + w, base + w2e, EmphasisKind::Repetition});
        }
      }
      w = we;
    }
  }
  return out;
}

}  // namespace bkit
