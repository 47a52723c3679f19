#include <catch2/catch_amalgamated.hpp>

#include "behaviorkit/rng.hpp"
#include "behaviorkit/transcript.hpp"
#include "corpus_rows.hpp"

using namespace bkit;

TEST_CASE("reference low-ability row parses into the expected tag sequence") {
  auto t = parse(rows::kLowAbility);

  std::vector<std::pair<SegmentKind, std::string>> tags;
  for (const auto& seg : t.segments) {
    if (seg.kind != SegmentKind::Text) tags.emplace_back(seg.kind, seg.payload);
  }
  REQUIRE(tags.size() == 5);
  CHECK(tags[0] == std::make_pair(SegmentKind::FacialTag, std::string("confused")));
  CHECK(tags[1] == std::make_pair(SegmentKind::AudioTag, std::string("thoughtful")));
  CHECK(tags[2] == std::make_pair(SegmentKind::GestureTag, std::string("Arm Gesture (Left)")));
  CHECK(tags[3] == std::make_pair(SegmentKind::FacialTag, std::string("neutral")));
  CHECK(tags[4] == std::make_pair(SegmentKind::AudioTag, std::string("short pause")));

  // text preserved verbatim between tags, including pure whitespace runs
  CHECK(t.segments[1].kind == SegmentKind::Text);
  CHECK(t.segments[1].raw == " ");
  CHECK(t.segments[3].kind == SegmentKind::Text);
  CHECK(t.segments[3].raw == " Uh... ");
}

TEST_CASE("all reference rows round-trip byte-exactly") {
  for (const auto& row : rows::all()) {
    auto t = parse(row);
    CHECK(serialize(t) == row);
    CHECK(t.source == row);
  }
}

TEST_CASE("empty input yields an empty transcript") {
  auto t = parse("");
  CHECK(t.segments.empty());
  CHECK(serialize(t).empty());
}

TEST_CASE("segment offsets are non-decreasing and payloads trimmed") {
  auto t = parse("{f:confused}a{f: confused }b");
  REQUIRE(t.segments.size() == 4);
  CHECK(t.segments[0].payload == "confused");
  CHECK(t.segments[2].payload == "confused");
  CHECK(t.segments[0].payload == t.segments[2].payload);
  std::size_t prev = 0;
  for (const auto& seg : t.segments) {
    CHECK(seg.char_offset >= prev);
    prev = seg.char_offset;
  }
}

TEST_CASE("parse errors carry exact offsets") {
  SECTION("unbalanced brace") {
    try {
      parse("{f: happy");
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(e.offset() == 0);
    }
  }
  SECTION("unbalanced bracket") {
    try {
      parse("ok [pause");
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(e.offset() == 3);
    }
  }
  SECTION("brace tag without prefix") {
    try {
      parse("ab{x: foo}");
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(e.offset() == 2);
      CHECK(std::string(e.what()).find("{x: foo}") != std::string::npos);
    }
  }
  SECTION("stray closers") {
    CHECK_THROWS_AS(parse("a } b"), ParseError);
    CHECK_THROWS_AS(parse("a ] b"), ParseError);
  }
  SECTION("nested tags") {
    CHECK_THROWS_AS(parse("[a [b]]"), ParseError);
    CHECK_THROWS_AS(parse("{f: x {g: y}}"), ParseError);
    CHECK_THROWS_AS(parse("[a {f: b}]"), ParseError);
  }
  SECTION("empty tag name") {
    CHECK_THROWS_AS(parse("{f: }"), ParseError);
    CHECK_THROWS_AS(parse("[ ]"), ParseError);
  }
}

TEST_CASE("tag count conservation against a raw string scan") {
  const std::string source = rows::kHighBenevolence;
  auto t = parse(source);
  auto count_occurrences = [&](const std::string& needle) {
    std::size_t n = 0, pos = 0;
    while ((pos = source.find(needle, pos)) != std::string::npos) {
      ++n;
      pos += needle.size();
    }
    return n;
  };
  std::size_t facial = 0, gesture = 0, audio = 0;
  for (const auto& seg : t.segments) {
    facial += seg.kind == SegmentKind::FacialTag;
    gesture += seg.kind == SegmentKind::GestureTag;
    audio += seg.kind == SegmentKind::AudioTag;
  }
  CHECK(facial == count_occurrences("{f:"));
  CHECK(gesture == count_occurrences("{g:"));
  CHECK(audio == count_occurrences("["));
}

namespace {

// random transcript generator for the round-trip property
std::string random_transcript(Rng& rng) {
  static const std::vector<std::string> words = {"go",   "left", "safe", "now",  "the",
                                                 "exit", "Uh",   "yes",  "road", "QUICK"};
  static const std::vector<std::string> names = {"confident", "Arm Gesture (Left)", "pause",
                                                 "short pause", "Head Nod Yes", "weird name",
                                                 "x", "thoughtful"};
  std::string out;
  const int pieces = rng.range(0, 12);
  for (int i = 0; i < pieces; ++i) {
    switch (rng.index(4)) {
      case 0: {  // text run
        const int n = rng.range(1, 4);
        for (int w = 0; w < n; ++w) {
          out += words[rng.index((int)words.size())];
          if (rng.chance(0.3)) out += "...";
          if (rng.chance(0.2)) out += "!";
          out += rng.chance(0.8) ? " " : ", ";
        }
        break;
      }
      case 1:
        out += "{f:" + std::string(rng.chance(0.5) ? " " : "") + names[rng.index((int)names.size())] +
               std::string(rng.chance(0.3) ? " " : "") + "}";
        break;
      case 2:
        out += "{g: " + names[rng.index((int)names.size())] + "}";
        break;
      case 3:
        out += "[" + names[rng.index((int)names.size())] + "]";
        break;
    }
  }
  return out;
}

}  // namespace

TEST_CASE("round-trip property over randomized transcripts") {
  Rng rng(20240817);
  for (int i = 0; i < 2000; ++i) {
    const std::string source = random_transcript(rng);
    AugmentedTranscript t;
    REQUIRE_NOTHROW(t = parse(source));
    REQUIRE(serialize(t) == source);
  }
}

TEST_CASE("programmatic construction re-parses to equal segments") {
  Rng rng(7);
  for (int i = 0; i < 300; ++i) {
    std::vector<Segment> segs;
    const int n = rng.range(1, 8);
    bool last_text = false;
    for (int j = 0; j < n; ++j) {
      switch (rng.index(4)) {
        case 0:
          if (!last_text) {
            segs.push_back(text_segment(" some text " + std::to_string(j) + " "));
            last_text = true;
          }
          break;
        case 1:
          segs.push_back(tag_segment(SegmentKind::FacialTag, "confident"));
          last_text = false;
          break;
        case 2:
          segs.push_back(tag_segment(SegmentKind::GestureTag, "Clap"));
          last_text = false;
          break;
        case 3:
          segs.push_back(tag_segment(SegmentKind::AudioTag, "pause"));
          last_text = false;
          break;
      }
    }
    auto t = from_segments(segs);
    auto back = parse(serialize(t));
    REQUIRE(back.segments.size() == t.segments.size());
    for (std::size_t s = 0; s < t.segments.size(); ++s) {
      CHECK(back.segments[s] == t.segments[s]);
    }
  }
}

TEST_CASE("emphasis detection") {
  SECTION("caps on whole words of two or more letters") {
    auto t = parse("QUICKLY.");
    auto ann = detect_emphasis(t);
    REQUIRE(ann.size() >= 1);
    bool caps_found = false;
    for (const auto& a : ann) {
      if (a.kind == EmphasisKind::Caps) {
        caps_found = true;
        CHECK(t.source.substr(a.begin, a.end - a.begin) == "QUICKLY");
      }
    }
    CHECK(caps_found);
  }
  SECTION("no emphasis in plain lowercase text") {
    CHECK(detect_emphasis(parse("go left")).empty());
  }
  SECTION("single-letter capitals are not emphasis") {
    for (const auto& a : detect_emphasis(parse("I am A thing"))) {
      CHECK(a.kind != EmphasisKind::Caps);
    }
  }
  SECTION("mixed-case words are not caps emphasis") {
    for (const auto& a : detect_emphasis(parse("McDONALD said"))) {
      CHECK(a.kind != EmphasisKind::Caps);
    }
  }
  SECTION("reference high-ability row has exactly one caps annotation: LEFT") {
    auto t = parse(rows::kHighAbility);
    int caps = 0;
    for (const auto& a : detect_emphasis(t)) {
      if (a.kind == EmphasisKind::Caps) {
        ++caps;
        CHECK(t.source.substr(a.begin, a.end - a.begin) == "LEFT");
      }
    }
    CHECK(caps == 1);
  }
  SECTION("ellipses and punctuation") {
    auto t = parse("Uh... fine? go now!");
    int ellipsis = 0, punct = 0;
    for (const auto& a : detect_emphasis(t)) {
      ellipsis += a.kind == EmphasisKind::Ellipsis;
      punct += a.kind == EmphasisKind::ExclamationOrQuestion;
    }
    CHECK(ellipsis == 1);
    CHECK(punct == 2);
  }
  SECTION("doubled words") {
    auto t = parse("yeah, yeah we go");
    bool rep = false;
    for (const auto& a : detect_emphasis(t)) {
      if (a.kind == EmphasisKind::Repetition) {
        rep = true;
        CHECK(t.source.substr(a.begin, a.end - a.begin) == "yeah, yeah");
      }
    }
    CHECK(rep);
    CHECK(detect_emphasis(parse("go left, yeah, follow")).empty());
  }
  SECTION("spans lie inside text segments only") {
    auto t = parse(rows::kLowAbility);
    for (const auto& a : detect_emphasis(t)) {
      bool inside = false;
      for (const auto& seg : t.segments) {
        if (seg.kind == SegmentKind::Text && a.begin >= seg.char_offset &&
            a.end <= seg.char_offset + seg.raw.size()) {
          inside = true;
          break;
        }
      }
      CHECK(inside);
    }
  }
}
