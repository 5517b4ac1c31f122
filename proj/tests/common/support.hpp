#pragma once

// Shared by the unit tests and the acceptance binary: fixture loading, the
// brute-force overlap simulation and generators for randomized valid values.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <random>
#include <string>
#include <vector>

#include "comet/danmaku.hpp"
#include "comet/persona.hpp"
#include "comet/scheduler.hpp"
#include "comet/store.hpp"
#include "comet/timecode.hpp"
#include "comet/track_parser.hpp"

namespace support {

inline std::string fixture_path(const std::string& name) { return std::string(COMET_FIXTURES) + "/" + name; }
inline std::string fixture(const std::string& name) { return comet::read_file(fixture_path(name)); }

// ---- simulation oracle -----------------------------------------------------

// Left edge of a scrolling item at time t, straight from the motion model:
// it starts at x = W and moves left at (W + w) / D.
inline double left_edge(const comet::LaneAssignment& a, const comet::ScreenConfig& s, double t) {
  const double v = (s.width_px + a.width_px) / s.scroll_duration_s;
  return s.width_px - v * (t - a.enter_s);
}

inline long tick_ceil(double t) { return static_cast<long>(std::ceil(t * 100.0 - 1e-6)); }
inline long tick_floor(double t) { return static_cast<long>(std::floor(t * 100.0 + 1e-6)); }

// Steps a 10 ms clock over the time both scrolling items are in flight and
// reports whether their horizontal spans ever overlap. Spans are not clipped
// to the screen.
inline bool sim_scroll_overlap(const comet::LaneAssignment& a, const comet::LaneAssignment& b,
                               const comet::ScreenConfig& s) {
  const double D = s.scroll_duration_s;
  const long lo = tick_ceil(std::max(a.enter_s, b.enter_s));
  const long hi = tick_floor(std::min(a.enter_s, b.enter_s) + D);
  for (long k = lo; k <= hi; ++k) {
    const double t = k / 100.0;
    const double la = left_edge(a, s, t);
    const double lb = left_edge(b, s, t);
    const double overlap = std::min(la + a.width_px, lb + b.width_px) - std::max(la, lb);
    if (overlap > 1e-6) return true;
  }
  return false;
}

// Pinned items sit still; two share a slot badly when some tick has both on
// screen (enter <= t < exit).
inline bool sim_pinned_overlap(const comet::LaneAssignment& a, const comet::LaneAssignment& b) {
  const long lo = tick_ceil(std::max(a.enter_s, b.enter_s));
  const long hi = tick_ceil(std::min(a.exit_s, b.exit_s)) - 1;
  return lo <= hi;
}

struct OverlapReport {
  long pairs_checked = 0;
  long overlaps = 0;
  double max_delay_s = 0;
};

inline OverlapReport scan_layout(const comet::DanmakuTrack& track, const std::vector<comet::LaneAssignment>& plan,
                                 const comet::ScreenConfig& s) {
  OverlapReport r;
  for (std::size_t i = 0; i < plan.size(); ++i) {
    const auto& a = plan[i];
    if (a.dropped) continue;
    if (const auto* d = track.find(a.danmaku_id)) r.max_delay_s = std::max(r.max_delay_s, a.enter_s - d->time_s);
    for (std::size_t j = i + 1; j < plan.size(); ++j) {
      const auto& b = plan[j];
      if (b.dropped || b.kind != a.kind || b.lane != a.lane) continue;
      ++r.pairs_checked;
      bool hit = a.kind == comet::LaneKind::Scroll ? sim_scroll_overlap(a, b, s) : sim_pinned_overlap(a, b);
      if (hit) ++r.overlaps;
    }
  }
  return r;
}

// ---- generators ------------------------------------------------------------

using Rng = std::mt19937_64;

inline int uniform(Rng& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }
inline bool chance(Rng& rng, double p) { return std::bernoulli_distribution(p)(rng); }

inline const std::vector<std::string>& word_pool() {
  static const std::vector<std::string> words = {
      "gradient", "descent", "loss",  "why?",   "nice!",  "so",     "the",  "rate",   "学习",  "梯度",
      "😂",       "💪",      "naïve", "x^2",    "a|b",    "50%",    "wait", "ok...",  "\"hm\"", "it's",
      "R&D",      "12:30",   "café",  "ñandú",  "→",      "(yes)",  "😆",   "step,",  "#1",    "Ünïcode"};
  return words;
}

// Non-empty, single spaces, no markup, no leading mention.
inline std::string random_text(Rng& rng, int max_words = 8) {
  const auto& pool = word_pool();
  const int n = uniform(rng, 1, max_words);
  std::string out;
  for (int i = 0; i < n; ++i) {
    if (i) out += ' ';
    out += pool[static_cast<std::size_t>(uniform(rng, 0, static_cast<int>(pool.size()) - 1))];
  }
  return out;
}

// Text for the interop XML: markup-significant characters included.
inline std::string random_xml_text(Rng& rng) {
  static const std::vector<std::string> extra = {"<b>", "a&b", "'q'", "\"dq\"", "x<y>z", "&amp;", "]]>"};
  std::string out = random_text(rng, 5);
  if (chance(rng, 0.5)) out += " " + extra[static_cast<std::size_t>(uniform(rng, 0, 6))];
  return out;
}

inline std::string random_field(Rng& rng) { return random_text(rng, 6); }

inline comet::PersonaSet random_personas(Rng& rng, int n, std::string video_id = "vid") {
  comet::PersonaSet set;
  set.video_id = std::move(video_id);
  for (int i = 0; i < n; ++i) {
    comet::Persona p;
    p.label = static_cast<char>('A' + i);
    p.age = uniform(rng, 10, 100);
    p.region = random_field(rng);
    p.personality = random_field(rng);
    p.danmaku_sending_style = random_field(rng);
    p.learning_habits = random_field(rng);
    p.reasons_for_watching = random_field(rng);
    set.personas.push_back(std::move(p));
  }
  return set;
}

inline comet::Rgb random_color(Rng& rng) {
  switch (uniform(rng, 0, 3)) {
    case 0: return comet::Rgb::white();
    case 1: return comet::Rgb::red();
    case 2: return comet::Rgb::blue();
    default: return comet::Rgb{static_cast<std::uint32_t>(uniform(rng, 0, 0xFFFFFF))};
  }
}

inline std::vector<std::int64_t> distinct_centis(Rng& rng, int n, std::int64_t max_cs) {
  std::vector<std::int64_t> out;
  while (static_cast<int>(out.size()) < n) {
    out.push_back(std::uniform_int_distribution<std::int64_t>(0, max_cs)(rng));
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
  }
  return out;
}

// A track that the Markdown grammar reproduces exactly: distinct times, ids
// in time order, replies aimed at the replied persona's latest record within
// the mention window, positions following the type.
inline comet::DanmakuTrack random_markdown_track(Rng& rng, const comet::PersonaSet& personas, double duration_s) {
  comet::DanmakuTrack track;
  track.video_id = personas.video_id;
  const int n = uniform(rng, 1, 40);
  auto times = distinct_centis(rng, n, static_cast<std::int64_t>(duration_s * 100));
  std::vector<std::pair<char, std::size_t>> latest;  // persona -> index of latest record
  for (int i = 0; i < n; ++i) {
    const double t = times[static_cast<std::size_t>(i)] / 100.0;
    char id[16];
    std::snprintf(id, sizeof id, "d%04d", i + 1);
    const bool user = chance(rng, 0.1);
    comet::DanmakuType type = user ? comet::DanmakuType::UserPosted
                                   : comet::kGeneratedTypes[static_cast<std::size_t>(uniform(rng, 0, 6))];
    std::optional<char> persona;
    if (!user) persona = personas.personas[static_cast<std::size_t>(uniform(rng, 0, (int)personas.personas.size() - 1))].label;
    auto d = comet::make_danmaku(id, persona, t, type, random_text(rng), random_color(rng));
    if (!user && !latest.empty() && chance(rng, 0.3)) {
      const auto& [label, idx] = latest[static_cast<std::size_t>(uniform(rng, 0, (int)latest.size() - 1))];
      if (t - track.danmaku[idx].time_s <= comet::kMentionWindowS) d.reply_to = track.danmaku[idx].id;
    }
    track.danmaku.push_back(d);
    if (persona) {
      auto it = std::find_if(latest.begin(), latest.end(), [&](const auto& e) { return e.first == *persona; });
      if (it == latest.end()) {
        latest.emplace_back(*persona, track.danmaku.size() - 1);
      } else {
        it->second = track.danmaku.size() - 1;
      }
    }
  }
  return track;
}

// Anything the JSON schema accepts: shared times, free positions, random
// config, metadata strings.
inline comet::DanmakuTrack random_json_track(Rng& rng, double duration_s) {
  comet::DanmakuTrack track;
  track.video_id = "v-" + std::to_string(uniform(rng, 0, 9999));
  track.generated_at = chance(rng, 0.5) ? "1970-01-01T00:00:00Z" : "2026-01-02T03:04:05Z";
  track.model_id = chance(rng, 0.5) ? "mock-lmm-1" : "model \"x\"";
  track.config.max_len_units = uniform(rng, 2, 40);
  track.config.max_gap_s = uniform(rng, 1, 120);
  track.config.content_per_min = {uniform(rng, 1, 10), uniform(rng, 10, 40)};
  track.config.emotion_per_min = {uniform(rng, 1, 5), uniform(rng, 5, 20)};
  track.config.highlights_per_min_min = uniform(rng, 1, 10);
  track.config.qa_answer_delay_s = uniform(rng, 1, 10);
  track.config.length_unit = chance(rng, 0.5) ? comet::LengthUnit::Words : comet::LengthUnit::Graphemes;
  track.config.persona_count = uniform(rng, 1, 26);
  if (chance(rng, 0.3)) {
    track.config.enabled_types = {comet::DanmakuType::Highlight, comet::DanmakuType::QA};
  }
  const int n = uniform(rng, 0, 30);
  std::vector<std::int64_t> times;
  for (int i = 0; i < n; ++i) times.push_back(uniform(rng, 0, static_cast<int>(duration_s * 100)));
  std::sort(times.begin(), times.end());
  for (int i = 0; i < n; ++i) {
    const bool user = chance(rng, 0.2);
    auto type = user ? comet::DanmakuType::UserPosted
                     : comet::kGeneratedTypes[static_cast<std::size_t>(uniform(rng, 0, 6))];
    std::optional<char> persona;
    if (!user) persona = static_cast<char>('A' + uniform(rng, 0, 25));
    auto d = comet::make_danmaku("id" + std::to_string(i), persona, times[static_cast<std::size_t>(i)] / 100.0, type,
                                 random_xml_text(rng), random_color(rng));
    if (type != comet::DanmakuType::Highlight) {
      d.position = static_cast<comet::Position>(uniform(rng, 0, 2));
    }
    if (i > 0 && chance(rng, 0.3)) d.reply_to = "id" + std::to_string(uniform(rng, 0, i - 1));
    track.danmaku.push_back(std::move(d));
  }
  return track;
}

// User posts only, ids u0001... in time order, which is what an import
// yields.
inline comet::DanmakuTrack random_xml_track(Rng& rng, double duration_s) {
  comet::DanmakuTrack track;
  track.video_id = "xml-vid";
  const int n = uniform(rng, 0, 30);
  std::vector<std::int64_t> times;
  for (int i = 0; i < n; ++i) times.push_back(uniform(rng, 0, static_cast<int>(duration_s * 100)));
  std::sort(times.begin(), times.end());
  for (int i = 0; i < n; ++i) {
    char id[16];
    std::snprintf(id, sizeof id, "u%04d", i + 1);
    auto d = comet::make_danmaku(id, std::nullopt, times[static_cast<std::size_t>(i)] / 100.0,
                                 comet::DanmakuType::UserPosted, random_xml_text(rng), random_color(rng));
    d.position = static_cast<comet::Position>(uniform(rng, 0, 2));
    track.danmaku.push_back(std::move(d));
  }
  return track;
}

// Dense random tracks for the layout properties.
inline comet::DanmakuTrack random_layout_track(Rng& rng, int n, double duration_s) {
  comet::DanmakuTrack track;
  track.video_id = "layout";
  std::vector<std::int64_t> times;
  for (int i = 0; i < n; ++i) times.push_back(uniform(rng, 0, static_cast<int>(duration_s * 100)));
  std::sort(times.begin(), times.end());
  for (int i = 0; i < n; ++i) {
    const bool user = chance(rng, 0.1);
    auto type = user ? comet::DanmakuType::UserPosted
                     : comet::kGeneratedTypes[static_cast<std::size_t>(uniform(rng, 0, 6))];
    std::optional<char> persona;
    if (!user) persona = 'A';
    std::string text = random_text(rng, 10);
    if (chance(rng, 0.05)) text += " " + random_text(rng, 30) + " " + random_text(rng, 30);
    auto d = comet::make_danmaku("r" + std::to_string(i), persona, times[static_cast<std::size_t>(i)] / 100.0, type,
                                 text);
    if (user) d.position = static_cast<comet::Position>(uniform(rng, 0, 2));
    track.danmaku.push_back(std::move(d));
  }
  return track;
}

inline comet::LaneAssignment scroll_item(double enter_s, int width_px, const comet::ScreenConfig& s = {}) {
  comet::LaneAssignment a;
  a.danmaku_id = "x";
  a.enter_s = enter_s;
  a.exit_s = enter_s + s.scroll_duration_s;
  a.width_px = width_px;
  a.speed_px_s = (s.width_px + width_px) / s.scroll_duration_s;
  return a;
}

}  // namespace support
