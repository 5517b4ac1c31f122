#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "comet/text_units.hpp"

namespace comet {

enum class DanmakuType {
  QA,
  Discussion,
  Highlight,
  Summary,
  EmotionExpression,
  Compliment,
  Encouragement,
  UserPosted,
};

/// The seven generated types in the order the response grammar lists them.
inline constexpr std::array<DanmakuType, 7> kGeneratedTypes = {
    DanmakuType::EmotionExpression, DanmakuType::Compliment, DanmakuType::Encouragement, DanmakuType::Discussion,
    DanmakuType::Highlight,         DanmakuType::QA,         DanmakuType::Summary,
};

/// Content and Emotion come from the taxonomy; User marks platform posts.
enum class Category { Content, Emotion, User };

enum class Position { Scroll, Top, Bottom };

struct Rgb {
  std::uint32_t value = 0xFFFFFF;

  static constexpr Rgb white() { return Rgb{0xFFFFFF}; }
  static constexpr Rgb red() { return Rgb{0xFF0000}; }
  static constexpr Rgb blue() { return Rgb{0x0000FF}; }
  bool operator==(const Rgb&) const = default;
};

Category category_of(DanmakuType type);

/// snake_case identifiers used in JSON files.
std::string_view type_id(DanmakuType type);
std::optional<DanmakuType> type_from_id(std::string_view id);
/// Section headings of the Markdown grammar ("Q&A", "Brief Compliment", ...).
std::string_view type_heading(DanmakuType type);
std::string_view category_id(Category c);
std::optional<Category> category_from_id(std::string_view id);
std::string_view position_id(Position p);
std::optional<Position> position_from_id(std::string_view id);

/// "#RRGGBB"
std::string color_hex(Rgb c);
std::optional<Rgb> color_from_hex(std::string_view text);

/// Repair keeps higher values; Highlight is the most valuable.
int type_priority(DanmakuType type);

struct Danmaku {
  std::string id;
  std::optional<char> persona;
  double time_s = 0;
  DanmakuType type = DanmakuType::Discussion;
  Category category = Category::Content;
  std::string text;
  Rgb color = Rgb::white();
  Position position = Position::Scroll;
  std::optional<std::string> reply_to;

  bool operator==(const Danmaku&) const = default;
};

/// Builds a record whose category and position follow from its type.
Danmaku make_danmaku(std::string id, std::optional<char> persona, double time_s, DanmakuType type, std::string text,
                     Rgb color = Rgb::white());

struct IntRange {
  int lo = 0;
  int hi = 0;
  bool operator==(const IntRange&) const = default;
};

struct GenerationConfig {
  int max_len_units = 12;
  double max_gap_s = 30;
  IntRange content_per_min{15, 25};
  IntRange emotion_per_min{5, 10};
  int highlights_per_min_min = 10;
  double qa_answer_delay_s = 2;
  std::vector<DanmakuType> enabled_types{kGeneratedTypes.begin(), kGeneratedTypes.end()};
  LengthUnit length_unit = LengthUnit::Words;
  /// Explicit override of the six-viewer default.
  int persona_count = 6;

  bool enabled(DanmakuType type) const;
  bool category_enabled(Category c) const;
  bool operator==(const GenerationConfig&) const = default;
};

/// Throws Error(InvalidInput) on a broken invariant.
void validate_config(const GenerationConfig& config);
std::string config_to_json(const GenerationConfig& config);
GenerationConfig config_from_json(std::string_view json_text);

struct DanmakuTrack {
  std::string video_id;
  std::vector<Danmaku> danmaku;
  std::string generated_at;
  std::string model_id;
  GenerationConfig config;

  const Danmaku* find(std::string_view id) const;
  bool operator==(const DanmakuTrack&) const = default;
};

/// Stable sort by time_s.
void sort_track(DanmakuTrack& track);

/// Throws Error(Corrupt) when the track breaks a Danmaku or track invariant.
/// A negative duration skips the time-bound check.
void check_track_invariants(const DanmakuTrack& track, double duration_s = -1);

std::string track_to_json(const DanmakuTrack& track);
/// Throws Error(Corrupt) on schema problems.
DanmakuTrack track_from_json(std::string_view json_text);

std::string danmaku_to_json(const Danmaku& d);

}  // namespace comet
