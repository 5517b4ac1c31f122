#pragma once

#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "comet/danmaku.hpp"

namespace comet {

struct ScreenConfig {
  int width_px = 1280;
  int lane_count = 12;
  int lane_height_px = 32;
  double scroll_duration_s = 8;
  double pinned_duration_s = 4;
  int font_size = 25;
  /// Concurrent slots for each pinned row (top and bottom).
  int pinned_slots = 3;
  /// Replaces the built-in width estimate when set (e.g. measured widths).
  std::function<int(std::string_view)> measure;

  /// Pixel width of a text: ASCII graphemes count 0.6 font sizes, all
  /// others a full font size.
  int text_width(std::string_view text) const;
};

enum class LaneKind { Scroll, Top, Bottom };

std::string_view lane_kind_id(LaneKind kind);

struct LaneAssignment {
  std::string danmaku_id;
  LaneKind kind = LaneKind::Scroll;
  /// Scroll lane or pinned slot; -1 when dropped.
  int lane = 0;
  double enter_s = 0;
  double exit_s = 0;
  int width_px = 0;
  /// (screen width + width) / scroll duration; 0 for pinned items.
  double speed_px_s = 0;
  bool dropped = false;

  bool operator==(const LaneAssignment&) const = default;
};

inline constexpr double kLayoutDelayStepS = 0.25;
inline constexpr double kLayoutMaxDelayS = 5.0;

/// True when b, entering the same scroll lane at or after a, would touch a
/// on screen: b enters before a's tail has cleared the right edge, or b
/// catches a before a leaves.
bool collides(const LaneAssignment& a, const LaneAssignment& b, const ScreenConfig& screen);

/// Greedy first-fit in time order. Highlights, top-positioned records and
/// summaries near either end of the video are pinned to the top row,
/// bottom-positioned records to the bottom row.
std::vector<LaneAssignment> layout(const DanmakuTrack& track, const ScreenConfig& screen = {},
                                   double duration_s = -1);

std::string schedule_to_json(const std::vector<LaneAssignment>& schedule);
std::vector<LaneAssignment> schedule_from_json(std::string_view json_text);

}  // namespace comet
