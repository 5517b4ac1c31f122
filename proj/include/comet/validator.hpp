#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "comet/danmaku.hpp"

namespace comet {

enum class Rule {
  R1_Length,
  R2_MaxGap,
  R3_ContentRate,
  R4_EmotionRate,
  R5_HighlightMin,
  R6_QaDelay,
  R7_Coverage,
  R8_ReplyIntegrity,
  R9_TimeBounds,
};

std::string_view rule_id(Rule rule);
std::optional<Rule> rule_from_id(std::string_view id);

struct Violation {
  Rule rule = Rule::R1_Length;
  double window_start = 0;
  double window_end = 0;
  std::string detail;
  std::vector<std::string> ids;
};

struct MinuteStats {
  int minute = 0;
  int content = 0;
  int emotion = 0;
  int highlight = 0;
};

enum class RepairAction { Dropped, Moved, Truncated, Inserted, KeptWithWarning };

std::string_view repair_action_id(RepairAction action);
std::optional<RepairAction> repair_action_from_id(std::string_view id);

struct RepairEntry {
  RepairAction action = RepairAction::KeptWithWarning;
  std::string id;
  std::optional<Rule> rule;
};

struct ValidationReport {
  std::vector<Violation> violations;
  std::vector<MinuteStats> per_minute_stats;
  double max_gap_s = 0;
  std::vector<RepairEntry> repaired;

  bool clean() const { return violations.empty(); }
  std::size_t count(Rule rule) const;
};

/// Window bounds scaled for a window covering `fraction` of a minute:
/// minima are floored, maxima ceiled.
int scaled_min(int per_minute, double fraction);
int scaled_max(int per_minute, double fraction);

/// Checks R1..R9. Windows are fixed minutes anchored at t = 0; user posts
/// count toward gaps and bounds but not toward lengths or rates.
ValidationReport validate(const DanmakuTrack& track, double duration_s, const GenerationConfig& config);

struct RepairResult {
  DanmakuTrack track;
  ValidationReport report;
};

/// Deterministic single pass: truncate long texts, clamp times, drop the
/// lowest-priority records from over-full windows, fill deficits and gaps from
/// `pool` when given, then validate once more. Whatever is still violated is
/// listed as KeptWithWarning.
RepairResult repair(const DanmakuTrack& track, const ValidationReport& report, const GenerationConfig& config,
                    double duration_s, std::span<const Danmaku> pool = {});

/// Participants' own posting rate in the formative study, per minute.
inline constexpr double kHumanReferenceRatePerMin = 1.85;

struct TrackStats {
  int total = 0;
  std::array<int, 8> per_type{};
  double content_fraction = 0;
  double emotion_fraction = 0;
  double user_fraction = 0;
  double mean_len_units = 0;
  double rate_per_min = 0;

  int count(DanmakuType type) const { return per_type[static_cast<std::size_t>(type)]; }
};

TrackStats track_stats(const DanmakuTrack& track, double duration_s, LengthUnit unit = LengthUnit::Words);

std::string report_to_json(const ValidationReport& report);
/// Throws Error(Corrupt).
ValidationReport report_from_json(std::string_view json_text);
std::string stats_to_json(const TrackStats& stats);

}  // namespace comet
