#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "comet/danmaku.hpp"
#include "comet/persona.hpp"

namespace comet {

/// `@X` prefixes resolve to X's nearest earlier record within this window.
inline constexpr double kMentionWindowS = 30.0;

enum class WarningKind { BadTimestamp, UnknownPersona, UnknownSection, BadFontTag, Orphan, EmptyText };

std::string_view warning_kind_id(WarningKind kind);

struct ParseWarning {
  std::size_t line_no = 0;
  WarningKind kind = WarningKind::UnknownSection;
  std::string raw;
};

struct TrackParseResult {
  DanmakuTrack track;
  std::vector<ParseWarning> warnings;
};

/// Parses the Markdown response grammar:
///
///   # Emotion-related danmaku
///   ## Personal Emotion Expression
///   - A | 00:00:02: Excited!
///
/// Records come back sorted by time with line order breaking ties and ids
/// d0001, d0002, ... in that order. Throws Error(NoItemsParsed) when no item
/// line survives.
TrackParseResult parse_track(std::string_view markdown, const PersonaSet& personas, double duration_s);

/// Canonical grammar: emotion sections, then content, then user posts; one
/// item line per record in time order within its section.
std::string render_track(const DanmakuTrack& track);

}  // namespace comet
