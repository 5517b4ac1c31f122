#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace comet {

// Times travel through the text formats at centisecond resolution. Parsing
// yields cs / 100.0 so that format -> parse reproduces the same double.

/// Parses `HH:MM:SS`, `H:MM:SS` or `MM:SS`, each with an optional `.ss`
/// fraction. Surrounding whitespace is ignored.
std::optional<double> parse_timestamp(std::string_view text);

/// `HH:MM:SS`, plus `.ss` when the value is not a whole second.
std::string format_hms(double seconds);

/// `H:MM:SS.ss`, the layout used by scene descriptions.
std::string format_clock(double seconds);

/// Nearest centisecond count, used wherever times must compare exactly.
std::int64_t to_centis(double seconds);

inline double from_centis(std::int64_t cs) { return static_cast<double>(cs) / 100.0; }

}  // namespace comet
