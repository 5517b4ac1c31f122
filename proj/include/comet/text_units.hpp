#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace comet {

enum class LengthUnit { Words, Graphemes };

/// Removes `<...>` markup, leaving the inner text.
std::string strip_tags(std::string_view text);

std::string trim_copy(std::string_view text);

/// Whitespace-separated tokens of the tag-stripped text.
std::size_t count_words(std::string_view text);

/// Extended grapheme clusters of a UTF-8 string. Invalid UTF-8 bytes are
/// reported as single-byte clusters.
std::vector<std::string_view> graphemes(std::string_view text);

std::size_t count_units(std::string_view text, LengthUnit unit);

/// Shortens `text` so that count_units(result) == max_units - 1 by keeping a
/// prefix that ends on a unit boundary and appending an ellipsis. Returns the
/// text unchanged when it is already below max_units.
std::string truncate_units(std::string_view text, std::size_t max_units, LengthUnit unit);

/// True for byte sequences that decode as well-formed UTF-8.
bool is_valid_utf8(std::string_view text);

}  // namespace comet
