#include "comet/timecode.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <vector>

namespace comet {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::optional<std::int64_t> parse_digits(std::string_view s, std::size_t max_len) {
  if (s.empty() || s.size() > max_len) return std::nullopt;
  std::int64_t v = 0;
  for (char c : s) {
    if (c < '0' || c > '9') return std::nullopt;
    v = v * 10 + (c - '0');
  }
  return v;
}

}  // namespace

std::int64_t to_centis(double seconds) { return std::llround(seconds * 100.0); }

std::optional<double> parse_timestamp(std::string_view text) {
  text = trim(text);
  if (text.empty()) return std::nullopt;

  std::int64_t frac_cs = 0;
  if (auto dot = text.find('.'); dot != std::string_view::npos) {
    std::string_view frac = text.substr(dot + 1);
    text = text.substr(0, dot);
    auto digits = parse_digits(frac, 6);
    if (!digits) return std::nullopt;
    // Scale any fraction length to centiseconds, rounding half up.
    double scaled = static_cast<double>(*digits) * std::pow(10.0, 2.0 - static_cast<double>(frac.size()));
    frac_cs = static_cast<std::int64_t>(std::floor(scaled + 0.5));
  }

  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (true) {
    auto colon = text.find(':', start);
    parts.push_back(text.substr(start, colon == std::string_view::npos ? std::string_view::npos : colon - start));
    if (colon == std::string_view::npos) break;
    start = colon + 1;
  }
  if (parts.size() < 2 || parts.size() > 3) return std::nullopt;

  std::int64_t hours = 0;
  std::int64_t minutes = 0;
  std::int64_t secs = 0;
  if (parts.size() == 3) {
    auto h = parse_digits(parts[0], 3);
    auto m = parse_digits(parts[1], 2);
    auto s = parse_digits(parts[2], 2);
    if (!h || !m || !s || parts[1].size() != 2 || parts[2].size() != 2) return std::nullopt;
    if (*m >= 60) return std::nullopt;
    hours = *h;
    minutes = *m;
    secs = *s;
  } else {
    auto m = parse_digits(parts[0], 3);
    auto s = parse_digits(parts[1], 2);
    if (!m || !s || parts[1].size() != 2) return std::nullopt;
    minutes = *m;
    secs = *s;
  }
  if (secs >= 60) return std::nullopt;

  std::int64_t cs = ((hours * 60 + minutes) * 60 + secs) * 100 + frac_cs;
  return from_centis(cs);
}

std::string format_hms(double seconds) {
  std::int64_t cs = to_centis(seconds < 0 ? 0 : seconds);
  std::int64_t whole = cs / 100;
  std::int64_t frac = cs % 100;
  char buf[48];
  if (frac == 0) {
    std::snprintf(buf, sizeof buf, "%02lld:%02lld:%02lld", static_cast<long long>(whole / 3600),
                  static_cast<long long>(whole / 60 % 60), static_cast<long long>(whole % 60));
  } else {
    std::snprintf(buf, sizeof buf, "%02lld:%02lld:%02lld.%02lld", static_cast<long long>(whole / 3600),
                  static_cast<long long>(whole / 60 % 60), static_cast<long long>(whole % 60),
                  static_cast<long long>(frac));
  }
  return buf;
}

std::string format_clock(double seconds) {
  std::int64_t cs = to_centis(seconds < 0 ? 0 : seconds);
  std::int64_t whole = cs / 100;
  char buf[48];
  std::snprintf(buf, sizeof buf, "%lld:%02lld:%02lld.%02lld", static_cast<long long>(whole / 3600),
                static_cast<long long>(whole / 60 % 60), static_cast<long long>(whole % 60),
                static_cast<long long>(cs % 100));
  return buf;
}

}  // namespace comet
