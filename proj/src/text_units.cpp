#include "comet/text_units.hpp"

#include <unicode/ubrk.h>
#include <unicode/utext.h>

#include <cctype>
#include <memory>

namespace comet {

namespace {

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

constexpr std::string_view kEllipsis = "\xE2\x80\xA6";  // U+2026

struct BreakIteratorCloser {
  void operator()(UBreakIterator* it) const { ubrk_close(it); }
};
struct UTextCloser {
  void operator()(UText* ut) const { utext_close(ut); }
};

}  // namespace

std::string strip_tags(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  std::size_t i = 0;
  while (i < text.size()) {
    if (text[i] == '<') {
      auto close = text.find('>', i + 1);
      // A lone '<' with no closing bracket is ordinary text.
      if (close != std::string_view::npos && close > i + 1 &&
          (std::isalpha(static_cast<unsigned char>(text[i + 1])) || text[i + 1] == '/')) {
        i = close + 1;
        continue;
      }
    }
    out.push_back(text[i]);
    ++i;
  }
  return out;
}

std::string trim_copy(std::string_view text) {
  while (!text.empty() && is_space(text.front())) text.remove_prefix(1);
  while (!text.empty() && is_space(text.back())) text.remove_suffix(1);
  return std::string(text);
}

std::size_t count_words(std::string_view text) {
  std::string plain = strip_tags(text);
  std::size_t n = 0;
  bool in_word = false;
  for (char c : plain) {
    if (is_space(c)) {
      in_word = false;
    } else if (!in_word) {
      in_word = true;
      ++n;
    }
  }
  return n;
}

std::vector<std::string_view> graphemes(std::string_view text) {
  std::vector<std::string_view> out;
  if (text.empty()) return out;

  UErrorCode status = U_ZERO_ERROR;
  std::unique_ptr<UText, UTextCloser> ut(
      utext_openUTF8(nullptr, text.data(), static_cast<int64_t>(text.size()), &status));
  std::unique_ptr<UBreakIterator, BreakIteratorCloser> it(
      ubrk_open(UBRK_CHARACTER, "", nullptr, 0, &status));
  if (U_FAILURE(status)) {
    for (std::size_t i = 0; i < text.size(); ++i) out.push_back(text.substr(i, 1));
    return out;
  }
  ubrk_setUText(it.get(), ut.get(), &status);
  int32_t prev = ubrk_first(it.get());
  for (int32_t next = ubrk_next(it.get()); next != UBRK_DONE; next = ubrk_next(it.get())) {
    out.push_back(text.substr(static_cast<std::size_t>(prev), static_cast<std::size_t>(next - prev)));
    prev = next;
  }
  return out;
}

std::size_t count_units(std::string_view text, LengthUnit unit) {
  if (unit == LengthUnit::Words) return count_words(text);
  return graphemes(strip_tags(text)).size();
}

std::string truncate_units(std::string_view text, std::size_t max_units, LengthUnit unit) {
  if (count_units(text, unit) < max_units) return std::string(text);
  std::string plain = strip_tags(text);

  if (unit == LengthUnit::Words) {
    std::size_t keep = max_units > 1 ? max_units - 1 : 0;
    std::size_t words = 0;
    std::size_t end = 0;
    bool in_word = false;
    for (std::size_t i = 0; i < plain.size(); ++i) {
      if (is_space(plain[i])) {
        if (in_word && words == keep) break;
        in_word = false;
      } else {
        if (!in_word) {
          if (words == keep) break;
          ++words;
          in_word = true;
        }
        end = i + 1;
      }
    }
    return plain.substr(0, end) + std::string(kEllipsis);
  }

  std::size_t keep = max_units > 2 ? max_units - 2 : 0;
  auto clusters = graphemes(plain);
  std::string out;
  for (std::size_t i = 0; i < keep && i < clusters.size(); ++i) out.append(clusters[i]);
  return trim_copy(out) + std::string(kEllipsis);
}

bool is_valid_utf8(std::string_view text) {
  std::size_t i = 0;
  while (i < text.size()) {
    auto c = static_cast<unsigned char>(text[i]);
    std::size_t len = 0;
    char32_t cp = 0;
    if (c < 0x80) {
      ++i;
      continue;
    } else if ((c & 0xE0) == 0xC0) {
      len = 2;
      cp = c & 0x1F;
    } else if ((c & 0xF0) == 0xE0) {
      len = 3;
      cp = c & 0x0F;
    } else if ((c & 0xF8) == 0xF0) {
      len = 4;
      cp = c & 0x07;
    } else {
      return false;
    }
    if (i + len > text.size()) return false;
    for (std::size_t k = 1; k < len; ++k) {
      auto cc = static_cast<unsigned char>(text[i + k]);
      if ((cc & 0xC0) != 0x80) return false;
      cp = (cp << 6) | (cc & 0x3F);
    }
    if ((len == 2 && cp < 0x80) || (len == 3 && cp < 0x800) || (len == 4 && cp < 0x10000)) return false;
    if (cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) return false;
    i += len;
  }
  return true;
}

}  // namespace comet
