#include "comet/track_parser.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <optional>
#include <sstream>

#include "comet/error.hpp"
#include "comet/text_units.hpp"
#include "comet/timecode.hpp"

namespace comet {

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

bool is_upper_letter(char c) { return c >= 'A' && c <= 'Z'; }

// Heading text -> type. Accepts the grammar's names and their common variants.
std::optional<DanmakuType> match_type_heading(std::string_view text) {
  std::string key;
  for (char c : lower(trim_copy(text))) {
    if (std::isalnum(static_cast<unsigned char>(c)) || c == '&') key.push_back(c);
  }
  if (key == "q&a" || key == "qa" || key == "questionandanswer" || key == "questionsandanswers") {
    return DanmakuType::QA;
  }
  if (key == "discussion" || key == "discussions") return DanmakuType::Discussion;
  if (key == "highlight" || key == "highlights" || key == "highlighting") return DanmakuType::Highlight;
  if (key == "summary" || key == "summaries") return DanmakuType::Summary;
  if (key == "personalemotionexpression" || key == "emotionexpression" || key == "personalemotionalexpression") {
    return DanmakuType::EmotionExpression;
  }
  if (key == "briefcompliment" || key == "compliment" || key == "compliments" || key == "briefcompliments") {
    return DanmakuType::Compliment;
  }
  if (key == "encouragement" || key == "encouragements") return DanmakuType::Encouragement;
  if (key == "userposted" || key == "userposts") return DanmakuType::UserPosted;
  return std::nullopt;
}

struct RawItem {
  std::string role;
  std::string timestamp;
  std::string text;
};

// Splits "<digits and colons>[:] text" into a parseable timestamp and the
// remaining text. The timestamp itself contains colons, so every colon in
// the leading run is tried as the separator, longest first.
std::optional<std::pair<double, std::string>> split_timestamp(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  std::size_t run = 0;
  while (run < s.size() && (std::isdigit(static_cast<unsigned char>(s[run])) || s[run] == ':' || s[run] == '.')) ++run;
  std::vector<std::size_t> cuts{run};
  for (std::size_t i = run; i-- > 0;) {
    if (s[i] == ':') cuts.push_back(i);
  }
  for (std::size_t cut : cuts) {
    std::string_view ts = s.substr(0, cut);
    if (!ts.empty() && ts.back() == ':') ts.remove_suffix(1);
    auto t = parse_timestamp(ts);
    if (!t) continue;
    std::string_view rest = s.substr(cut);
    if (!rest.empty() && rest.front() == ':') rest.remove_prefix(1);
    return std::make_pair(*t, trim_copy(rest));
  }
  return std::nullopt;
}

struct FontResult {
  std::string text;
  std::optional<Rgb> color;
  bool bad = false;
};

std::optional<Rgb> named_color(std::string_view value) {
  std::string v = lower(trim_copy(value));
  if (v == "red") return Rgb::red();
  if (v == "blue") return Rgb::blue();
  if (v == "white") return Rgb::white();
  return color_from_hex(v);
}

// Strips <font ...> / </font> tags, keeping the first color attribute.
FontResult strip_font_tags(std::string_view text) {
  FontResult r;
  int open_tags = 0;
  std::size_t i = 0;
  while (i < text.size()) {
    if (text[i] == '<') {
      std::string head = lower(text.substr(i, 7));
      bool opening = head.rfind("<font", 0) == 0 &&
                     (text.size() == i + 5 || std::isspace(static_cast<unsigned char>(text[i + 5])) || text[i + 5] == '>');
      bool closing = head.rfind("</font", 0) == 0;
      if (opening || closing) {
        auto close = text.find('>', i);
        if (close == std::string_view::npos) {
          r.bad = true;
          break;
        }
        if (opening) {
          ++open_tags;
          std::string tag(text.substr(i, close - i + 1));
          std::string ltag = lower(tag);
          auto at = ltag.find("color");
          std::optional<Rgb> c;
          if (at != std::string::npos) {
            std::size_t p = at + 5;
            while (p < tag.size() && std::isspace(static_cast<unsigned char>(tag[p]))) ++p;
            if (p < tag.size() && tag[p] == '=') {
              ++p;
              while (p < tag.size() && std::isspace(static_cast<unsigned char>(tag[p]))) ++p;
              std::string value;
              if (p < tag.size() && (tag[p] == '"' || tag[p] == '\'')) {
                char q = tag[p++];
                auto end = tag.find(q, p);
                if (end != std::string::npos) value = tag.substr(p, end - p);
              } else {
                while (p < tag.size() && tag[p] != '>' && !std::isspace(static_cast<unsigned char>(tag[p]))) {
                  value.push_back(tag[p++]);
                }
              }
              c = named_color(value);
            }
          }
          if (!c) {
            r.bad = true;
          } else if (!r.color) {
            r.color = c;
          }
        } else {
          --open_tags;
        }
        i = close + 1;
        continue;
      }
    }
    r.text.push_back(text[i]);
    ++i;
  }
  if (open_tags != 0) r.bad = true;
  r.text = trim_copy(r.text);
  return r;
}

std::string color_attr(Rgb c) {
  if (c == Rgb::red()) return "red";
  if (c == Rgb::blue()) return "blue";
  return color_hex(c);
}

struct Pending {
  Danmaku record;
  std::size_t line_no = 0;
  std::optional<char> mention;
  std::string raw;
};

}  // namespace

std::string_view warning_kind_id(WarningKind kind) {
  switch (kind) {
    case WarningKind::BadTimestamp: return "BadTimestamp";
    case WarningKind::UnknownPersona: return "UnknownPersona";
    case WarningKind::UnknownSection: return "UnknownSection";
    case WarningKind::BadFontTag: return "BadFontTag";
    case WarningKind::Orphan: return "Orphan";
    case WarningKind::EmptyText: return "EmptyText";
  }
  return "UnknownSection";
}

TrackParseResult parse_track(std::string_view markdown, const PersonaSet& personas, double duration_s) {
  TrackParseResult result;
  result.track.video_id = personas.video_id;
  auto warn = [&](std::size_t line_no, WarningKind kind, std::string_view raw) {
    result.warnings.push_back(ParseWarning{line_no, kind, std::string(raw)});
  };

  std::vector<Pending> pending;
  std::optional<DanmakuType> section;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= markdown.size()) {
    auto nl = markdown.find('\n', pos);
    std::string_view raw = markdown.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? markdown.size() + 1 : nl + 1;
    ++line_no;
    if (!raw.empty() && raw.back() == '\r') raw.remove_suffix(1);

    std::string line = trim_copy(raw);
    if (line.empty() || line.rfind("```", 0) == 0) continue;

    if (line.front() == '#') {
      std::size_t hashes = 0;
      while (hashes < line.size() && line[hashes] == '#') ++hashes;
      std::string title = trim_copy(std::string_view(line).substr(hashes));
      if (hashes == 1) {
        std::string l = lower(title);
        bool known = l.find("emotion") != std::string::npos || l.find("content") != std::string::npos ||
                     l.find("user") != std::string::npos;
        if (!known) warn(line_no, WarningKind::UnknownSection, raw);
        section.reset();
      } else {
        section = match_type_heading(title);
        if (!section) warn(line_no, WarningKind::UnknownSection, raw);
      }
      continue;
    }

    // Item lines: "- A | 00:00:02: text", also the exemplar shape "A[00:00:02]: text".
    std::string role;
    std::string_view after_role;
    bool is_item = false;
    if (line.size() >= 2 && (line[0] == '-' || line[0] == '*') && std::isspace(static_cast<unsigned char>(line[1]))) {
      std::string_view body = std::string_view(line).substr(2);
      auto bar = body.find('|');
      if (bar != std::string_view::npos) {
        role = trim_copy(body.substr(0, bar));
        after_role = body.substr(bar + 1);
        is_item = true;
      }
    } else {
      auto lb = line.find('[');
      auto rb = line.find(']');
      if (lb != std::string::npos && rb != std::string::npos && lb > 0 && lb < rb && lb <= 8) {
        role = trim_copy(std::string_view(line).substr(0, lb));
        std::string rebuilt = line.substr(lb + 1, rb - lb - 1) + ":" + line.substr(rb + 1);
        // Keep the rebuilt text alive in `line` so the view stays valid.
        line = rebuilt;
        after_role = line;
        is_item = role.size() == 1 && is_upper_letter(role[0]);
      }
    }
    if (!is_item) continue;

    if (!section) {
      warn(line_no, WarningKind::UnknownSection, raw);
      continue;
    }
    const DanmakuType type = section.value_or(DanmakuType::Discussion);

    std::optional<char> persona;
    if (role.size() == 1 && std::isalpha(static_cast<unsigned char>(role[0]))) {
      persona = static_cast<char>(std::toupper(static_cast<unsigned char>(role[0])));
    } else if (lower(role) != "user") {
      warn(line_no, WarningKind::UnknownPersona, raw);
      continue;
    }
    if (type == DanmakuType::UserPosted) {
      persona.reset();
    } else if (!persona) {
      warn(line_no, WarningKind::UnknownPersona, raw);
      continue;
    } else if (!personas.find(*persona)) {
      warn(line_no, WarningKind::UnknownPersona, raw);
    }

    auto split = split_timestamp(after_role);
    if (!split) {
      warn(line_no, WarningKind::BadTimestamp, raw);
      continue;
    }
    double t = split->first;
    if (t > duration_s) {
      warn(line_no, WarningKind::BadTimestamp, raw);
      t = std::max(duration_s, 0.0);
    }

    FontResult font = strip_font_tags(split->second);
    if (font.bad) warn(line_no, WarningKind::BadFontTag, raw);
    std::string text = font.text;

    std::optional<char> mention;
    if (text.size() >= 2 && text[0] == '@' && is_upper_letter(text[1]) &&
        (text.size() == 2 || !std::isalnum(static_cast<unsigned char>(text[2])))) {
      std::string rest = trim_copy(std::string_view(text).substr(2));
      if (!rest.empty()) {
        mention = text[1];
        text = rest;
      }
    }
    if (text.empty()) {
      warn(line_no, WarningKind::EmptyText, raw);
      continue;
    }

    Danmaku d = make_danmaku("", persona, t, type, text, font.color.value_or(Rgb::white()));
    pending.push_back(Pending{std::move(d), line_no, mention, std::string(raw)});
  }

  if (pending.empty()) throw Error(Errc::NoItemsParsed, "no danmaku item lines found");

  std::stable_sort(pending.begin(), pending.end(),
                   [](const Pending& a, const Pending& b) { return a.record.time_s < b.record.time_s; });
  char id[32];
  for (std::size_t i = 0; i < pending.size(); ++i) {
    std::snprintf(id, sizeof id, "d%04zu", i + 1);
    pending[i].record.id = id;
  }

  for (std::size_t i = 0; i < pending.size(); ++i) {
    auto& p = pending[i];
    if (!p.mention) continue;
    const double t = p.record.time_s;
    std::optional<std::size_t> best;
    for (std::size_t j = i; j-- > 0;) {
      const auto& c = pending[j].record;
      if (c.time_s < t - kMentionWindowS - 1e-9) break;
      if (c.persona != p.mention) continue;
      if (!best) {
        best = j;
        continue;
      }
      const auto& b = pending[*best].record;
      // Scanning backwards: a later time always wins; among equal times the
      // same type wins, then the later line.
      if (c.time_s < b.time_s) continue;
      if (b.type != p.record.type && c.type == p.record.type) best = j;
    }
    if (best) {
      p.record.reply_to = pending[*best].record.id;
    } else {
      p.record.text = std::string("@") + *p.mention + " " + p.record.text;
      result.warnings.push_back(ParseWarning{p.line_no, WarningKind::Orphan, p.raw});
    }
  }

  result.track.danmaku.reserve(pending.size());
  for (auto& p : pending) result.track.danmaku.push_back(std::move(p.record));
  std::stable_sort(result.warnings.begin(), result.warnings.end(),
                   [](const ParseWarning& a, const ParseWarning& b) { return a.line_no < b.line_no; });
  return result;
}

std::string render_track(const DanmakuTrack& track) {
  std::ostringstream out;
  bool first_block = true;
  const std::pair<Category, const char*> categories[] = {{Category::Emotion, "# Emotion-related danmaku"},
                                                         {Category::Content, "# Content-related danmaku"},
                                                         {Category::User, "# User-posted danmaku"}};
  std::vector<DanmakuType> order(kGeneratedTypes.begin(), kGeneratedTypes.end());
  order.push_back(DanmakuType::UserPosted);

  for (const auto& [category, heading] : categories) {
    bool category_open = false;
    for (DanmakuType type : order) {
      if (category_of(type) != category) continue;
      bool section_open = false;
      for (const auto& d : track.danmaku) {
        if (d.type != type) continue;
        if (!category_open) {
          if (!first_block) out << "\n";
          out << heading << "\n";
          category_open = true;
          first_block = false;
        } else if (!section_open) {
          out << "\n";
        }
        if (!section_open) {
          out << "## " << type_heading(type) << "\n";
          section_open = true;
        }
        std::string text = d.text;
        std::replace(text.begin(), text.end(), '\n', ' ');
        if (d.color != Rgb::white()) text = "<font color=\"" + color_attr(d.color) + "\">" + text + "</font>";
        if (d.reply_to) {
          if (const auto* target = track.find(*d.reply_to); target && target->persona) {
            text = std::string("@") + *target->persona + " " + text;
          }
        }
        out << "- " << (d.persona ? std::string(1, *d.persona) : std::string("user")) << " | "
            << format_hms(d.time_s) << ": " << text << "\n";
      }
    }
  }
  return out.str();
}

}  // namespace comet
