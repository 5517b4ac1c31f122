#include "comet/danmaku.hpp"

#include <algorithm>
#include <cstdio>
#include <unordered_map>

#include <json.hpp>

#include "comet/error.hpp"

namespace comet {

using ojson = nlohmann::ordered_json;

namespace {

struct TypeInfo {
  DanmakuType type;
  std::string_view id;
  std::string_view heading;
  int priority;
};

constexpr TypeInfo kTypes[] = {
    {DanmakuType::QA, "qa", "Q&A", 6},
    {DanmakuType::Discussion, "discussion", "Discussion", 4},
    {DanmakuType::Highlight, "highlight", "Highlights", 7},
    {DanmakuType::Summary, "summary", "Summary", 5},
    {DanmakuType::EmotionExpression, "emotion_expression", "Personal Emotion Expression", 1},
    {DanmakuType::Compliment, "compliment", "Brief Compliment", 3},
    {DanmakuType::Encouragement, "encouragement", "Encouragement", 2},
    {DanmakuType::UserPosted, "user_posted", "User Posted", 0},
};

const TypeInfo& info(DanmakuType t) {
  for (const auto& i : kTypes) {
    if (i.type == t) return i;
  }
  return kTypes[0];
}

template <typename T>
T field(const ojson& obj, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end()) throw Error(Errc::Corrupt, std::string("missing '") + key + "'");
  try {
    return it->get<T>();
  } catch (const nlohmann::json::exception&) {
    throw Error(Errc::Corrupt, std::string("bad type for '") + key + "'");
  }
}

std::string_view unit_id(LengthUnit u) { return u == LengthUnit::Words ? "words" : "graphemes"; }

ojson config_object(const GenerationConfig& c) {
  ojson o;
  o["max_len_units"] = c.max_len_units;
  o["max_gap_s"] = c.max_gap_s;
  o["content_per_min"] = {c.content_per_min.lo, c.content_per_min.hi};
  o["emotion_per_min"] = {c.emotion_per_min.lo, c.emotion_per_min.hi};
  o["highlights_per_min_min"] = c.highlights_per_min_min;
  o["qa_answer_delay_s"] = c.qa_answer_delay_s;
  o["enabled_types"] = ojson::array();
  for (auto t : kGeneratedTypes) {
    if (c.enabled(t)) o["enabled_types"].push_back(type_id(t));
  }
  o["length_unit"] = unit_id(c.length_unit);
  o["persona_count"] = c.persona_count;
  return o;
}

GenerationConfig config_from_object(const ojson& o) {
  if (!o.is_object()) throw Error(Errc::InvalidInput, "config must be an object");
  GenerationConfig c;
  for (const auto& [key, value] : o.items()) {
    try {
      if (key == "max_len_units") {
        c.max_len_units = value.get<int>();
      } else if (key == "max_gap_s") {
        c.max_gap_s = value.get<double>();
      } else if (key == "content_per_min") {
        c.content_per_min = {value.at(0).get<int>(), value.at(1).get<int>()};
      } else if (key == "emotion_per_min") {
        c.emotion_per_min = {value.at(0).get<int>(), value.at(1).get<int>()};
      } else if (key == "highlights_per_min_min") {
        c.highlights_per_min_min = value.get<int>();
      } else if (key == "qa_answer_delay_s") {
        c.qa_answer_delay_s = value.get<double>();
      } else if (key == "enabled_types") {
        c.enabled_types.clear();
        for (const auto& e : value) {
          auto t = type_from_id(e.get<std::string>());
          if (!t || *t == DanmakuType::UserPosted) {
            throw Error(Errc::InvalidInput, "unknown danmaku type '" + e.get<std::string>() + "'");
          }
          if (!c.enabled(*t)) c.enabled_types.push_back(*t);
        }
      } else if (key == "length_unit") {
        auto u = value.get<std::string>();
        if (u == "words") {
          c.length_unit = LengthUnit::Words;
        } else if (u == "graphemes") {
          c.length_unit = LengthUnit::Graphemes;
        } else {
          throw Error(Errc::InvalidInput, "length_unit must be words or graphemes");
        }
      } else if (key == "persona_count") {
        c.persona_count = value.get<int>();
      } else {
        throw Error(Errc::InvalidInput, "unknown config key '" + key + "'");
      }
    } catch (const nlohmann::json::exception&) {
      throw Error(Errc::InvalidInput, "bad value for config key '" + key + "'");
    }
  }
  // Keep the canonical type order regardless of file order.
  std::vector<DanmakuType> ordered;
  for (auto t : kGeneratedTypes) {
    if (c.enabled(t)) ordered.push_back(t);
  }
  c.enabled_types = std::move(ordered);
  validate_config(c);
  return c;
}

ojson danmaku_object(const Danmaku& d) {
  ojson o;
  o["id"] = d.id;
  o["persona"] = d.persona ? ojson(std::string(1, *d.persona)) : ojson(nullptr);
  o["time_s"] = d.time_s;
  o["type"] = type_id(d.type);
  o["category"] = category_id(d.category);
  o["text"] = d.text;
  o["color"] = color_hex(d.color);
  o["position"] = position_id(d.position);
  o["reply_to"] = d.reply_to ? ojson(*d.reply_to) : ojson(nullptr);
  return o;
}

Danmaku danmaku_from_object(const ojson& o) {
  if (!o.is_object()) throw Error(Errc::Corrupt, "danmaku entry must be an object");
  Danmaku d;
  d.id = field<std::string>(o, "id");
  if (auto it = o.find("persona"); it != o.end() && !it->is_null()) {
    auto p = field<std::string>(o, "persona");
    if (p.size() != 1) throw Error(Errc::Corrupt, "persona must be a single letter");
    d.persona = p[0];
  }
  d.time_s = field<double>(o, "time_s");
  auto type = type_from_id(field<std::string>(o, "type"));
  if (!type) throw Error(Errc::Corrupt, "unknown type in danmaku " + d.id);
  d.type = *type;
  auto cat = category_from_id(field<std::string>(o, "category"));
  if (!cat) throw Error(Errc::Corrupt, "unknown category in danmaku " + d.id);
  d.category = *cat;
  d.text = field<std::string>(o, "text");
  auto color = color_from_hex(field<std::string>(o, "color"));
  if (!color) throw Error(Errc::Corrupt, "bad color in danmaku " + d.id);
  d.color = *color;
  auto pos = position_from_id(field<std::string>(o, "position"));
  if (!pos) throw Error(Errc::Corrupt, "bad position in danmaku " + d.id);
  d.position = *pos;
  if (auto it = o.find("reply_to"); it != o.end() && !it->is_null()) d.reply_to = field<std::string>(o, "reply_to");
  return d;
}

}  // namespace

Category category_of(DanmakuType type) {
  switch (type) {
    case DanmakuType::QA:
    case DanmakuType::Discussion:
    case DanmakuType::Highlight:
    case DanmakuType::Summary:
      return Category::Content;
    case DanmakuType::EmotionExpression:
    case DanmakuType::Compliment:
    case DanmakuType::Encouragement:
      return Category::Emotion;
    case DanmakuType::UserPosted:
      return Category::User;
  }
  return Category::User;
}

std::string_view type_id(DanmakuType type) { return info(type).id; }
std::string_view type_heading(DanmakuType type) { return info(type).heading; }
int type_priority(DanmakuType type) { return info(type).priority; }

std::optional<DanmakuType> type_from_id(std::string_view id) {
  for (const auto& i : kTypes) {
    if (i.id == id) return i.type;
  }
  return std::nullopt;
}

std::string_view category_id(Category c) {
  switch (c) {
    case Category::Content: return "content";
    case Category::Emotion: return "emotion";
    case Category::User: return "user";
  }
  return "user";
}

std::optional<Category> category_from_id(std::string_view id) {
  if (id == "content") return Category::Content;
  if (id == "emotion") return Category::Emotion;
  if (id == "user") return Category::User;
  return std::nullopt;
}

std::string_view position_id(Position p) {
  switch (p) {
    case Position::Scroll: return "scroll";
    case Position::Top: return "top";
    case Position::Bottom: return "bottom";
  }
  return "scroll";
}

std::optional<Position> position_from_id(std::string_view id) {
  if (id == "scroll") return Position::Scroll;
  if (id == "top") return Position::Top;
  if (id == "bottom") return Position::Bottom;
  return std::nullopt;
}

std::string color_hex(Rgb c) {
  char buf[8];
  std::snprintf(buf, sizeof buf, "#%06X", static_cast<unsigned>(c.value & 0xFFFFFF));
  return buf;
}

std::optional<Rgb> color_from_hex(std::string_view text) {
  if (!text.empty() && text.front() == '#') text.remove_prefix(1);
  if (text.size() != 6) return std::nullopt;
  std::uint32_t v = 0;
  for (char c : text) {
    v <<= 4;
    if (c >= '0' && c <= '9') {
      v |= static_cast<std::uint32_t>(c - '0');
    } else if (c >= 'a' && c <= 'f') {
      v |= static_cast<std::uint32_t>(c - 'a' + 10);
    } else if (c >= 'A' && c <= 'F') {
      v |= static_cast<std::uint32_t>(c - 'A' + 10);
    } else {
      return std::nullopt;
    }
  }
  return Rgb{v};
}

Danmaku make_danmaku(std::string id, std::optional<char> persona, double time_s, DanmakuType type, std::string text,
                     Rgb color) {
  Danmaku d;
  d.id = std::move(id);
  d.persona = persona;
  d.time_s = time_s;
  d.type = type;
  d.category = category_of(type);
  d.text = std::move(text);
  d.color = color;
  d.position = type == DanmakuType::Highlight ? Position::Top : Position::Scroll;
  return d;
}

bool GenerationConfig::enabled(DanmakuType type) const {
  return std::find(enabled_types.begin(), enabled_types.end(), type) != enabled_types.end();
}

bool GenerationConfig::category_enabled(Category c) const {
  return std::any_of(enabled_types.begin(), enabled_types.end(),
                     [&](DanmakuType t) { return category_of(t) == c; });
}

void validate_config(const GenerationConfig& c) {
  auto fail = [](const std::string& what) { throw Error(Errc::InvalidInput, "config: " + what); };
  if (c.max_len_units <= 0) fail("max_len_units must be > 0");
  if (!(c.max_gap_s > 0)) fail("max_gap_s must be > 0");
  if (c.content_per_min.lo <= 0 || c.content_per_min.lo > c.content_per_min.hi) fail("content_per_min");
  if (c.emotion_per_min.lo <= 0 || c.emotion_per_min.lo > c.emotion_per_min.hi) fail("emotion_per_min");
  if (c.highlights_per_min_min <= 0) fail("highlights_per_min_min must be > 0");
  if (!(c.qa_answer_delay_s > 0)) fail("qa_answer_delay_s must be > 0");
  if (c.enabled_types.empty()) fail("enabled_types must not be empty");
  if (c.persona_count < 1 || c.persona_count > 26) fail("persona_count must be in [1, 26]");
}

std::string config_to_json(const GenerationConfig& config) { return config_object(config).dump(2) + "\n"; }

GenerationConfig config_from_json(std::string_view json_text) {
  ojson doc;
  try {
    doc = ojson::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(Errc::InvalidInput, std::string("config is not valid JSON: ") + e.what());
  }
  return config_from_object(doc);
}

const Danmaku* DanmakuTrack::find(std::string_view id) const {
  auto it = std::find_if(danmaku.begin(), danmaku.end(), [&](const Danmaku& d) { return d.id == id; });
  return it == danmaku.end() ? nullptr : &*it;
}

void sort_track(DanmakuTrack& track) {
  std::stable_sort(track.danmaku.begin(), track.danmaku.end(),
                   [](const Danmaku& a, const Danmaku& b) { return a.time_s < b.time_s; });
}

void check_track_invariants(const DanmakuTrack& track, double duration_s) {
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < track.danmaku.size(); ++i) {
    const auto& d = track.danmaku[i];
    const std::string where = "danmaku '" + d.id + "'";
    if (d.id.empty() || !index.emplace(d.id, i).second) throw Error(Errc::Corrupt, where + ": empty or duplicate id");
    if (d.text.empty()) throw Error(Errc::Corrupt, where + ": empty text");
    if (d.time_s < 0 || (duration_s >= 0 && d.time_s > duration_s + 1e-9)) {
      throw Error(Errc::Corrupt, where + ": time outside the video");
    }
    if (i > 0 && d.time_s < track.danmaku[i - 1].time_s) throw Error(Errc::Corrupt, where + ": track not sorted");
    if (d.category != category_of(d.type)) throw Error(Errc::Corrupt, where + ": category does not match type");
    if (d.type == DanmakuType::Highlight && d.position != Position::Top) {
      throw Error(Errc::Corrupt, where + ": highlight must be pinned to the top");
    }
    if (d.type == DanmakuType::UserPosted ? d.persona.has_value() : !d.persona.has_value()) {
      throw Error(Errc::Corrupt, where + ": persona presence does not match type");
    }
  }
  for (std::size_t i = 0; i < track.danmaku.size(); ++i) {
    const auto& d = track.danmaku[i];
    if (!d.reply_to) continue;
    auto it = index.find(*d.reply_to);
    if (it == index.end() || it->second >= i) {
      throw Error(Errc::Corrupt, "danmaku '" + d.id + "': reply target missing or not earlier");
    }
  }
}

std::string danmaku_to_json(const Danmaku& d) {
  return danmaku_object(d).dump(-1, ' ', false, nlohmann::json::error_handler_t::replace);
}

std::string track_to_json(const DanmakuTrack& track) {
  ojson doc;
  doc["video_id"] = track.video_id;
  doc["generated_at"] = track.generated_at;
  doc["model_id"] = track.model_id;
  doc["config"] = config_object(track.config);
  doc["danmaku"] = ojson::array();
  for (const auto& d : track.danmaku) doc["danmaku"].push_back(danmaku_object(d));
  return doc.dump(2, ' ', false, nlohmann::json::error_handler_t::replace) + "\n";
}

DanmakuTrack track_from_json(std::string_view json_text) {
  ojson doc;
  try {
    doc = ojson::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(Errc::Corrupt, std::string("track is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw Error(Errc::Corrupt, "track must be a JSON object");
  DanmakuTrack track;
  track.video_id = field<std::string>(doc, "video_id");
  track.generated_at = doc.contains("generated_at") ? field<std::string>(doc, "generated_at") : "";
  track.model_id = doc.contains("model_id") ? field<std::string>(doc, "model_id") : "";
  if (doc.contains("config")) {
    try {
      track.config = config_from_object(doc["config"]);
    } catch (const Error& e) {
      throw Error(Errc::Corrupt, e.what());
    }
  }
  auto it = doc.find("danmaku");
  if (it == doc.end() || !it->is_array()) throw Error(Errc::Corrupt, "track needs a 'danmaku' array");
  for (const auto& e : *it) track.danmaku.push_back(danmaku_from_object(e));
  return track;
}

}  // namespace comet
