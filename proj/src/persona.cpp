#include "comet/persona.hpp"

#include <algorithm>
#include <cctype>
#include <optional>

#include <json.hpp>

#include "comet/error.hpp"
#include "comet/text_units.hpp"

namespace comet {

using ojson = nlohmann::ordered_json;

namespace {

constexpr const char* kFieldNames[] = {"age", "region", "personality", "danmaku_sending_style", "learning_habits",
                                       "reasons_for_watching"};

// "Danmaku sending style" / "danmaku-sending-style" -> "danmaku_sending_style"
std::string normalize_key(std::string_view key) {
  std::string out;
  for (char c : trim_copy(key)) {
    if (c == ' ' || c == '-' || c == '_') {
      if (!out.empty() && out.back() != '_') out.push_back('_');
    } else {
      out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
  }
  return out;
}

// Maps a normalized key to its canonical field; aliases cover the longer
// phrasings the persona prompt itself uses ("reasons for watching the video").
std::optional<std::string_view> canonical_field(std::string_view key) {
  auto starts = [&](std::string_view p) { return key.substr(0, p.size()) == p; };
  if (key == "age") return "age";
  if (key == "region") return "region";
  if (starts("personality")) return "personality";
  if (starts("danmaku_sending_style") || key == "danmaku_style" || key == "sending_style") {
    return "danmaku_sending_style";
  }
  if (starts("learning_habit")) return "learning_habits";
  if (starts("reason")) return "reasons_for_watching";
  return std::nullopt;
}

std::string text_value(const ojson& v) {
  if (v.is_string()) return trim_copy(v.get<std::string>());
  if (v.is_array()) {
    std::string joined;
    for (const auto& e : v) {
      if (!e.is_string()) continue;
      if (!joined.empty()) joined += ", ";
      joined += trim_copy(e.get<std::string>());
    }
    return joined;
  }
  if (v.is_number()) return v.dump();
  return {};
}

std::string_view extract_json_object(std::string_view text) {
  auto open = text.find('{');
  auto close = text.rfind('}');
  if (open == std::string_view::npos || close == std::string_view::npos || close < open) return text;
  return text.substr(open, close - open + 1);
}

ojson persona_object(const Persona& p) {
  ojson o;
  o["age"] = p.age;
  o["region"] = p.region;
  o["personality"] = p.personality;
  o["danmaku_sending_style"] = p.danmaku_sending_style;
  o["learning_habits"] = p.learning_habits;
  o["reasons_for_watching"] = p.reasons_for_watching;
  return o;
}

ojson personas_object(const PersonaSet& set) {
  ojson doc = ojson::object();
  for (const auto& p : set.personas) doc[std::string(1, p.label)] = persona_object(p);
  return doc;
}

}  // namespace

const Persona* PersonaSet::find(char label) const {
  auto it = std::find_if(personas.begin(), personas.end(), [&](const Persona& p) { return p.label == label; });
  return it == personas.end() ? nullptr : &*it;
}

void validate_personas(const PersonaSet& set, int expected_count) {
  if (static_cast<int>(set.personas.size()) != expected_count) {
    throw Error(Errc::WrongCount, "expected " + std::to_string(expected_count) + " personas, got " +
                                      std::to_string(set.personas.size()));
  }
  for (int i = 0; i < expected_count; ++i) {
    const char want = static_cast<char>('A' + i);
    if (!set.find(want)) throw Error(Errc::WrongCount, std::string("persona ") + want + " is missing");
  }
  for (const auto& p : set.personas) {
    const std::string who(1, p.label);
    if (p.age < 10 || p.age > 100) throw Error(Errc::InvalidField, who + ".age out of range [10, 100]");
    const std::pair<const char*, const std::string*> texts[] = {
        {"region", &p.region},
        {"personality", &p.personality},
        {"danmaku_sending_style", &p.danmaku_sending_style},
        {"learning_habits", &p.learning_habits},
        {"reasons_for_watching", &p.reasons_for_watching}};
    for (const auto& [name, value] : texts) {
      if (trim_copy(*value).empty()) throw Error(Errc::MissingField, who + "." + name);
    }
  }
}

PromptText build_persona_prompt(std::string_view title, int n) {
  PromptText prompt;
  prompt.instructions =
      "- Your task is to create " + std::to_string(n) +
      " distinct personas with different backgrounds and personalities. They are interested in watching the online "
      "educational video \"" +
      std::string(title) +
      "\". Each persona should have the habit of sending danmaku while watching the video. Use \"A\", \"B\", \"C\", "
      "\"D\", etc., as persona labels.\n"
      "- For each persona, please provide the following details in JSON format, including age, region, personality, "
      "danmaku sending style, learning habits, and reasons for watching the video.";
  prompt.body =
      "Respond with a single JSON object keyed by persona label. Each value is an object with the keys \"age\" "
      "(integer), \"region\", \"personality\", \"danmaku_sending_style\", \"learning_habits\" and "
      "\"reasons_for_watching\".";
  return prompt;
}

PersonaSet parse_personas(std::string_view json_text, std::string video_id, int expected_count) {
  ojson doc;
  try {
    doc = ojson::parse(extract_json_object(json_text));
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(Errc::MalformedJson, e.what());
  }
  if (!doc.is_object()) throw Error(Errc::MalformedJson, "personas must be a JSON object keyed by label");
  if (static_cast<int>(doc.size()) != expected_count) {
    throw Error(Errc::WrongCount,
                "expected " + std::to_string(expected_count) + " personas, got " + std::to_string(doc.size()));
  }

  PersonaSet set;
  set.video_id = std::move(video_id);
  for (const auto& [raw_label, body] : doc.items()) {
    std::string label = trim_copy(raw_label);
    if (label.size() != 1 || label[0] < 'A' || label[0] >= 'A' + expected_count) {
      throw Error(Errc::WrongCount, "unexpected persona label '" + raw_label + "'");
    }
    if (!body.is_object()) throw Error(Errc::MalformedJson, "persona " + label + " is not an object");

    ojson fields = ojson::object();
    for (const auto& [key, value] : body.items()) {
      if (auto canon = canonical_field(normalize_key(key)); canon && !fields.contains(*canon)) {
        fields[std::string(*canon)] = value;
      }
    }
    for (const char* name : kFieldNames) {
      if (!fields.contains(name) || fields[name].is_null()) throw Error(Errc::MissingField, label + "." + name);
    }

    Persona p;
    p.label = label[0];
    const auto& age = fields["age"];
    if (age.is_number_integer()) {
      p.age = age.get<int>();
    } else if (age.is_number()) {
      p.age = static_cast<int>(age.get<double>());
    } else if (age.is_string()) {
      try {
        p.age = std::stoi(age.get<std::string>());
      } catch (const std::exception&) {
        throw Error(Errc::InvalidField, label + ".age is not a number");
      }
    } else {
      throw Error(Errc::InvalidField, label + ".age is not a number");
    }
    p.region = text_value(fields["region"]);
    p.personality = text_value(fields["personality"]);
    p.danmaku_sending_style = text_value(fields["danmaku_sending_style"]);
    p.learning_habits = text_value(fields["learning_habits"]);
    p.reasons_for_watching = text_value(fields["reasons_for_watching"]);
    set.personas.push_back(std::move(p));
  }
  std::sort(set.personas.begin(), set.personas.end(),
            [](const Persona& a, const Persona& b) { return a.label < b.label; });
  validate_personas(set, expected_count);
  return set;
}

std::string render_personas(const PersonaSet& set) { return personas_object(set).dump(2) + "\n"; }

std::string personas_to_compact_json(const PersonaSet& set) { return personas_object(set).dump(); }

}  // namespace comet
