#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "comet/prompt_text.hpp"

namespace comet {

inline constexpr int kDefaultPersonaCount = 6;

struct Persona {
  char label = 'A';
  int age = 0;
  std::string region;
  std::string personality;
  std::string danmaku_sending_style;
  std::string learning_habits;
  std::string reasons_for_watching;

  bool operator==(const Persona&) const = default;
};

struct PersonaSet {
  std::vector<Persona> personas;
  std::string video_id;

  const Persona* find(char label) const;
  bool operator==(const PersonaSet&) const = default;
};

/// Throws Error(WrongCount) unless the set holds exactly `expected_count`
/// personas labelled A, B, C, ... and Error(InvalidField) for field problems.
void validate_personas(const PersonaSet& set, int expected_count = kDefaultPersonaCount);

PromptText build_persona_prompt(std::string_view title, int n = kDefaultPersonaCount);

/// Parses the object-of-objects layout keyed by persona label. Field names
/// may use spaces, hyphens or underscores; Markdown code fences around the
/// JSON are tolerated.
PersonaSet parse_personas(std::string_view json_text, std::string video_id = {},
                          int expected_count = kDefaultPersonaCount);

std::string render_personas(const PersonaSet& set);

/// Compact canonical form embedded in the generation prompt.
std::string personas_to_compact_json(const PersonaSet& set);

}  // namespace comet
