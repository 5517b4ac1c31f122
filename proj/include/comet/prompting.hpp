#pragma once

#include <span>
#include <string>
#include <string_view>

#include "comet/danmaku.hpp"
#include "comet/persona.hpp"
#include "comet/video_model.hpp"

namespace comet {

inline constexpr std::string_view kImStart = "<|im_start|>";
inline constexpr std::string_view kImEnd = "<|im_end|>";

struct PromptBundle {
  std::string system_text;
  std::string user_text;

  /// Both messages wrapped in their boundary tokens, system first.
  std::string framed() const;
};

/// The generation agent's instructions. Numbers come from `config` and only
/// the enabled types get a section.
std::string build_system_prompt(const GenerationConfig& config);

std::string build_user_prompt(const PersonaSet& personas, std::span<const SceneClip> clips,
                              const TextLevelDescription& text_desc);

PromptBundle build_prompt_bundle(const GenerationConfig& config, const PersonaSet& personas,
                                 std::span<const SceneClip> clips, const TextLevelDescription& text_desc);

}  // namespace comet
