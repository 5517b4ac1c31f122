#pragma once

#include <string>

namespace comet {

/// A prompt split into its fixed instruction block and the per-call payload.
/// The instructions travel as the system message, the body as the user message.
struct PromptText {
  std::string instructions;
  std::string body;

  std::string full() const { return body.empty() ? instructions : instructions + "\n\n" + body; }
};

}  // namespace comet
