#pragma once

#include <string>
#include <string_view>

namespace proselab {

inline constexpr std::string_view kInputPlaceholder = "{{text}}";

struct RenderedPrompt {
  std::string text;
  bool used_placeholder = false;

  bool operator==(const RenderedPrompt&) const = default;
};

// Substitutes every `{{text}}` in the template with `input`. Templates
// without the token get the input appended after a single newline. There is
// no escape for a literal `{{text}}`.
RenderedPrompt render_prompt(std::string_view template_text,
                             std::string_view input);

}  // namespace proselab
