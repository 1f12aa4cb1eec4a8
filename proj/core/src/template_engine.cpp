#include "proselab/template_engine.hpp"

namespace proselab {

RenderedPrompt render_prompt(std::string_view template_text,
                             std::string_view input) {
  RenderedPrompt out;
  std::size_t pos = template_text.find(kInputPlaceholder);
  if (pos == std::string_view::npos) {
    out.text.reserve(template_text.size() + 1 + input.size());
    out.text.append(template_text).append("\n").append(input);
    return out;
  }
  out.used_placeholder = true;
  std::size_t cursor = 0;
  while (pos != std::string_view::npos) {
    out.text.append(template_text.substr(cursor, pos - cursor));
    out.text.append(input);
    cursor = pos + kInputPlaceholder.size();
    pos = template_text.find(kInputPlaceholder, cursor);
  }
  out.text.append(template_text.substr(cursor));
  return out;
}

}  // namespace proselab
