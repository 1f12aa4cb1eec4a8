#pragma once

#include <regex>
#include <string>

namespace testsupport {

// Reference substitution built on std::regex, independent of the engine.
inline std::string substitute_all(const std::string& tmpl, const std::string& input) {
  static const std::regex token(R"(\{\{text\}\})");
  std::string format;
  for (char c : input) {
    if (c == '$') format += '$';
    format += c;
  }
  return std::regex_replace(tmpl, token, format);
}

}  // namespace testsupport
