#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>

namespace proselab::detail {

struct DialectParse {
  std::optional<std::string> error;  // "<reason> at position N"
  std::size_t capture_groups = 0;
  // Equivalent Boost.Regex perl-syntax pattern (anchors pinned to buffer
  // edges, escapes normalised).
  std::string engine_pattern;
};

DialectParse parse_dialect(std::string_view pattern);

}  // namespace proselab::detail
