#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "proselab/core_model.hpp"

namespace proselab {

// Checks a rule against the supported regex dialect: literals, '.', classes
// ([...], \d \w \s and negations), anchors, alternation, greedy and lazy
// quantifiers, capturing and (?:...) groups. Backreferences, lookaround and
// named groups are rejected. Replacements may use $1..$9 and $$; any other
// '$' is literal. Violations carry the offending position.
ValidationResult validate_rule(const ParsingRule& rule);

// Number of capturing groups in a pattern that passes validate_rule.
std::size_t capture_group_count(std::string_view pattern);

struct ParseOutcome {
  std::string text;
  bool matched = false;

  bool operator==(const ParseOutcome&) const = default;
};

// Applies the rule to the whole of `raw` ('.' matches newlines, the match is
// anchored at both ends). A non-matching rule passes `raw` through.
// Throws ValidationError if the rule is not valid.
ParseOutcome parse_output(std::string_view raw,
                          const std::optional<ParsingRule>& rule);

// Expands $1..$9 / $$ against already-captured groups; missing or unmatched
// groups expand to the empty string.
std::string expand_replacement(std::string_view replacement,
                               const std::vector<std::optional<std::string>>& groups);

}  // namespace proselab
