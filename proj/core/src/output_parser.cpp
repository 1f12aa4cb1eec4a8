#include "proselab/output_parser.hpp"

#include <boost/regex.hpp>
#include <spdlog/spdlog.h>

#include <memory>
#include <mutex>
#include <shared_mutex>
#include <unordered_map>

#include "proselab/errors.hpp"
#include "regex_dialect.hpp"

namespace proselab {
namespace {

struct CompiledRule {
  detail::DialectParse parse;
  std::unique_ptr<boost::regex> regex;
};

class PatternCache {
 public:
  std::shared_ptr<const CompiledRule> get(std::string_view pattern) {
    const std::string key(pattern);
    {
      std::shared_lock lock(mutex_);
      if (auto it = entries_.find(key); it != entries_.end()) return it->second;
    }
    auto compiled = std::make_shared<CompiledRule>();
    compiled->parse = detail::parse_dialect(pattern);
    if (!compiled->parse.error) {
      try {
        compiled->regex = std::make_unique<boost::regex>(
            compiled->parse.engine_pattern,
            boost::regex::perl | boost::regex::mod_s | boost::regex::no_mod_m);
      } catch (const boost::regex_error& e) {
        compiled->parse.error = std::string("pattern rejected by engine at position ") +
                                std::to_string(e.position());
      }
    }
    std::unique_lock lock(mutex_);
    if (entries_.size() >= kCapacity) entries_.clear();
    return entries_.try_emplace(key, std::move(compiled)).first->second;
  }

 private:
  static constexpr std::size_t kCapacity = 256;
  std::shared_mutex mutex_;
  std::unordered_map<std::string, std::shared_ptr<const CompiledRule>> entries_;
};

PatternCache& cache() {
  static PatternCache instance;
  return instance;
}

void check_replacement(std::string_view replacement, std::size_t groups,
                       std::vector<std::string>& violations) {
  for (std::size_t i = 0; i + 1 < replacement.size(); ++i) {
    if (replacement[i] != '$') continue;
    const char next = replacement[i + 1];
    if (next == '$') {
      ++i;
    } else if (next >= '0' && next <= '9') {
      const auto group = static_cast<std::size_t>(next - '0');
      if (group == 0 || group > groups) {
        violations.push_back("replacement references missing group " +
                             std::to_string(group));
      }
      ++i;
    }
  }
}

}  // namespace

ValidationResult validate_rule(const ParsingRule& rule) {
  ValidationResult result;
  const auto compiled = cache().get(rule.pattern);
  if (compiled->parse.error) {
    result.violations.push_back(*compiled->parse.error);
    return result;
  }
  check_replacement(rule.replacement, compiled->parse.capture_groups,
                    result.violations);
  return result;
}

std::size_t capture_group_count(std::string_view pattern) {
  return cache().get(pattern)->parse.capture_groups;
}

std::string expand_replacement(
    std::string_view replacement,
    const std::vector<std::optional<std::string>>& groups) {
  std::string out;
  out.reserve(replacement.size());
  for (std::size_t i = 0; i < replacement.size(); ++i) {
    const char c = replacement[i];
    if (c == '$' && i + 1 < replacement.size()) {
      const char next = replacement[i + 1];
      if (next == '$') {
        out += '$';
        ++i;
        continue;
      }
      if (next >= '1' && next <= '9') {
        const auto group = static_cast<std::size_t>(next - '0');
        if (group <= groups.size() && groups[group - 1]) out += *groups[group - 1];
        ++i;
        continue;
      }
    }
    out += c;
  }
  return out;
}

ParseOutcome parse_output(std::string_view raw,
                          const std::optional<ParsingRule>& rule) {
  if (!rule) return {std::string(raw), false};

  auto validation = validate_rule(*rule);
  if (!validation.ok()) throw ValidationError(std::move(validation.violations));

  const auto compiled = cache().get(rule->pattern);
  boost::match_results<std::string_view::const_iterator> match;
  bool matched = false;
  try {
    matched = boost::regex_match(raw.begin(), raw.end(), match, *compiled->regex);
  } catch (const std::runtime_error& e) {
    // Engine gave up (complexity limits); treat as no match.
    spdlog::warn("parsing rule abandoned: {}", e.what());
    matched = false;
  }
  if (!matched) return {std::string(raw), false};

  std::vector<std::optional<std::string>> groups;
  groups.reserve(compiled->parse.capture_groups);
  for (std::size_t g = 1; g <= compiled->parse.capture_groups; ++g) {
    if (match[static_cast<int>(g)].matched) {
      groups.emplace_back(match[static_cast<int>(g)].str());
    } else {
      groups.emplace_back(std::nullopt);
    }
  }
  return {expand_replacement(rule->replacement, groups), true};
}

}  // namespace proselab
