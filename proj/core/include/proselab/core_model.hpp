#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace proselab {

using Timestamp = std::chrono::sys_time<std::chrono::milliseconds>;

Timestamp now_utc();

// RFC 3339 in UTC with millisecond precision, e.g. 2024-03-01T12:00:00.250Z.
std::string format_rfc3339(Timestamp ts);
// Accepts any RFC 3339 offset and fractional precision; throws Error on
// malformed input. Sub-millisecond digits are truncated.
Timestamp parse_rfc3339(std::string_view text);

inline constexpr double kMinTemperature = 0.0;
inline constexpr double kMaxTemperature = 2.0;
inline constexpr double kDefaultTemperature = 0.7;
inline constexpr std::size_t kMaxIconGlyphs = 4;
inline constexpr std::size_t kMaxTagLength = 32;

enum class InsertionMode { replace, append };

std::string_view to_string(InsertionMode mode) noexcept;
std::optional<InsertionMode> parse_insertion_mode(std::string_view text);

struct ParsingRule {
  std::string pattern;
  std::string replacement;

  bool operator==(const ParsingRule&) const = default;
};

struct PromptRecord {
  std::string id;
  std::string title;
  std::string icon;
  std::string template_text;
  // Absent means "use the model's default temperature".
  std::optional<double> temperature = kDefaultTemperature;
  std::optional<ParsingRule> parsing_rule;
  InsertionMode insertion_mode = InsertionMode::replace;
  std::optional<std::string> description;
  std::vector<std::string> tags;
  std::vector<std::string> recommended_models;
  std::int64_t run_count = 0;
  Timestamp created_at{};
  Timestamp updated_at{};
  std::optional<std::string> source_hub_id;

  bool operator==(const PromptRecord&) const = default;
};

struct ValidationResult {
  std::vector<std::string> violations;

  bool ok() const noexcept { return violations.empty(); }
  explicit operator bool() const noexcept { return ok(); }
};

ValidationResult validate_prompt(const PromptRecord& record, bool for_sharing);

// Content-derived identifier: a name-based (version 5) UUID over the
// canonical encoding of (title, template, parsing_rule, insertion_mode).
std::string derive_prompt_id(const PromptRecord& record);

// True for 8-4-4-4-12 lowercase hex.
bool is_prompt_id(std::string_view text) noexcept;

bool is_valid_tag(std::string_view tag) noexcept;

// Lowercases, maps whitespace/underscores to '-', trims, drops empties and
// duplicates (first occurrence wins). Does not enforce the length limit.
std::vector<std::string> normalize_tags(std::span<const std::string> tags);

// Visible glyph count: code points minus joiners, variation selectors,
// skin-tone modifiers and combining marks.
std::size_t visible_glyph_count(std::string_view text);

enum class EndpointKind { remote_chat_api, scripted_stub };

std::string_view to_string(EndpointKind kind) noexcept;
std::optional<EndpointKind> parse_endpoint_kind(std::string_view text);

enum class StubMode { echo, map, script };

std::string_view to_string(StubMode mode) noexcept;
std::optional<StubMode> parse_stub_mode(std::string_view text);

struct StubSettings {
  StubMode mode = StubMode::echo;
  // map mode: JSON array of {prompt_sha256, response}.
  std::string map_file;
  // script mode: canned responses returned in order.
  std::vector<std::string> script;

  bool operator==(const StubSettings&) const = default;
};

struct ModelConfig {
  std::string model_id;
  EndpointKind endpoint_kind = EndpointKind::scripted_stub;
  std::optional<std::string> base_url;
  std::optional<std::string> api_key_ref;
  double default_temperature = kDefaultTemperature;
  std::optional<StubSettings> stub;

  bool operator==(const ModelConfig&) const = default;
};

ValidationResult validate_model_config(const ModelConfig& config);

}  // namespace proselab
