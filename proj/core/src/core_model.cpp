#include "proselab/core_model.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <array>
#include <cctype>
#include <cstdio>
#include <ctime>
#include <unordered_set>

#include "proselab/errors.hpp"
#include "proselab/output_parser.hpp"
#include "proselab/utf8.hpp"

namespace proselab {
namespace {

// Namespace UUID for content-derived prompt ids.
constexpr std::array<unsigned char, 16> kPromptNamespace = {
    0x6f, 0x1b, 0x7a, 0x52, 0x3c, 0x4e, 0x4d, 0x8a,
    0x9f, 0x0e, 0x2b, 0x5c, 0x8d, 0x7e, 0x1a, 0x34};

void append_field(std::string& out, std::string_view field) {
  out += std::to_string(field.size());
  out += ':';
  out += field;
}

std::array<unsigned char, 20> sha1(std::string_view data) {
  std::array<unsigned char, 20> digest{};
  unsigned int len = 0;
  EVP_Digest(data.data(), data.size(), digest.data(), &len, EVP_sha1(), nullptr);
  return digest;
}

bool is_ignorable_in_glyph_count(char32_t cp) {
  return cp == 0x200D || cp == 0x200C ||
         (cp >= 0xFE00 && cp <= 0xFE0F) ||
         (cp >= 0x1F3FB && cp <= 0x1F3FF) ||
         (cp >= 0x0300 && cp <= 0x036F) ||
         (cp >= 0x20D0 && cp <= 0x20FF) ||
         (cp >= 0xE0020 && cp <= 0xE007F);
}

bool is_regional_indicator(char32_t cp) {
  return cp >= 0x1F1E6 && cp <= 0x1F1FF;
}

int parse_digits(std::string_view s, std::size_t pos, std::size_t n) {
  int v = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const char c = s[pos + i];
    if (c < '0' || c > '9') return -1;
    v = v * 10 + (c - '0');
  }
  return v;
}

}  // namespace

Timestamp now_utc() {
  return std::chrono::time_point_cast<std::chrono::milliseconds>(
      std::chrono::system_clock::now());
}

std::string format_rfc3339(Timestamp ts) {
  const auto secs = std::chrono::floor<std::chrono::seconds>(ts);
  const auto millis = (ts - secs).count();
  const std::time_t t = secs.time_since_epoch().count();
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[64];
  std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02d:%02d.%03dZ",
                tm.tm_year + 1900, tm.tm_mon + 1, tm.tm_mday, tm.tm_hour,
                tm.tm_min, tm.tm_sec, static_cast<int>(millis));
  return buf;
}

Timestamp parse_rfc3339(std::string_view s) {
  const auto fail = [&]() -> Timestamp {
    throw Error(ErrorCode::invalid_argument,
                "malformed RFC 3339 timestamp '" + std::string(s) + "'");
  };
  if (s.size() < 20 || s[4] != '-' || s[7] != '-' ||
      (s[10] != 'T' && s[10] != 't' && s[10] != ' ') || s[13] != ':' ||
      s[16] != ':') {
    return fail();
  }
  std::tm tm{};
  const int year = parse_digits(s, 0, 4);
  const int mon = parse_digits(s, 5, 2);
  const int day = parse_digits(s, 8, 2);
  const int hour = parse_digits(s, 11, 2);
  const int min = parse_digits(s, 14, 2);
  const int sec = parse_digits(s, 17, 2);
  if (year < 0 || mon < 1 || mon > 12 || day < 1 || day > 31 || hour < 0 ||
      hour > 23 || min < 0 || min > 59 || sec < 0 || sec > 60) {
    return fail();
  }
  tm.tm_year = year - 1900;
  tm.tm_mon = mon - 1;
  tm.tm_mday = day;
  tm.tm_hour = hour;
  tm.tm_min = min;
  tm.tm_sec = sec;

  std::size_t pos = 19;
  int millis = 0;
  if (pos < s.size() && s[pos] == '.') {
    ++pos;
    int digits = 0;
    while (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos]))) {
      if (digits < 3) millis = millis * 10 + (s[pos] - '0');
      ++digits;
      ++pos;
    }
    if (digits == 0) return fail();
    for (int d = digits; d < 3; ++d) millis *= 10;
  }
  int offset_minutes = 0;
  if (pos < s.size() && (s[pos] == 'Z' || s[pos] == 'z')) {
    ++pos;
  } else if (pos + 6 == s.size() && (s[pos] == '+' || s[pos] == '-') &&
             s[pos + 3] == ':') {
    const int oh = parse_digits(s, pos + 1, 2);
    const int om = parse_digits(s, pos + 4, 2);
    if (oh < 0 || om < 0) return fail();
    offset_minutes = (oh * 60 + om) * (s[pos] == '-' ? -1 : 1);
    pos += 6;
  } else {
    return fail();
  }
  if (pos != s.size()) return fail();

  const std::time_t t = timegm(&tm);
  return Timestamp{std::chrono::milliseconds{
      (static_cast<std::int64_t>(t) - offset_minutes * 60) * 1000 + millis}};
}

std::string_view to_string(InsertionMode mode) noexcept {
  return mode == InsertionMode::append ? "append" : "replace";
}

std::optional<InsertionMode> parse_insertion_mode(std::string_view text) {
  if (text == "replace") return InsertionMode::replace;
  if (text == "append") return InsertionMode::append;
  return std::nullopt;
}

std::string_view to_string(EndpointKind kind) noexcept {
  return kind == EndpointKind::remote_chat_api ? "remote_chat_api"
                                               : "scripted_stub";
}

std::optional<EndpointKind> parse_endpoint_kind(std::string_view text) {
  if (text == "remote_chat_api") return EndpointKind::remote_chat_api;
  if (text == "scripted_stub") return EndpointKind::scripted_stub;
  return std::nullopt;
}

std::string_view to_string(StubMode mode) noexcept {
  switch (mode) {
    case StubMode::echo: return "echo";
    case StubMode::map: return "map";
    case StubMode::script: return "script";
  }
  return "echo";
}

std::optional<StubMode> parse_stub_mode(std::string_view text) {
  if (text == "echo") return StubMode::echo;
  if (text == "map") return StubMode::map;
  if (text == "script") return StubMode::script;
  return std::nullopt;
}

bool is_prompt_id(std::string_view text) noexcept {
  if (text.size() != 36) return false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (i == 8 || i == 13 || i == 18 || i == 23) {
      if (c != '-') return false;
    } else if (!((c >= '0' && c <= '9') || (c >= 'a' && c <= 'f'))) {
      return false;
    }
  }
  return true;
}

bool is_valid_tag(std::string_view tag) noexcept {
  if (tag.empty() || tag.size() > kMaxTagLength) return false;
  return std::all_of(tag.begin(), tag.end(), [](char c) {
    return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '-';
  });
}

std::vector<std::string> normalize_tags(std::span<const std::string> tags) {
  std::vector<std::string> out;
  std::unordered_set<std::string> seen;
  for (const auto& raw : tags) {
    std::string tag;
    for (char c : raw) {
      const auto u = static_cast<unsigned char>(c);
      if (std::isspace(u) || c == '_') {
        tag += '-';
      } else {
        tag += static_cast<char>(std::tolower(u));
      }
    }
    const auto first = tag.find_first_not_of('-');
    if (first == std::string::npos) continue;
    tag = tag.substr(first, tag.find_last_not_of('-') - first + 1);
    if (seen.insert(tag).second) out.push_back(std::move(tag));
  }
  return out;
}

std::size_t visible_glyph_count(std::string_view text) {
  const auto cps = utf8::decode(text);
  std::size_t count = 0;
  bool pending_indicator = false;
  for (char32_t cp : cps) {
    if (is_ignorable_in_glyph_count(cp)) continue;
    if (is_regional_indicator(cp)) {
      if (pending_indicator) {
        pending_indicator = false;
        continue;
      }
      pending_indicator = true;
    } else {
      pending_indicator = false;
    }
    ++count;
  }
  return count;
}

ValidationResult validate_prompt(const PromptRecord& record, bool for_sharing) {
  ValidationResult result;
  auto& v = result.violations;

  const auto first = record.title.find_first_not_of(" \t\r\n\f\v");
  if (first == std::string::npos) v.emplace_back("title must be non-empty");
  if (visible_glyph_count(record.icon) > kMaxIconGlyphs) {
    v.emplace_back("icon must be at most 4 visible characters");
  }
  if (record.temperature &&
      !(*record.temperature >= kMinTemperature &&
        *record.temperature <= kMaxTemperature)) {
    v.emplace_back("temperature out of range");
  }
  if (record.run_count < 0) v.emplace_back("run_count must be non-negative");
  if (!record.id.empty() && !is_prompt_id(record.id)) {
    v.emplace_back("id must use the 8-4-4-4-12 lowercase hex layout");
  }
  if (record.source_hub_id && !is_prompt_id(*record.source_hub_id)) {
    v.emplace_back("source_hub_id must use the 8-4-4-4-12 lowercase hex layout");
  }

  std::unordered_set<std::string_view> seen;
  for (const auto& tag : record.tags) {
    if (!is_valid_tag(tag)) {
      v.push_back("tag '" + tag + "' must match [a-z0-9-]{1,32}");
    } else if (!seen.insert(tag).second) {
      v.push_back("duplicate tag '" + tag + "'");
    }
  }
  for (const auto& model : record.recommended_models) {
    if (model.empty()) {
      v.emplace_back("recommended model ids must be non-empty");
      break;
    }
  }
  if (record.parsing_rule) {
    for (auto& msg : validate_rule(*record.parsing_rule).violations) {
      v.push_back("parsing_rule: " + msg);
    }
  }

  if (for_sharing) {
    if (!record.description ||
        record.description->find_first_not_of(" \t\r\n\f\v") == std::string::npos) {
      v.emplace_back("description must be non-empty when sharing");
    }
    if (record.tags.empty()) v.emplace_back("tags must be non-empty when sharing");
  }
  return result;
}

std::string derive_prompt_id(const PromptRecord& record) {
  std::string name = "prompt/v1;";
  append_field(name, record.title);
  append_field(name, record.template_text);
  if (record.parsing_rule) {
    name += 'R';
    append_field(name, record.parsing_rule->pattern);
    append_field(name, record.parsing_rule->replacement);
  } else {
    name += 'N';
  }
  append_field(name, to_string(record.insertion_mode));

  std::string input(reinterpret_cast<const char*>(kPromptNamespace.data()),
                    kPromptNamespace.size());
  input += name;
  auto digest = sha1(input);
  digest[6] = static_cast<unsigned char>((digest[6] & 0x0F) | 0x50);
  digest[8] = static_cast<unsigned char>((digest[8] & 0x3F) | 0x80);

  static constexpr char kHex[] = "0123456789abcdef";
  std::string id;
  id.reserve(36);
  for (std::size_t i = 0; i < 16; ++i) {
    if (i == 4 || i == 6 || i == 8 || i == 10) id += '-';
    id += kHex[digest[i] >> 4];
    id += kHex[digest[i] & 0x0F];
  }
  return id;
}

ValidationResult validate_model_config(const ModelConfig& config) {
  ValidationResult result;
  auto& v = result.violations;
  if (config.model_id.empty()) v.emplace_back("model_id must be non-empty");
  if (!(config.default_temperature >= kMinTemperature &&
        config.default_temperature <= kMaxTemperature)) {
    v.emplace_back("default_temperature out of range");
  }
  if (config.endpoint_kind == EndpointKind::remote_chat_api) {
    if (!config.base_url || config.base_url->empty()) {
      v.emplace_back("remote_chat_api requires base_url");
    }
    if (config.stub) v.emplace_back("remote_chat_api does not take stub settings");
  } else {
    if (config.base_url) v.emplace_back("scripted_stub must not set base_url");
    if (config.api_key_ref) v.emplace_back("scripted_stub must not set api_key_ref");
    if (config.stub && config.stub->mode == StubMode::map &&
        config.stub->map_file.empty()) {
      v.emplace_back("map stub requires map_file");
    }
  }
  return result;
}

}  // namespace proselab
