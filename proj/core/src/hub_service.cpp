#include "proselab/hub_service.hpp"

#include <charconv>

#include "proselab/errors.hpp"
#include "proselab/utf8.hpp"

namespace proselab {
namespace {

std::string hex_encode(std::string_view raw) {
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(raw.size() * 2);
  for (unsigned char c : raw) {
    out += kHex[c >> 4];
    out += kHex[c & 0x0F];
  }
  return out;
}

std::optional<std::string> hex_decode(std::string_view hex) {
  if (hex.size() % 2 != 0) return std::nullopt;
  std::string out;
  out.reserve(hex.size() / 2);
  for (std::size_t i = 0; i < hex.size(); i += 2) {
    unsigned value = 0;
    const auto [ptr, ec] = std::from_chars(hex.data() + i, hex.data() + i + 2, value, 16);
    if (ec != std::errc{} || ptr != hex.data() + i + 2) return std::nullopt;
    out += static_cast<char>(value);
  }
  return out;
}

std::string encode_cursor(HubSort sort, const HubEntry& last) {
  const std::int64_t key = sort == HubSort::popular
                               ? last.run_count
                               : static_cast<std::int64_t>(last.shared_at.time_since_epoch().count());
  return hex_encode("c1|" + std::string(to_string(sort)) + "|" + std::to_string(key) +
                    "|" + last.id);
}

ListPosition decode_cursor(std::string_view cursor, HubSort sort) {
  const auto invalid = [] {
    return Error(ErrorCode::invalid_cursor, "cursor is malformed or does not match the query");
  };
  const auto raw = hex_decode(cursor);
  if (!raw) throw invalid();
  const std::string prefix = "c1|" + std::string(to_string(sort)) + "|";
  if (!raw->starts_with(prefix)) throw invalid();
  const std::string_view rest = std::string_view(*raw).substr(prefix.size());
  const auto bar = rest.find('|');
  if (bar == std::string_view::npos) throw invalid();
  ListPosition pos;
  const auto key_text = rest.substr(0, bar);
  const auto [ptr, ec] =
      std::from_chars(key_text.data(), key_text.data() + key_text.size(), pos.key);
  if (ec != std::errc{} || ptr != key_text.data() + key_text.size()) throw invalid();
  pos.id = std::string(rest.substr(bar + 1));
  if (!is_prompt_id(pos.id)) throw invalid();
  return pos;
}

void require_id(const std::string& id) {
  if (!is_prompt_id(id)) {
    throw Error(ErrorCode::invalid_argument, "malformed prompt id '" + id + "'");
  }
}

}  // namespace

std::string_view to_string(HubSort sort) noexcept {
  return sort == HubSort::popular ? "popular" : "new";
}

std::optional<HubSort> parse_hub_sort(std::string_view text) {
  if (text == "new") return HubSort::newest;
  if (text == "popular") return HubSort::popular;
  return std::nullopt;
}

HubEntry hub_entry_from_prompt(const PromptRecord& r) {
  HubEntry e;
  e.id = derive_prompt_id(r);
  e.title = r.title;
  e.icon = r.icon;
  e.template_text = r.template_text;
  e.temperature = r.temperature;
  e.parsing_rule = r.parsing_rule;
  e.insertion_mode = r.insertion_mode;
  e.description = r.description.value_or("");
  e.tags = r.tags;
  e.recommended_models = r.recommended_models;
  return e;
}

PromptRecord prompt_from_hub_entry(const HubEntry& e) {
  PromptRecord r;
  r.id = e.id;
  r.title = e.title;
  r.icon = e.icon;
  r.template_text = e.template_text;
  r.temperature = e.temperature;
  r.parsing_rule = e.parsing_rule;
  r.insertion_mode = e.insertion_mode;
  r.description = e.description;
  r.tags = e.tags;
  r.recommended_models = e.recommended_models;
  return r;
}

HubService::HubService(std::shared_ptr<HubStore> store, HubOptions options)
    : store_(std::move(store)), options_(std::move(options)) {
  if (!options_.clock) options_.clock = now_utc;
}

std::string HubService::share(const PromptRecord& candidate) {
  return share_entry(candidate).first;
}

std::pair<std::string, bool> HubService::share_entry(const PromptRecord& candidate) {
  if (auto v = validate_prompt(candidate, /*for_sharing=*/true); !v.ok()) {
    throw ValidationError(std::move(v.violations));
  }
  HubEntry entry = hub_entry_from_prompt(candidate);
  entry.shared_at = options_.clock();
  const bool created = store_->insert_if_absent(entry);
  return {entry.id, created};
}

HubPage HubService::list(const ListQuery& query) {
  if (query.limit == 0 || query.limit > kMaxListLimit) {
    throw Error(ErrorCode::invalid_argument,
                "limit must be between 1 and " + std::to_string(kMaxListLimit));
  }
  std::optional<ListPosition> after;
  if (query.cursor) after = decode_cursor(*query.cursor, query.sort);

  HubPage page;
  page.entries = store_->list(query.tag, query.sort, after, query.limit + 1,
                              options_.hide_threshold);
  if (page.entries.size() > query.limit) {
    page.entries.resize(query.limit);
    page.next_cursor = encode_cursor(query.sort, page.entries.back());
  }
  return page;
}

HubEntry HubService::get(const std::string& id) {
  require_id(id);
  if (auto entry = store_->get(id)) return *entry;
  throw Error(ErrorCode::not_found, "hub prompt not found: " + id);
}

std::int64_t HubService::record_hub_run(const std::string& id) {
  require_id(id);
  if (auto count = store_->increment_runs(id)) return *count;
  throw Error(ErrorCode::not_found, "hub prompt not found: " + id);
}

std::int64_t HubService::report(const std::string& id, const std::string& reason) {
  require_id(id);
  if (utf8::length(reason) > kMaxReportReasonLength) {
    throw Error(ErrorCode::invalid_argument, "reason must be at most " +
                                                 std::to_string(kMaxReportReasonLength) +
                                                 " characters");
  }
  if (auto count = store_->add_report(id, reason, options_.clock())) return *count;
  throw Error(ErrorCode::not_found, "hub prompt not found: " + id);
}

std::vector<TagCount> HubService::top_tags(std::size_t limit) {
  if (limit == 0 || limit > kMaxTagLimit) {
    throw Error(ErrorCode::invalid_argument,
                "limit must be between 1 and " + std::to_string(kMaxTagLimit));
  }
  return store_->top_tags(limit, options_.hide_threshold);
}

}  // namespace proselab
