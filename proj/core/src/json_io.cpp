#include "proselab/json_io.hpp"

namespace proselab {
namespace {

template <typename T>
void read_optional(const Json& j, const char* key, T& out) {
  if (auto it = j.find(key); it != j.end() && !it->is_null()) {
    out = it->get<T>();
  }
}

template <typename T>
void read_nullable(const Json& j, const char* key, std::optional<T>& out) {
  if (auto it = j.find(key); it != j.end()) {
    if (it->is_null()) {
      out.reset();
    } else {
      out = it->get<T>();
    }
  }
}

Timestamp read_timestamp(const Json& j, const char* key) {
  if (auto it = j.find(key); it != j.end() && !it->is_null()) {
    return parse_rfc3339(it->get<std::string>());
  }
  return Timestamp{};
}

template <typename Enum, typename Parser>
Enum read_enum(const Json& j, const char* key, Enum fallback, Parser parse) {
  if (auto it = j.find(key); it != j.end() && !it->is_null()) {
    const auto text = it->get<std::string>();
    if (auto v = parse(text)) return *v;
    throw Error(ErrorCode::invalid_argument,
                std::string("unknown ") + key + " '" + text + "'");
  }
  return fallback;
}

Json nullable(const std::optional<std::string>& v) {
  return v ? Json(*v) : Json(nullptr);
}

}  // namespace

void to_json(Json& j, const ParsingRule& rule) {
  j = Json{{"pattern", rule.pattern}, {"replacement", rule.replacement}};
}

void from_json(const Json& j, ParsingRule& rule) {
  rule.pattern = j.at("pattern").get<std::string>();
  rule.replacement = j.at("replacement").get<std::string>();
}

void to_json(Json& j, const PromptRecord& r) {
  j = Json{
      {"id", r.id},
      {"title", r.title},
      {"icon", r.icon},
      {"template", r.template_text},
      {"temperature", r.temperature ? Json(*r.temperature) : Json(nullptr)},
      {"parsing_rule", r.parsing_rule ? Json(*r.parsing_rule) : Json(nullptr)},
      {"insertion_mode", to_string(r.insertion_mode)},
      {"description", nullable(r.description)},
      {"tags", r.tags},
      {"recommended_models", r.recommended_models},
      {"run_count", r.run_count},
      {"created_at", format_rfc3339(r.created_at)},
      {"updated_at", format_rfc3339(r.updated_at)},
      {"source_hub_id", nullable(r.source_hub_id)},
  };
}

void from_json(const Json& j, PromptRecord& r) {
  if (!j.is_object()) throw Error(ErrorCode::invalid_argument, "prompt must be an object");
  r = PromptRecord{};
  read_optional(j, "id", r.id);
  r.title = j.at("title").get<std::string>();
  read_optional(j, "icon", r.icon);
  r.template_text = j.at("template").get<std::string>();
  read_nullable(j, "temperature", r.temperature);
  read_nullable(j, "parsing_rule", r.parsing_rule);
  r.insertion_mode = read_enum(j, "insertion_mode", InsertionMode::replace,
                               parse_insertion_mode);
  read_nullable(j, "description", r.description);
  read_optional(j, "tags", r.tags);
  read_optional(j, "recommended_models", r.recommended_models);
  read_optional(j, "run_count", r.run_count);
  r.created_at = read_timestamp(j, "created_at");
  r.updated_at = read_timestamp(j, "updated_at");
  read_nullable(j, "source_hub_id", r.source_hub_id);
}

void to_json(Json& j, const StubSettings& stub) {
  j = Json{{"mode", to_string(stub.mode)}};
  if (!stub.map_file.empty()) j["map_file"] = stub.map_file;
  if (!stub.script.empty()) j["script"] = stub.script;
}

void from_json(const Json& j, StubSettings& stub) {
  stub = StubSettings{};
  stub.mode = read_enum(j, "mode", StubMode::echo, parse_stub_mode);
  read_optional(j, "map_file", stub.map_file);
  read_optional(j, "script", stub.script);
}

void to_json(Json& j, const ModelConfig& c) {
  j = Json{
      {"model_id", c.model_id},
      {"endpoint_kind", to_string(c.endpoint_kind)},
      {"base_url", nullable(c.base_url)},
      {"api_key_ref", nullable(c.api_key_ref)},
      {"default_temperature", c.default_temperature},
  };
  if (c.stub) j["stub"] = *c.stub;
}

void from_json(const Json& j, ModelConfig& c) {
  c = ModelConfig{};
  c.model_id = j.at("model_id").get<std::string>();
  c.endpoint_kind = read_enum(j, "endpoint_kind", EndpointKind::scripted_stub,
                              parse_endpoint_kind);
  read_nullable(j, "base_url", c.base_url);
  read_nullable(j, "api_key_ref", c.api_key_ref);
  read_optional(j, "default_temperature", c.default_temperature);
  read_nullable(j, "stub", c.stub);
}

void to_json(Json& j, const DiffSegment& s) {
  j = Json{{"kind", to_string(s.kind)}, {"text", s.text}};
}

void from_json(const Json& j, DiffSegment& s) {
  s.kind = read_enum(j, "kind", SegmentKind::equal, parse_segment_kind);
  s.text = j.at("text").get<std::string>();
}

void to_json(Json& j, const ChangeSpan& s) {
  j = Json{
      {"index", s.index},
      {"kind", to_string(s.kind)},
      {"original_text", s.original_text},
      {"revised_text", s.revised_text},
      {"original_offset", s.original_offset},
      {"revised_offset", s.revised_offset},
  };
}

void from_json(const Json& j, ChangeSpan& s) {
  s.index = j.at("index").get<std::size_t>();
  s.kind = read_enum(j, "kind", ChangeKind::replacement, parse_change_kind);
  s.original_text = j.value("original_text", std::string{});
  s.revised_text = j.value("revised_text", std::string{});
  s.original_offset = j.at("original_offset").get<std::size_t>();
  s.revised_offset = j.value("revised_offset", std::size_t{0});
}

void to_json(Json& j, const HubEntry& e) {
  j = Json{
      {"id", e.id},
      {"title", e.title},
      {"icon", e.icon},
      {"template", e.template_text},
      {"temperature", e.temperature ? Json(*e.temperature) : Json(nullptr)},
      {"parsing_rule", e.parsing_rule ? Json(*e.parsing_rule) : Json(nullptr)},
      {"insertion_mode", to_string(e.insertion_mode)},
      {"description", e.description},
      {"tags", e.tags},
      {"recommended_models", e.recommended_models},
      {"run_count", e.run_count},
      {"shared_at", format_rfc3339(e.shared_at)},
      {"report_count", e.report_count},
  };
}

void from_json(const Json& j, HubEntry& e) {
  e = HubEntry{};
  e.id = j.at("id").get<std::string>();
  e.title = j.at("title").get<std::string>();
  read_optional(j, "icon", e.icon);
  e.template_text = j.at("template").get<std::string>();
  read_nullable(j, "temperature", e.temperature);
  read_nullable(j, "parsing_rule", e.parsing_rule);
  e.insertion_mode = read_enum(j, "insertion_mode", InsertionMode::replace,
                               parse_insertion_mode);
  read_optional(j, "description", e.description);
  read_optional(j, "tags", e.tags);
  read_optional(j, "recommended_models", e.recommended_models);
  read_optional(j, "run_count", e.run_count);
  e.shared_at = read_timestamp(j, "shared_at");
  read_optional(j, "report_count", e.report_count);
}

void to_json(Json& j, const TagCount& t) {
  j = Json{{"tag", t.tag}, {"count", t.count}};
}

void from_json(const Json& j, TagCount& t) {
  t.tag = j.at("tag").get<std::string>();
  t.count = j.at("count").get<std::int64_t>();
}

void to_json(Json& j, const ModelDescriptor& m) {
  j = Json{{"model_id", m.model_id}, {"endpoint_kind", to_string(m.endpoint_kind)}};
}

void to_json(Json& j, const RunResult& r) {
  j = Json{
      {"input", r.input},
      {"rendered_prompt", r.rendered_prompt},
      {"raw_output", r.raw_output},
      {"parsed_output", r.parsed_output},
      {"parse_matched", r.parse_matched},
      {"spans", r.spans},
      {"insertion_mode", to_string(r.insertion_mode)},
      {"model_id", r.model_id},
      {"latency_ms", r.latency.count()},
  };
}

void from_json(const Json& j, RunResult& r) {
  r.input = j.at("input").get<std::string>();
  r.rendered_prompt = j.at("rendered_prompt").get<std::string>();
  r.raw_output = j.at("raw_output").get<std::string>();
  r.parsed_output = j.at("parsed_output").get<std::string>();
  r.parse_matched = j.at("parse_matched").get<bool>();
  r.spans = j.at("spans").get<std::vector<ChangeSpan>>();
  r.insertion_mode = read_enum(j, "insertion_mode", InsertionMode::replace,
                               parse_insertion_mode);
  r.model_id = j.at("model_id").get<std::string>();
  r.latency = std::chrono::milliseconds{j.value("latency_ms", std::int64_t{0})};
}

PromptPatch prompt_patch_from_json(const Json& j) {
  if (!j.is_object()) throw Error(ErrorCode::invalid_argument, "patch must be an object");
  PromptPatch p;
  const auto has = [&](const char* key) { return j.contains(key); };
  if (has("title")) p.title = j["title"].get<std::string>();
  if (has("icon")) p.icon = j["icon"].get<std::string>();
  if (has("template")) p.template_text = j["template"].get<std::string>();
  if (has("temperature")) {
    p.temperature = j["temperature"].is_null() ? std::optional<double>{}
                                               : j["temperature"].get<double>();
  }
  if (has("parsing_rule")) {
    p.parsing_rule = j["parsing_rule"].is_null() ? std::optional<ParsingRule>{}
                                                 : j["parsing_rule"].get<ParsingRule>();
  }
  if (has("insertion_mode") && !j["insertion_mode"].is_null()) {
    p.insertion_mode = read_enum(j, "insertion_mode", InsertionMode::replace,
                                 parse_insertion_mode);
  }
  if (has("description")) {
    p.description = j["description"].is_null() ? std::optional<std::string>{}
                                               : j["description"].get<std::string>();
  }
  if (has("tags")) p.tags = j["tags"].get<std::vector<std::string>>();
  if (has("recommended_models")) {
    p.recommended_models = j["recommended_models"].get<std::vector<std::string>>();
  }
  return p;
}

DecisionSet decisions_from_json(const Json& j) {
  DecisionSet out;
  const auto decode = [](const Json& v) {
    const auto text = v.get<std::string>();
    if (auto d = parse_decision(text)) return *d;
    throw Error(ErrorCode::invalid_argument, "unknown decision '" + text + "'");
  };
  if (j.is_array()) {
    for (std::size_t i = 0; i < j.size(); ++i) out.emplace(i, decode(j[i]));
  } else if (j.is_object()) {
    for (const auto& [key, value] : j.items()) {
      std::size_t index = 0;
      try {
        std::size_t used = 0;
        index = std::stoul(key, &used);
        if (used != key.size()) throw std::invalid_argument(key);
      } catch (const std::exception&) {
        throw Error(ErrorCode::invalid_argument, "invalid span index '" + key + "'");
      }
      out.emplace(index, decode(value));
    }
  } else {
    throw Error(ErrorCode::invalid_argument, "decisions must be an array or object");
  }
  return out;
}

std::string dump_json(const Json& j, int indent) {
  return j.dump(indent, ' ', false, Json::error_handler_t::replace);
}

Json parse_json_text(std::string_view text, std::string_view what) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw Error(ErrorCode::invalid_argument,
                "malformed " + std::string(what) + ": " + e.what());
  }
}

Json error_json(ErrorCode code, std::string_view message) {
  return Json{{"code", to_string(code)}, {"message", message}};
}

}  // namespace proselab
