#pragma once

#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "proselab/core_model.hpp"
#include "proselab/diff_engine.hpp"
#include "proselab/errors.hpp"
#include "proselab/hub_service.hpp"
#include "proselab/llm_gateway.hpp"
#include "proselab/prompt_library.hpp"
#include "proselab/run_pipeline.hpp"

namespace proselab {

using Json = nlohmann::json;

// Field names match the domain types exactly; timestamps are RFC 3339.
// Readers are lenient about absent optional fields and strict about types.
void to_json(Json& j, const ParsingRule& rule);
void from_json(const Json& j, ParsingRule& rule);
void to_json(Json& j, const PromptRecord& record);
void from_json(const Json& j, PromptRecord& record);
void to_json(Json& j, const StubSettings& stub);
void from_json(const Json& j, StubSettings& stub);
void to_json(Json& j, const ModelConfig& config);
void from_json(const Json& j, ModelConfig& config);
void to_json(Json& j, const DiffSegment& segment);
void from_json(const Json& j, DiffSegment& segment);
void to_json(Json& j, const ChangeSpan& span);
void from_json(const Json& j, ChangeSpan& span);
void to_json(Json& j, const HubEntry& entry);
void from_json(const Json& j, HubEntry& entry);
void to_json(Json& j, const TagCount& tag);
void from_json(const Json& j, TagCount& tag);
void to_json(Json& j, const ModelDescriptor& model);
void to_json(Json& j, const RunResult& result);
void from_json(const Json& j, RunResult& result);

// Only keys present in `j` are set; null clears nullable fields.
PromptPatch prompt_patch_from_json(const Json& j);

// Accepts either an array of "accept"/"reject" (indexed by span) or an
// object mapping span index to decision.
DecisionSet decisions_from_json(const Json& j);

// Never throws on invalid UTF-8; such bytes are replaced.
std::string dump_json(const Json& j, int indent = -1);

// Parses text and converts to T; any syntax or schema problem becomes
// Error(invalid_argument) naming `what`.
Json parse_json_text(std::string_view text, std::string_view what);

template <typename T>
T json_as(const Json& j, std::string_view what) {
  try {
    return j.get<T>();
  } catch (const Error&) {
    throw;
  } catch (const std::exception& e) {
    throw Error(ErrorCode::invalid_argument,
                "invalid " + std::string(what) + ": " + e.what());
  }
}

Json error_json(ErrorCode code, std::string_view message);

}  // namespace proselab
