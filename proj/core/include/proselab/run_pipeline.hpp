#pragma once

#include <chrono>
#include <string>
#include <string_view>
#include <vector>

#include "proselab/core_model.hpp"
#include "proselab/diff_engine.hpp"
#include "proselab/llm_gateway.hpp"
#include "proselab/prompt_library.hpp"

namespace proselab {

struct RunResult {
  std::string input;
  std::string rendered_prompt;
  std::string raw_output;
  std::string parsed_output;
  bool parse_matched = false;
  std::vector<ChangeSpan> spans;
  InsertionMode insertion_mode = InsertionMode::replace;
  std::string model_id;
  std::chrono::milliseconds latency{0};

  bool operator==(const RunResult&) const = default;
};

// render -> complete -> parse -> diff. When a library is attached and holds
// the prompt, a successful run bumps its run count exactly once; failed runs
// leave it untouched.
class RunPipeline {
 public:
  explicit RunPipeline(LlmGateway& gateway, PromptLibrary* library = nullptr)
      : gateway_(gateway), library_(library) {}

  // Throws Error(empty_input), ValidationError, or gateway errors.
  RunResult run_prompt(const PromptRecord& record, std::string_view input,
                       const ModelConfig& model);

 private:
  LlmGateway& gateway_;
  PromptLibrary* library_;
};

// The document text after accepting every span.
std::string accepted_text(const RunResult& result);

}  // namespace proselab
