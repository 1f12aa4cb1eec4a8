#include "proselab/run_pipeline.hpp"

#include "proselab/errors.hpp"
#include "proselab/output_parser.hpp"
#include "proselab/template_engine.hpp"

namespace proselab {

RunResult RunPipeline::run_prompt(const PromptRecord& record, std::string_view input,
                                  const ModelConfig& model) {
  if (input.empty()) throw Error(ErrorCode::empty_input, "input text is empty");
  if (auto v = validate_prompt(record, false); !v.ok()) {
    throw ValidationError(std::move(v.violations));
  }

  RunResult result;
  result.input = std::string(input);
  result.insertion_mode = record.insertion_mode;
  result.rendered_prompt = render_prompt(record.template_text, input).text;

  CompletionRequest request;
  request.prompt = result.rendered_prompt;
  request.temperature = record.temperature.value_or(model.default_temperature);
  request.model = model;
  const auto completion = gateway_.complete(request);
  result.raw_output = completion.text;
  result.model_id = completion.model_id;
  result.latency = completion.latency;

  auto parsed = parse_output(result.raw_output, record.parsing_rule);
  result.parsed_output = std::move(parsed.text);
  result.parse_matched = parsed.matched;
  result.spans = diff_for_insertion_mode(result.input, result.parsed_output,
                                         record.insertion_mode);

  if (library_ != nullptr && !record.id.empty() && library_->contains(record.id)) {
    library_->record_run(record.id);
  }
  return result;
}

std::string accepted_text(const RunResult& result) {
  return apply_decisions(result.input, result.spans,
                         uniform_decisions(result.spans, Decision::accept));
}

}  // namespace proselab
