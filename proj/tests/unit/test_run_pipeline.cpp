#include <doctest.h>

#include "proselab/errors.hpp"
#include "proselab/prompt_library.hpp"
#include "proselab/run_pipeline.hpp"
#include "temp_dir.hpp"

using namespace proselab;

namespace {

ModelConfig script_model(std::vector<std::string> replies) {
  ModelConfig m;
  m.model_id = "script";
  m.default_temperature = 0.4;
  m.stub = StubSettings{StubMode::script, "", std::move(replies)};
  return m;
}

PromptRecord improve() {
  PromptRecord r;
  r.title = "Improve";
  r.template_text = "Improve: {{text}}";
  r.parsing_rule = ParsingRule{".*<output>(.*)</output>.*", "$1"};
  return r;
}

struct Recording : ModelBackend {
  CompletionRequest last;
  CompletionResult complete(const CompletionRequest& r) override {
    last = r;
    return {"ok", r.model.model_id, {}};
  }
};

}  // namespace

TEST_CASE("render, complete, parse and diff") {
  LlmGateway gw;
  RunPipeline pipeline(gw);
  auto result = pipeline.run_prompt(improve(), "helo wrld",
                                    script_model({"Sure! <output>hello world</output>"}));
  CHECK(result.rendered_prompt == "Improve: helo wrld");
  CHECK(result.raw_output == "Sure! <output>hello world</output>");
  CHECK(result.parsed_output == "hello world");
  CHECK(result.parse_matched);
  CHECK(result.model_id == "script");
  CHECK_FALSE(result.spans.empty());
  CHECK(accepted_text(result) == "hello world");
}

TEST_CASE("append mode adds a single insertion") {
  LlmGateway gw;
  RunPipeline pipeline(gw);
  auto p = improve();
  p.insertion_mode = InsertionMode::append;
  p.parsing_rule.reset();
  auto result = pipeline.run_prompt(p, "Hello", script_model({"Bonjour"}));
  REQUIRE(result.spans.size() == 1);
  CHECK(accepted_text(result) == "Hello\nBonjour");
}

TEST_CASE("temperature falls back to the model default") {
  LlmGateway gw;
  auto backend = std::make_shared<Recording>();
  gw.register_backend("rec", backend);
  ModelConfig m;
  m.model_id = "rec";
  m.default_temperature = 0.4;
  RunPipeline pipeline(gw);
  auto p = improve();
  p.temperature = 1.1;
  pipeline.run_prompt(p, "x", m);
  CHECK(backend->last.temperature == doctest::Approx(1.1));
  p.temperature.reset();
  pipeline.run_prompt(p, "x", m);
  CHECK(backend->last.temperature == doctest::Approx(0.4));
}

TEST_CASE("run counts only move on success") {
  testsupport::TempDir dir;
  PromptLibrary lib(dir.path());
  auto p = improve();
  p.id = lib.add_prompt(p);
  LlmGateway gw;
  RunPipeline pipeline(gw, &lib);
  auto model = script_model({"<output>a</output>"});
  pipeline.run_prompt(lib.get(p.id), "b", model);
  CHECK(lib.get(p.id).run_count == 1);
  CHECK_THROWS_AS(pipeline.run_prompt(lib.get(p.id), "b", model), Error);  // script exhausted
  CHECK(lib.get(p.id).run_count == 1);

  try {
    pipeline.run_prompt(lib.get(p.id), "", model);
    FAIL("expected empty_input");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::empty_input);
  }

  // Prompts that are not in the library run without touching it.
  auto other = improve();
  other.title = "Unsaved";
  CHECK_NOTHROW(pipeline.run_prompt(other, "x", script_model({"y"})));
}

TEST_CASE("invalid prompts are rejected before the model is called") {
  LlmGateway gw;
  auto backend = std::make_shared<Recording>();
  gw.register_backend("rec", backend);
  ModelConfig m;
  m.model_id = "rec";
  auto p = improve();
  p.temperature = 9;
  RunPipeline pipeline(gw);
  CHECK_THROWS_AS(pipeline.run_prompt(p, "x", m), ValidationError);
  CHECK(backend->last.prompt.empty());
}
