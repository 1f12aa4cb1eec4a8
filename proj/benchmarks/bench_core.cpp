#include <benchmark/benchmark.h>

#include "generators.hpp"
#include "proselab/diff_engine.hpp"
#include "proselab/output_parser.hpp"
#include "proselab/template_engine.hpp"

using namespace proselab;

namespace {

// A paragraph and a lightly edited copy of it.
std::pair<std::string, std::string> paragraph_pair(std::size_t words, std::size_t edits) {
  testsupport::Gen gen(words * 31 + edits);
  const std::vector<std::string> pool = {"the ", "model ", "writes ", "text ", "quickly ", "and ",
                                         "\xE6\x97\xA5\xE6\x9C\xAC ", "flow ", "better ", ". "};
  std::vector<std::string> base;
  for (std::size_t i = 0; i < words; ++i) base.push_back(gen.pick(pool));
  auto revised = base;
  for (std::size_t e = 0; e < edits; ++e) revised[gen.below(revised.size())] = gen.pick(pool);
  return {testsupport::join(base), testsupport::join(revised)};
}

void BM_DiffEdited(benchmark::State& state) {
  const auto [a, b] = paragraph_pair(static_cast<std::size_t>(state.range(0)),
                                     static_cast<std::size_t>(state.range(0) / 10));
  for (auto _ : state) {
    auto spans = coalesce_spans(compute_diff(a, b));
    benchmark::DoNotOptimize(spans);
  }
  state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations() * (a.size() + b.size())));
}
BENCHMARK(BM_DiffEdited)->Arg(50)->Arg(200)->Arg(1000);

void BM_DiffUnrelated(benchmark::State& state) {
  testsupport::Gen gen(1);
  const auto a = gen.string_over("abcdefgh ", static_cast<std::size_t>(state.range(0)));
  const auto b = gen.string_over("abcdefgh ", static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(compute_diff(a, b));
}
BENCHMARK(BM_DiffUnrelated)->Arg(100)->Arg(1000);

void BM_ParseOutputTag(benchmark::State& state) {
  const ParsingRule rule{".*<output>(.*)</output>.*", "$1"};
  const std::string raw = "Sure, I can help you! <output>" + std::string(static_cast<std::size_t>(state.range(0)), 'x') +
                          "</output> Let me know if you need anything else.";
  for (auto _ : state) benchmark::DoNotOptimize(parse_output(raw, rule));
}
BENCHMARK(BM_ParseOutputTag)->Arg(100)->Arg(10000);

void BM_RenderPrompt(benchmark::State& state) {
  const std::string tmpl = "Improve the flow of the following text: {{text}}\nKeep {{text}} tone.";
  const std::string input(static_cast<std::size_t>(state.range(0)), 'y');
  for (auto _ : state) benchmark::DoNotOptimize(render_prompt(tmpl, input));
}
BENCHMARK(BM_RenderPrompt)->Arg(100)->Arg(10000);

}  // namespace
BENCHMARK_MAIN();
