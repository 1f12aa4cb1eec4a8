#include <doctest.h>

#include <algorithm>

#include "proselab/core_model.hpp"
#include "proselab/errors.hpp"

using namespace proselab;

namespace {

PromptRecord sample() {
  PromptRecord r;
  r.title = "Improve flow";
  r.template_text = "Improve the flow of the following text: {{text}}";
  return r;
}

bool has(const ValidationResult& v, std::string_view needle) {
  return std::any_of(v.violations.begin(), v.violations.end(),
                     [&](const std::string& s) { return s.find(needle) != std::string::npos; });
}

}  // namespace

TEST_CASE("prompt validation") {
  auto r = sample();
  CHECK(validate_prompt(r, false).ok());

  r.title = "  ";
  CHECK(has(validate_prompt(r, false), "title must be non-empty"));

  r = sample();
  r.temperature = 2.5;
  CHECK(has(validate_prompt(r, false), "temperature out of range"));
  r.temperature = -0.1;
  CHECK_FALSE(validate_prompt(r, false).ok());
  r.temperature = 2.0;
  CHECK(validate_prompt(r, false).ok());
  r.temperature = std::nullopt;
  CHECK(validate_prompt(r, false).ok());

  r = sample();
  r.icon = "\xF0\x9F\x91\xA9\xE2\x80\x8D\xF0\x9F\x92\xBB";  // one ZWJ glyph
  CHECK(validate_prompt(r, false).ok());
  r.icon = "abcde";
  CHECK(has(validate_prompt(r, false), "icon"));

  r = sample();
  r.parsing_rule = ParsingRule{"(unclosed", "$1"};
  CHECK(has(validate_prompt(r, false), "parsing_rule:"));

  r = sample();
  r.tags = {"Bad Tag"};
  CHECK_FALSE(validate_prompt(r, false).ok());
  r.tags = {"ok", "ok"};
  CHECK(has(validate_prompt(r, false), "duplicate tag"));
}

TEST_CASE("sharing needs a tag and a description") {
  auto r = sample();
  auto v = validate_prompt(r, true);
  CHECK(has(v, "tags must be non-empty when sharing"));
  CHECK(has(v, "description must be non-empty when sharing"));
  r.tags = {"writing"};
  r.description = "Smooth text";
  CHECK(validate_prompt(r, true).ok());
}

TEST_CASE("prompt ids are name-based UUIDs over content") {
  auto r = sample();
  // Frozen against Python's uuid.uuid5 over the same canonical encoding.
  CHECK(derive_prompt_id(r) == "52369ff0-3d73-5455-953f-7cff628b478b");

  PromptRecord t;
  t.title = "Translate English to Japanese";
  t.template_text = "Translate to Japanese: {{text}}";
  t.parsing_rule = ParsingRule{".*<output>(.*)</output>.*", "$1"};
  t.insertion_mode = InsertionMode::append;
  CHECK(derive_prompt_id(t) == "48a3bbcd-2c38-57a3-b1fd-228082c40fd4");

  const auto id = derive_prompt_id(r);
  CHECK(is_prompt_id(id));
  CHECK(id[14] == '5');
  CHECK(std::string_view("89ab").find(id[19]) != std::string_view::npos);

  auto cosmetic = r;
  cosmetic.icon = "x";
  cosmetic.tags = {"a"};
  cosmetic.temperature = 1.5;
  cosmetic.run_count = 99;
  cosmetic.description = "d";
  CHECK(derive_prompt_id(cosmetic) == id);

  auto edited = r;
  edited.template_text += " ";
  CHECK(derive_prompt_id(edited) != id);
  edited = r;
  edited.insertion_mode = InsertionMode::append;
  CHECK(derive_prompt_id(edited) != id);
  edited = r;
  edited.parsing_rule = ParsingRule{"(.*)", "$1"};
  CHECK(derive_prompt_id(edited) != id);

  // Length prefixes keep field boundaries unambiguous.
  PromptRecord a, b;
  a.title = "ab";
  a.template_text = "c";
  b.title = "a";
  b.template_text = "bc";
  CHECK(derive_prompt_id(a) != derive_prompt_id(b));
}

TEST_CASE("ids from shared links have the expected layout") {
  for (auto link : {"b131cdb7-558e-5845-9b83-f877f5718b66", "49f7307e-90a3-5937-a63f-6dd42057c4d6",
                    "7dff88cf-ff9a-587f-a3d1-f436301f72a2"}) {
    CHECK(is_prompt_id(link));
  }
  CHECK_FALSE(is_prompt_id("B131CDB7-558E-5845-9B83-F877F5718B66"));
  CHECK_FALSE(is_prompt_id("b131cdb7558e58459b83f877f5718b66"));
  CHECK_FALSE(is_prompt_id(""));
}

TEST_CASE("tag normalization") {
  std::vector<std::string> raw = {" Business Writing ", "translation", "TRANSLATION", "", "snake_case"};
  auto tags = normalize_tags(raw);
  CHECK(tags == std::vector<std::string>{"business-writing", "translation", "snake-case"});
  CHECK(is_valid_tag("a-1"));
  CHECK_FALSE(is_valid_tag(std::string(33, 'a')));
  CHECK_FALSE(is_valid_tag("A"));
}

TEST_CASE("visible glyphs") {
  CHECK(visible_glyph_count("") == 0);
  CHECK(visible_glyph_count("\xE2\x9C\x8F\xEF\xB8\x8F") == 1);      // pencil + VS16
  CHECK(visible_glyph_count("\xF0\x9F\x91\x8D\xF0\x9F\x8F\xBD") == 1);  // thumbs up + tone
  CHECK(visible_glyph_count("e\xCC\x81") == 1);
  CHECK(visible_glyph_count("abc") == 3);
}

TEST_CASE("RFC 3339 timestamps") {
  const Timestamp ts{std::chrono::milliseconds(1709294400250)};
  CHECK(format_rfc3339(ts) == "2024-03-01T12:00:00.250Z");
  CHECK(parse_rfc3339("2024-03-01T12:00:00.250Z") == ts);
  CHECK(parse_rfc3339("2024-03-01T13:00:00.250+01:00") == ts);
  CHECK(parse_rfc3339("2024-03-01T12:00:00.250999Z") == ts);
  CHECK(parse_rfc3339("2024-03-01T12:00:00Z") == ts - std::chrono::milliseconds(250));
  CHECK_THROWS_AS(parse_rfc3339("yesterday"), Error);
  const auto now = now_utc();
  CHECK(parse_rfc3339(format_rfc3339(now)) == now);
}

TEST_CASE("model config validation") {
  ModelConfig stub;
  stub.model_id = "stub";
  CHECK(validate_model_config(stub).ok());
  stub.stub = StubSettings{StubMode::map, "", {}};
  CHECK_FALSE(validate_model_config(stub).ok());

  ModelConfig remote;
  remote.model_id = "gpt";
  remote.endpoint_kind = EndpointKind::remote_chat_api;
  CHECK_FALSE(validate_model_config(remote).ok());
  remote.base_url = "https://api.example.com/v1";
  remote.api_key_ref = "OPENAI_API_KEY";
  CHECK(validate_model_config(remote).ok());
  remote.default_temperature = 3;
  CHECK_FALSE(validate_model_config(remote).ok());
}

TEST_CASE("enum round trips") {
  CHECK(parse_insertion_mode("append") == InsertionMode::append);
  CHECK(parse_insertion_mode(to_string(InsertionMode::replace)) == InsertionMode::replace);
  CHECK_FALSE(parse_insertion_mode("prepend"));
  CHECK(to_string(ErrorCode::validation) == "validation_error");
  CHECK(http_status(ErrorCode::not_found) == 404);
  CHECK(http_status(ErrorCode::duplicate) == 409);
  CHECK(http_status(ErrorCode::rate_limited) == 429);
}
