#include <doctest.h>

#include "proselab/errors.hpp"
#include "proselab/json_io.hpp"

using namespace proselab;

TEST_CASE("prompt record round trip") {
  PromptRecord r;
  r.title = "Translate";
  r.icon = "\xF0\x9F\x87\xAF\xF0\x9F\x87\xB5";
  r.template_text = "Translate: {{text}}";
  r.parsing_rule = ParsingRule{"(.*)", "$1"};
  r.insertion_mode = InsertionMode::append;
  r.description = "jp";
  r.tags = {"translation"};
  r.recommended_models = {"gpt-4"};
  r.run_count = 3;
  r.created_at = parse_rfc3339("2024-01-02T03:04:05.006Z");
  r.updated_at = r.created_at;
  r.source_hub_id = "b131cdb7-558e-5845-9b83-f877f5718b66";
  r.id = derive_prompt_id(r);

  const Json j = r;
  CHECK(j["template"] == "Translate: {{text}}");
  CHECK(j["insertion_mode"] == "append");
  CHECK(j["created_at"] == "2024-01-02T03:04:05.006Z");
  CHECK(j.get<PromptRecord>() == r);

  r.temperature = std::nullopt;
  r.description = std::nullopt;
  r.parsing_rule = std::nullopt;
  CHECK(Json(r).get<PromptRecord>() == r);
}

TEST_CASE("strict about types, lenient about absent fields") {
  auto minimal = parse_json_text(R"({"title":"t","template":"x"})", "prompt");
  auto r = json_as<PromptRecord>(minimal, "prompt");
  CHECK(r.temperature == kDefaultTemperature);
  CHECK(r.insertion_mode == InsertionMode::replace);
  CHECK_THROWS_AS(json_as<PromptRecord>(parse_json_text(R"({"title":1,"template":"x"})", "p"), "p"),
                  Error);
  CHECK_THROWS_AS(parse_json_text("{", "p"), Error);
  CHECK_THROWS_AS(json_as<PromptRecord>(parse_json_text(R"({"title":"t","template":"x","insertion_mode":"up"})", "p"), "p"),
                  Error);
}

TEST_CASE("patches distinguish absent from null") {
  auto p = prompt_patch_from_json(parse_json_text(R"({"title":"n","temperature":null})", "patch"));
  CHECK(p.title == "n");
  REQUIRE(p.temperature.has_value());
  CHECK_FALSE(p.temperature->has_value());
  CHECK_FALSE(p.parsing_rule.has_value());
}

TEST_CASE("decisions accept arrays and objects") {
  auto a = decisions_from_json(Json::parse(R"(["accept","reject"])"));
  CHECK(a.at(0) == Decision::accept);
  CHECK(a.at(1) == Decision::reject);
  auto o = decisions_from_json(Json::parse(R"({"2":"reject"})"));
  CHECK(o.at(2) == Decision::reject);
  CHECK_THROWS_AS(decisions_from_json(Json::parse(R"(["maybe"])")), Error);
}

TEST_CASE("segments and spans") {
  DiffSegment d{SegmentKind::remove, "x"};
  CHECK(Json(d)["kind"] == "delete");
  CHECK(Json(d).get<DiffSegment>() == d);
  ChangeSpan s{1, ChangeKind::replacement, "a", "b", 4, 5};
  CHECK(Json(s).get<ChangeSpan>() == s);
}

TEST_CASE("dump survives invalid UTF-8") {
  Json j = std::string("ok\xFF");
  CHECK_NOTHROW(dump_json(j));
}

TEST_CASE("error bodies") {
  auto e = error_json(ErrorCode::not_found, "prompt not found");
  CHECK(e["code"] == "not_found");
  CHECK(e["message"] == "prompt not found");
}
