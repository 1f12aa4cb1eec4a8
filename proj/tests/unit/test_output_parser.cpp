#include <doctest.h>

#include "generators.hpp"
#include "proselab/errors.hpp"
#include "proselab/output_parser.hpp"

using namespace proselab;

namespace {
const ParsingRule kOutputTag{".*<output>(.*)</output>.*", "$1"};
}

TEST_CASE("extracts the tagged block") {
  auto r = parse_output("Sure, I can help you! <output>Over recent years...</output>", kOutputTag);
  CHECK(r.text == "Over recent years...");
  CHECK(r.matched);
}

TEST_CASE("no rule or no match passes raw output through") {
  CHECK(parse_output("raw", std::nullopt) == ParseOutcome{"raw", false});
  CHECK(parse_output("no tags here", kOutputTag) == ParseOutcome{"no tags here", false});
}

TEST_CASE("greedy prefix means the last block wins") {
  auto r = parse_output("<output>first</output> and <output>second</output>", kOutputTag);
  CHECK(r.text == "second");
  auto lazy = parse_output("<output>first</output> and <output>second</output>",
                           ParsingRule{".*?<output>(.*?)</output>.*", "$1"});
  CHECK(lazy.text == "first");
}

TEST_CASE("dot matches newlines and anchors cover the whole text") {
  CHECK(parse_output("a\n<output>x\ny</output>\nb", kOutputTag).text == "x\ny");
  CHECK(parse_output("line1\nline2", ParsingRule{"^line1$", "ok"}).matched == false);
  CHECK(parse_output("abc", ParsingRule{"b", "x"}).matched == false);
  CHECK(parse_output("abc", ParsingRule{"a(b)c", "[$1]"}).text == "[b]");
}

TEST_CASE("replacement syntax") {
  CHECK(parse_output("ab", ParsingRule{"(a)(b)", "$2$1$$"}).text == "ba$");
  CHECK(parse_output("ab", ParsingRule{"(a)(b)?", "<$2>"}).text == "<b>");
  CHECK(parse_output("a", ParsingRule{"(a)(b)?", "<$2>"}).text == "<>");
  CHECK(parse_output("a", ParsingRule{"(a)", "cost $ 5"}).text == "cost $ 5");
  CHECK(expand_replacement("$1-$3", {std::string("x"), std::nullopt}) == "x-");
}

TEST_CASE("dialect validation reports positions") {
  auto v = validate_rule({"(abc", "$1"});
  REQUIRE_FALSE(v.ok());
  CHECK(v.violations.front().find("position") != std::string::npos);
  CHECK_FALSE(validate_rule({"abc)", ""}).ok());
  CHECK_FALSE(validate_rule({"*a", ""}).ok());
  CHECK_FALSE(validate_rule({"[a-", ""}).ok());
  CHECK_FALSE(validate_rule({"(a)\\1", ""}).ok());
  CHECK_FALSE(validate_rule({"(?=a)", ""}).ok());
  CHECK_FALSE(validate_rule({"(?<n>a)", ""}).ok());
  CHECK_FALSE(validate_rule({"a", "$1"}).ok());   // no such group
  CHECK_FALSE(validate_rule({"(a)", "$0"}).ok());
  CHECK(validate_rule({"(?:a|b)+?\\d{2,3}[^\\s]", ""}).ok());
  CHECK(capture_group_count("(a)(?:b)(c(d))") == 3);
  CHECK_THROWS_AS(parse_output("x", ParsingRule{"(", "$1"}), ValidationError);
}

TEST_CASE("regex works on UTF-8 text") {
  auto r = parse_output("\xE6\x97\xA5\xE6\x9C\xAC <output>\xF0\x9F\x91\x8D</output>", kOutputTag);
  CHECK(r.text == "\xF0\x9F\x91\x8D");
}

TEST_CASE("property: prefix + tagged block + suffix yields the block") {
  testsupport::Gen gen(1234);
  const std::string safe = "abc XYZ.,!?\n<>/";
  for (int i = 0; i < 1000; ++i) {
    const auto prefix = gen.string_over(safe, 40);
    auto body = gen.string_over(safe, 40);
    const auto suffix = gen.string_over(safe, 40);
    // The body may not itself close the tag, and the suffix may not reopen it.
    if (body.find("</output>") != std::string::npos || body.find("<output>") != std::string::npos ||
        suffix.find("<output>") != std::string::npos ||
        suffix.find("</output>") != std::string::npos) {
      continue;
    }
    const auto r = parse_output(prefix + "<output>" + body + "</output>" + suffix, kOutputTag);
    CHECK(r.matched);
    CHECK(r.text == body);
  }
}
