#include <doctest.h>

#include "generators.hpp"
#include "lcs_oracle.hpp"
#include "proselab/diff_engine.hpp"
#include "proselab/errors.hpp"
#include "proselab/utf8.hpp"

using namespace proselab;

namespace {

std::string side(const std::vector<DiffSegment>& segs, SegmentKind skip) {
  std::string s;
  for (const auto& seg : segs) {
    if (seg.kind != skip) s += seg.text;
  }
  return s;
}

void check_canonical(const std::vector<DiffSegment>& segs) {
  for (std::size_t i = 0; i < segs.size(); ++i) {
    CHECK_FALSE(segs[i].text.empty());
    if (i > 0) {
      CHECK(segs[i].kind != segs[i - 1].kind);
      CHECK_FALSE((segs[i - 1].kind == SegmentKind::insert && segs[i].kind == SegmentKind::remove));
    }
  }
}

}  // namespace

TEST_CASE("kitten to sitting") {
  auto segs = compute_diff("kitten", "sitting");
  // 6 + 7 - 2 * |LCS("ittn")|
  CHECK(edit_cost(segs) == 5);
  CHECK(edit_cost(segs) == testsupport::indel_distance(std::string("kitten"), std::string("sitting")));
  check_canonical(segs);
  auto spans = coalesce_spans(segs);
  CHECK(spans.size() == 3);
  CHECK(apply_decisions("kitten", spans, uniform_decisions(spans, Decision::accept)) == "sitting");
}

TEST_CASE("edge cases") {
  CHECK(compute_diff("", "").empty());
  CHECK(compute_diff("same", "same") == std::vector<DiffSegment>{{SegmentKind::equal, "same"}});
  CHECK(compute_diff("", "new") == std::vector<DiffSegment>{{SegmentKind::insert, "new"}});
  CHECK(compute_diff("old", "") == std::vector<DiffSegment>{{SegmentKind::remove, "old"}});
  CHECK(compute_diff("abc", "aXc") ==
        std::vector<DiffSegment>{{SegmentKind::equal, "a"},
                                 {SegmentKind::remove, "b"},
                                 {SegmentKind::insert, "X"},
                                 {SegmentKind::equal, "c"}});
}

TEST_CASE("span kinds and offsets") {
  auto spans = coalesce_spans(compute_diff("hello wrld", "hello world!"));
  REQUIRE(spans.size() == 2);
  CHECK(spans[0].kind == ChangeKind::insertion);
  CHECK(spans[0].revised_text == "o");
  CHECK(spans[0].original_offset == 7);
  CHECK(spans[1].original_offset == 10);
  CHECK(spans[1].revised_offset == 11);

  auto rep = coalesce_spans(compute_diff("a cat", "a dog"));
  REQUIRE(rep.size() == 1);
  CHECK(rep[0].kind == ChangeKind::replacement);
  CHECK(rep[0].original_text == "cat");
  CHECK(rep[0].revised_text == "dog");
  CHECK(rep[0].index == 0);

  // Offsets are in code points, not bytes.
  auto uni = coalesce_spans(compute_diff("\xE6\x97\xA5 a", "\xE6\x97\xA5 b"));
  REQUIRE(uni.size() == 1);
  CHECK(uni[0].original_offset == 2);
}

TEST_CASE("partial decisions") {
  auto spans = coalesce_spans(compute_diff("the cat sat", "a cat sat down"));
  REQUIRE(spans.size() == 2);
  DecisionSet d{{0, Decision::reject}, {1, Decision::accept}};
  CHECK(apply_decisions("the cat sat", spans, d) == "the cat sat down");
  d = {{0, Decision::accept}, {1, Decision::reject}};
  CHECK(apply_decisions("the cat sat", spans, d) == "a cat sat");
}

TEST_CASE("decision errors") {
  auto spans = coalesce_spans(compute_diff("abc", "abd"));
  CHECK_THROWS_WITH_AS(apply_decisions("abc", spans, {}), doctest::Contains("span"), Error);
  try {
    apply_decisions("abc", spans, {});
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::missing_decision);
  }
  try {
    apply_decisions("zzz", spans, uniform_decisions(spans, Decision::accept));
    FAIL("expected invalid_span");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::invalid_span);
  }
}

TEST_CASE("insertion modes") {
  auto append = diff_for_insertion_mode("Hello", "Bonjour", InsertionMode::append);
  REQUIRE(append.size() == 1);
  CHECK(append[0].kind == ChangeKind::insertion);
  CHECK(append[0].revised_text == "\nBonjour");
  CHECK(append[0].original_offset == 5);
  CHECK(apply_decisions("Hello", append, uniform_decisions(append, Decision::accept)) ==
        "Hello\nBonjour");
  CHECK(diff_for_insertion_mode("same", "same", InsertionMode::replace).empty());
}

TEST_CASE("invalid UTF-8 survives the round trip") {
  const std::string a = "ok\xFF\xFE tail";
  const std::string b = "ok\xFF new tail\xC0";
  auto spans = coalesce_spans(compute_diff(a, b));
  CHECK(apply_decisions(a, spans, uniform_decisions(spans, Decision::accept)) == b);
  CHECK(apply_decisions(a, spans, uniform_decisions(spans, Decision::reject)) == a);
}

TEST_CASE("exhaustive minimality over short strings") {
  // Every pair of strings over {a,b} up to length 6.
  std::vector<std::string> all = {""};
  for (std::size_t len = 1; len <= 6; ++len) {
    const std::size_t n = all.size();
    for (std::size_t i = 0; i < n; ++i) {
      if (all[i].size() == len - 1) {
        all.push_back(all[i] + "a");
        all.push_back(all[i] + "b");
      }
    }
  }
  std::size_t mismatches = 0;
  for (const auto& a : all) {
    for (const auto& b : all) {
      const auto segs = compute_diff(a, b);
      if (edit_cost(segs) != testsupport::indel_distance(a, b) ||
          side(segs, SegmentKind::insert) != a || side(segs, SegmentKind::remove) != b) {
        ++mismatches;
      }
    }
  }
  CHECK(mismatches == 0);
}

TEST_CASE("property: random pairs match the oracle and stay canonical") {
  testsupport::Gen gen(42);
  for (int i = 0; i < 3000; ++i) {
    const auto a = gen.string_over("abc", 12);
    const auto b = gen.string_over("abc", 12);
    const auto segs = compute_diff(a, b);
    CHECK(edit_cost(segs) == testsupport::indel_distance(a, b));
    check_canonical(segs);
  }
}

TEST_CASE("property: unicode round trips") {
  testsupport::Gen gen(7);
  const auto& pool = testsupport::unicode_pool();
  for (int i = 0; i < 1000; ++i) {
    const auto base = gen.pieces(pool, 60);
    const auto a = testsupport::join(base);
    const auto b = testsupport::join(gen.mutate(base, pool, 10));
    const auto segs = compute_diff(a, b);
    CHECK(edit_cost(segs) ==
          testsupport::indel_distance(utf8::decode(a), utf8::decode(b)));
    const auto spans = coalesce_spans(segs);
    CHECK(apply_decisions(a, spans, uniform_decisions(spans, Decision::accept)) == b);
    CHECK(apply_decisions(a, spans, uniform_decisions(spans, Decision::reject)) == a);
  }
}

TEST_CASE("long inputs stay fast and correct") {
  testsupport::Gen gen(3);
  const auto a = gen.string_over("abcdefgh ", 4000);
  auto b = a;
  for (int k = 0; k < 50 && !b.empty(); ++k) b[gen.below(b.size())] = 'z';
  const auto segs = compute_diff(a, b);
  CHECK(edit_cost(segs) == testsupport::indel_distance(a, b));
}
