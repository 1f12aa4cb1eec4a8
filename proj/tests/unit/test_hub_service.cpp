#include <doctest.h>

#include <set>
#include <thread>

#include "proselab/errors.hpp"
#include "proselab/hub_service.hpp"
#include "temp_dir.hpp"

using namespace proselab;

namespace {

PromptRecord shareable(const std::string& title, std::vector<std::string> tags = {"writing"}) {
  PromptRecord r;
  r.title = title;
  r.icon = "\xE2\x9C\x8F\xEF\xB8\x8F";
  r.template_text = title + ": {{text}}";
  r.description = "About " + title;
  r.tags = std::move(tags);
  r.recommended_models = {"gpt-4"};
  r.parsing_rule = ParsingRule{".*<output>(.*)</output>.*", "$1"};
  return r;
}

HubEntry shareable_part(HubEntry e) {
  e.run_count = 0;
  e.report_count = 0;
  e.shared_at = {};
  return e;
}

std::shared_ptr<HubStore> memory_store() { return open_sqlite_hub_store(":memory:"); }

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::storage;
}

}  // namespace

TEST_CASE("share then get returns the shareable fields") {
  HubService hub(memory_store());
  auto record = shareable("Polish");
  record.run_count = 12;  // local counters are not shared
  record.source_hub_id = "b131cdb7-558e-5845-9b83-f877f5718b66";
  const auto id = hub.share(record);
  CHECK(id == derive_prompt_id(record));
  auto got = hub.get(id);
  CHECK(shareable_part(got) == hub_entry_from_prompt(record));
  CHECK(got.run_count == 0);

  auto again = hub.share_entry(record);
  CHECK(again.first == id);
  CHECK_FALSE(again.second);
}

TEST_CASE("share validation") {
  HubService hub(memory_store());
  auto untagged = shareable("No tags", {});
  try {
    hub.share(untagged);
    FAIL("expected validation");
  } catch (const ValidationError& e) {
    CHECK(e.violations().front().find("tags") != std::string::npos);
  }
  auto r = shareable("No description");
  r.description = std::nullopt;
  CHECK_THROWS_AS(hub.share(r), ValidationError);
}

TEST_CASE("get errors") {
  HubService hub(memory_store());
  CHECK(code_of([&] { hub.get("not-an-id"); }) == ErrorCode::invalid_argument);
  CHECK(code_of([&] { hub.get("b131cdb7-558e-5845-9b83-f877f5718b66"); }) == ErrorCode::not_found);
  CHECK(code_of([&] { hub.record_hub_run("b131cdb7-558e-5845-9b83-f877f5718b66"); }) ==
        ErrorCode::not_found);
}

TEST_CASE("newest and popular ordering with tag filter") {
  std::int64_t tick = 1'700'000'000'000;
  HubOptions opts;
  opts.clock = [&] { return Timestamp{std::chrono::milliseconds(tick += 1000)}; };
  HubService hub(memory_store(), opts);
  const auto a = hub.share(shareable("A", {"translation"}));
  const auto b = hub.share(shareable("B", {"writing"}));
  const auto c = hub.share(shareable("C", {"translation", "japanese"}));
  hub.record_hub_run(a);
  hub.record_hub_run(a);
  hub.record_hub_run(c);

  auto newest = hub.list({});
  REQUIRE(newest.entries.size() == 3);
  CHECK(newest.entries[0].id == c);
  CHECK(newest.entries[2].id == a);

  ListQuery popular;
  popular.sort = HubSort::popular;
  auto pop = hub.list(popular);
  CHECK(pop.entries[0].id == a);
  CHECK(pop.entries[1].id == c);
  CHECK(pop.entries[2].id == b);

  ListQuery tagged;
  tagged.tag = "translation";
  tagged.sort = HubSort::popular;
  auto t = hub.list(tagged);
  REQUIRE(t.entries.size() == 2);
  CHECK(t.entries[0].id == a);

  auto tags = hub.top_tags(10);
  REQUIRE_FALSE(tags.empty());
  CHECK(tags[0] == TagCount{"translation", 2});
}

TEST_CASE("pagination visits every entry once") {
  HubService hub(memory_store());
  std::set<std::string> ids;
  for (int i = 0; i < 23; ++i) ids.insert(hub.share(shareable("P" + std::to_string(i))));
  for (auto sort : {HubSort::newest, HubSort::popular}) {
    std::multiset<std::string> seen;
    ListQuery q;
    q.sort = sort;
    q.limit = 5;
    int pages = 0;
    while (true) {
      auto page = hub.list(q);
      ++pages;
      for (const auto& e : page.entries) seen.insert(e.id);
      if (!page.next_cursor) break;
      q.cursor = page.next_cursor;
    }
    CHECK(pages == 5);
    CHECK(std::set<std::string>(seen.begin(), seen.end()) == ids);
    CHECK(seen.size() == ids.size());
  }
}

TEST_CASE("list argument errors") {
  HubService hub(memory_store());
  ListQuery q;
  q.limit = 0;
  CHECK(code_of([&] { hub.list(q); }) == ErrorCode::invalid_argument);
  q.limit = 101;
  CHECK(code_of([&] { hub.list(q); }) == ErrorCode::invalid_argument);
  q.limit = 10;
  q.cursor = "garbage";
  CHECK(code_of([&] { hub.list(q); }) == ErrorCode::invalid_cursor);
}

TEST_CASE("reports hide from list and tags but not from get") {
  HubService hub(memory_store());
  const auto id = hub.share(shareable("Spam", {"spam"}));
  for (int i = 1; i < 10; ++i) CHECK(hub.report(id, "bad") == i);
  CHECK(hub.list({}).entries.size() == 1);
  CHECK(hub.report(id, "bad") == 10);
  CHECK(hub.list({}).entries.empty());
  CHECK(hub.top_tags(10).empty());
  CHECK(hub.get(id).report_count == 10);
  CHECK(code_of([&] { hub.report(id, std::string(2001, 'x')); }) == ErrorCode::invalid_argument);
}

TEST_CASE("concurrent run increments are exact") {
  HubService hub(memory_store());
  const auto id = hub.share(shareable("Hot"));
  std::vector<std::thread> threads;
  for (int i = 0; i < 100; ++i) threads.emplace_back([&] { hub.record_hub_run(id); });
  for (auto& t : threads) t.join();
  CHECK(hub.get(id).run_count == 100);
}

TEST_CASE("file-backed store persists") {
  testsupport::TempDir dir;
  const auto db = (dir / "hub.sqlite3").string();
  std::string id;
  {
    HubService hub(open_sqlite_hub_store(db));
    id = hub.share(shareable("Keep"));
    hub.record_hub_run(id);
  }
  HubService hub(open_sqlite_hub_store(db));
  CHECK(hub.get(id).run_count == 1);
}
