#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <thread>

#include "proselab/errors.hpp"
#include "proselab/prompt_library.hpp"
#include "temp_dir.hpp"

using namespace proselab;

namespace {

PromptRecord make(std::string title, std::string tmpl = "Do it: {{text}}") {
  PromptRecord r;
  r.title = std::move(title);
  r.template_text = std::move(tmpl);
  return r;
}

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

TEST_CASE("add, get and reject duplicates") {
  testsupport::TempDir dir;
  PromptLibrary lib(dir.path());
  const auto id = lib.add_prompt(make("Fix grammar"));
  CHECK(id == derive_prompt_id(make("Fix grammar")));
  auto r = lib.get(id);
  CHECK(r.run_count == 0);
  CHECK(r.created_at == r.updated_at);
  CHECK(r.created_at.time_since_epoch().count() > 0);
  CHECK(std::filesystem::exists(dir.path() / "prompts" / (id + ".json")));
  CHECK(code_of([&] { lib.add_prompt(make("Fix grammar")); }) == ErrorCode::duplicate);
  CHECK_THROWS_AS(lib.add_prompt(make("")), ValidationError);
  CHECK(code_of([&] { lib.get("00000000-0000-5000-8000-000000000000"); }) == ErrorCode::not_found);
}

TEST_CASE("update keeps id and bumps updated_at") {
  testsupport::TempDir dir;
  PromptLibrary lib(dir.path());
  const auto id = lib.add_prompt(make("Fix"));
  const auto before = lib.get(id);
  std::this_thread::sleep_for(std::chrono::milliseconds(5));
  PromptPatch patch;
  patch.template_text = "Fix carefully: {{text}}";
  patch.temperature = std::optional<double>{};
  auto after = lib.update_prompt(id, patch);
  CHECK(after.id == id);
  CHECK(after.template_text == "Fix carefully: {{text}}");
  CHECK_FALSE(after.temperature.has_value());
  CHECK(after.updated_at > before.updated_at);
  CHECK(after.created_at == before.created_at);

  PromptPatch bad;
  bad.temperature = 5.0;
  CHECK_THROWS_AS(lib.update_prompt(id, bad), ValidationError);
  CHECK(lib.get(id) == after);
}

TEST_CASE("search and sort") {
  testsupport::TempDir dir;
  PromptLibrary lib(dir.path());
  auto jp = make("Translate English to Japanese", "Translate into Japanese: {{text}}");
  jp.description = "Business tone";
  const auto a = lib.add_prompt(jp);
  const auto b = lib.add_prompt(make("Alpha"));
  const auto c = lib.add_prompt(make("beta"));
  lib.record_run(c);
  lib.record_run(c);
  lib.record_run(b);

  CHECK(lib.search_prompts("translate").size() == 1);
  CHECK(lib.search_prompts("BUSINESS").front().id == a);
  CHECK(lib.search_prompts("{{text}}").size() == 3);
  CHECK(lib.search_prompts("").size() == 3);

  auto by_name = lib.sort_prompts(SortKey::name);
  CHECK(by_name[0].id == b);
  CHECK(by_name[1].id == c);
  auto by_runs = lib.sort_prompts(SortKey::run_count);
  CHECK(by_runs[0].id == c);
  CHECK(by_runs[1].id == b);
  auto by_recency = lib.sort_prompts(SortKey::recency);
  CHECK(by_recency.size() == 3);
  CHECK(parse_sort_key("run_count") == SortKey::run_count);
  CHECK_FALSE(parse_sort_key("size"));
}

TEST_CASE("favorite slots") {
  testsupport::TempDir dir;
  PromptLibrary lib(dir.path());
  const auto a = lib.add_prompt(make("A"));
  const auto b = lib.add_prompt(make("B"));
  lib.set_favorite_slot(1, a);
  CHECK(lib.favorite_slots()[1] == a);
  lib.set_favorite_slot(2, a);  // moving clears slot 1
  CHECK_FALSE(lib.favorite_slots()[1]);
  CHECK(lib.favorite_slots()[2] == a);
  lib.set_favorite_slot(0, b);
  CHECK(code_of([&] { lib.set_favorite_slot(3, a); }) == ErrorCode::invalid_slot);
  CHECK(code_of([&] { lib.set_favorite_slot(0, "nope"); }) == ErrorCode::not_found);
  CHECK(lib.resolve_ref("slot:0") == b);
  CHECK_FALSE(lib.resolve_ref("slot:1"));
  lib.delete_prompt(b);
  CHECK_FALSE(lib.favorite_slots()[0]);
  lib.clear_favorite_slot(2);
  CHECK_FALSE(lib.favorite_slots()[2]);
}

TEST_CASE("references") {
  testsupport::TempDir dir;
  PromptLibrary lib(dir.path());
  const auto id = lib.add_prompt(make("A"));
  CHECK(lib.resolve_ref(id) == id);
  CHECK(lib.resolve_ref(id.substr(0, 8)) == id);
  CHECK_FALSE(lib.resolve_ref("zzzz"));
  CHECK_FALSE(lib.resolve_ref(""));
}

TEST_CASE("state survives a reopen") {
  testsupport::TempDir dir;
  LibraryState saved;
  {
    PromptLibrary lib(dir.path());
    const auto a = lib.add_prompt(make("A"));
    lib.add_prompt(make("B"));
    lib.record_run(a);
    lib.set_favorite_slot(0, a);
    saved = lib.state();
  }
  PromptLibrary reopened(dir.path());
  CHECK(reopened.state() == saved);
}

TEST_CASE("run counts are exact under concurrency") {
  testsupport::TempDir dir;
  PromptLibrary lib(dir.path());
  const auto id = lib.add_prompt(make("Hot"));
  std::vector<std::thread> threads;
  for (int i = 0; i < 100; ++i) threads.emplace_back([&] { lib.record_run(id); });
  for (auto& t : threads) t.join();
  CHECK(lib.get(id).run_count == 100);

  // Two handles on one directory serialize through the file lock.
  PromptLibrary other(dir.path());
  threads.clear();
  for (int i = 0; i < 50; ++i) {
    threads.emplace_back([&] { lib.record_run(id); });
    threads.emplace_back([&] { other.record_run(id); });
  }
  for (auto& t : threads) t.join();
  PromptLibrary fresh(dir.path());
  CHECK(fresh.get(id).run_count == 200);
}

TEST_CASE("run listener sees the updated record") {
  testsupport::TempDir dir;
  PromptLibrary lib(dir.path());
  const auto id = lib.add_prompt(make("A"));
  std::int64_t seen = 0;
  lib.set_run_listener([&](const PromptRecord& r) { seen = r.run_count; });
  lib.record_run(id);
  CHECK(seen == 1);
}

TEST_CASE("unreadable prompt files are reported") {
  testsupport::TempDir dir;
  {
    PromptLibrary lib(dir.path());
    lib.add_prompt(make("A"));
  }
  for (const auto& f : std::filesystem::directory_iterator(dir.path() / "prompts")) {
    std::ofstream(f.path()) << "{broken";
  }
  CHECK_THROWS_AS(PromptLibrary{dir.path()}, Error);
}
