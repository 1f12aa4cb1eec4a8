#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "proselab/core_model.hpp"

namespace httplib {
class Server;
}

namespace proselab {

// A community-shared prompt. `id` is always the content-derived prompt id.
struct HubEntry {
  std::string id;
  std::string title;
  std::string icon;
  std::string template_text;
  std::optional<double> temperature;
  std::optional<ParsingRule> parsing_rule;
  InsertionMode insertion_mode = InsertionMode::replace;
  std::string description;
  std::vector<std::string> tags;
  std::vector<std::string> recommended_models;
  std::int64_t run_count = 0;
  Timestamp shared_at{};
  std::int64_t report_count = 0;

  bool operator==(const HubEntry&) const = default;
};

// Shareable fields only; counters and timestamps are left at zero.
HubEntry hub_entry_from_prompt(const PromptRecord& record);
PromptRecord prompt_from_hub_entry(const HubEntry& entry);

enum class HubSort { newest, popular };

std::string_view to_string(HubSort sort) noexcept;  // "new" | "popular"
std::optional<HubSort> parse_hub_sort(std::string_view text);

inline constexpr std::size_t kMaxListLimit = 100;
inline constexpr std::size_t kMaxTagLimit = 50;
inline constexpr std::size_t kMaxReportReasonLength = 2000;
inline constexpr std::int64_t kDefaultHideThreshold = 10;

struct ListQuery {
  std::optional<std::string> tag;
  HubSort sort = HubSort::newest;
  std::size_t limit = 20;
  std::optional<std::string> cursor;
};

struct HubPage {
  std::vector<HubEntry> entries;
  std::optional<std::string> next_cursor;
};

struct TagCount {
  std::string tag;
  std::int64_t count = 0;

  bool operator==(const TagCount&) const = default;
};

// Keyset position: the sort key (run_count or shared_at millis) and id of
// the last entry on the previous page.
struct ListPosition {
  std::int64_t key = 0;
  std::string id;
};

// Storage behind the hub. Implementations must make counter updates atomic
// and give each list call a consistent snapshot.
class HubStore {
 public:
  virtual ~HubStore() = default;

  // Returns false (and changes nothing) if the id already exists.
  virtual bool insert_if_absent(const HubEntry& entry) = 0;
  virtual std::optional<HubEntry> get(const std::string& id) = 0;
  virtual std::optional<std::int64_t> increment_runs(const std::string& id) = 0;
  virtual std::optional<std::int64_t> add_report(const std::string& id,
                                                 const std::string& reason,
                                                 Timestamp at) = 0;
  // Up to `limit` visible entries (report_count < hide_threshold) after
  // `after`, ordered by the sort key descending then id ascending.
  virtual std::vector<HubEntry> list(const std::optional<std::string>& tag,
                                     HubSort sort,
                                     const std::optional<ListPosition>& after,
                                     std::size_t limit,
                                     std::int64_t hide_threshold) = 0;
  virtual std::vector<TagCount> top_tags(std::size_t limit,
                                         std::int64_t hide_threshold) = 0;
};

// SQLite in WAL mode; ":memory:" gives a throwaway store.
std::unique_ptr<HubStore> open_sqlite_hub_store(const std::string& path);

struct HubOptions {
  std::int64_t hide_threshold = kDefaultHideThreshold;
  std::function<Timestamp()> clock = now_utc;
};

class HubService {
 public:
  explicit HubService(std::shared_ptr<HubStore> store, HubOptions options = {});

  // Idempotent: identical content returns the existing id. Throws
  // ValidationError.
  std::string share(const PromptRecord& candidate);
  // Same, and reports whether a new entry was stored.
  std::pair<std::string, bool> share_entry(const PromptRecord& candidate);

  // Throws Error(invalid_argument) for a bad limit, Error(invalid_cursor).
  HubPage list(const ListQuery& query);
  // Throws Error(invalid_argument) for a malformed id, Error(not_found).
  HubEntry get(const std::string& id);
  std::int64_t record_hub_run(const std::string& id);
  // Returns the new report count.
  std::int64_t report(const std::string& id, const std::string& reason);
  std::vector<TagCount> top_tags(std::size_t limit);

 private:
  std::shared_ptr<HubStore> store_;
  HubOptions options_;
};

struct HubHttpOptions {
  // Requests per client address per minute; 0 disables limiting.
  int rate_limit_per_minute = 60;
};

// Registers the /v1 routes on an existing server. `service` must outlive it.
void mount_hub_routes(httplib::Server& server, HubService& service,
                      const HubHttpOptions& options = {});

// Standalone HTTP host for the hub API, served from a background thread.
class HubHttpServer {
 public:
  HubHttpServer(std::shared_ptr<HubService> service, HubHttpOptions options = {});
  ~HubHttpServer();

  HubHttpServer(const HubHttpServer&) = delete;
  HubHttpServer& operator=(const HubHttpServer&) = delete;

  // Port 0 picks a free port. Returns the bound port. Throws
  // Error(port_in_use).
  int start(const std::string& host, int port);
  void stop();
  std::string base_url() const;

 private:
  std::shared_ptr<HubService> service_;
  std::unique_ptr<httplib::Server> server_;
  std::string host_;
  int port_ = 0;
  struct Worker;
  std::unique_ptr<Worker> worker_;
};

}  // namespace proselab
