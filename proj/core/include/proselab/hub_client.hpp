#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "proselab/hub_service.hpp"
#include "proselab/prompt_library.hpp"

namespace proselab {

struct HubSession {
  std::string base_url;
  std::chrono::milliseconds timeout{10'000};
  // Extra attempts for idempotent reads that fail at the network level.
  int retry_budget = 2;
};

// Accepts `http(s)://host[:port][/path]`.
bool is_valid_base_url(std::string_view url);

// Pulls the id out of a bare id or a deep link carrying `?prompt=<id>`.
std::optional<std::string> extract_prompt_id(std::string_view id_or_url);

// Thin client for the hub HTTP API. Errors map back to Error codes:
// not_found, validation, invalid_argument, invalid_cursor, rate_limited,
// network, protocol.
class HubClient {
 public:
  explicit HubClient(HubSession session);

  std::string share(const PromptRecord& candidate);
  HubPage list(const ListQuery& query);
  HubEntry get(const std::string& id);
  std::int64_t record_run(const std::string& id);
  std::int64_t report(const std::string& id, const std::string& reason);
  std::vector<TagCount> top_tags(std::size_t limit);

  const HubSession& session() const noexcept { return session_; }

 private:
  HubSession session_;
};

// Copies a hub prompt into the library with source_hub_id set and a fresh
// run count. Read-only on the hub. Throws Error(duplicate) when identical
// content is already in the library.
PromptRecord pull_to_library(const HubSession& session, const std::string& id,
                             PromptLibrary& library);

// Best-effort, at-most-once run reporting on a background thread. The queue
// is bounded and drops the oldest report on overflow; failures are logged.
class RunReporter {
 public:
  explicit RunReporter(HubSession session, std::size_t capacity = 1024);
  ~RunReporter();

  RunReporter(const RunReporter&) = delete;
  RunReporter& operator=(const RunReporter&) = delete;

  void report_run_async(const std::string& hub_id);

  // Waits until the queue is drained or the timeout expires.
  bool flush(std::chrono::milliseconds timeout);

  std::size_t delivered() const noexcept { return delivered_; }
  std::size_t failed() const noexcept { return failed_; }
  std::size_t dropped() const noexcept { return dropped_; }

 private:
  void worker_loop();

  HubClient client_;
  std::size_t capacity_;
  std::mutex mutex_;
  std::condition_variable wake_;
  std::condition_variable idle_;
  std::deque<std::string> queue_;
  bool in_flight_ = false;
  bool stopping_ = false;
  std::atomic<std::size_t> delivered_{0};
  std::atomic<std::size_t> failed_{0};
  std::atomic<std::size_t> dropped_{0};
  std::thread worker_;
};

}  // namespace proselab
