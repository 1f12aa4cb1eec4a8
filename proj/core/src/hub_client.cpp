#include "proselab/hub_client.hpp"

#include <httplib.h>
#include <spdlog/spdlog.h>

#include "proselab/errors.hpp"
#include "proselab/json_io.hpp"

namespace proselab {
namespace {

ErrorCode code_from_wire(std::string_view code, int status) {
  static constexpr ErrorCode kKnown[] = {
      ErrorCode::invalid_argument, ErrorCode::validation,  ErrorCode::not_found,
      ErrorCode::duplicate,        ErrorCode::invalid_cursor, ErrorCode::rate_limited,
      ErrorCode::storage};
  for (auto known : kKnown) {
    if (to_string(known) == code) return known;
  }
  if (status == 404) return ErrorCode::not_found;
  if (status == 429) return ErrorCode::rate_limited;
  if (status == 400) return ErrorCode::invalid_argument;
  return ErrorCode::protocol;
}

[[noreturn]] void throw_for_response(const httplib::Response& res) {
  const auto body = Json::parse(res.body, nullptr, false);
  std::string message = "hub returned HTTP " + std::to_string(res.status);
  std::string code;
  if (body.is_object()) {
    if (body.contains("message") && body["message"].is_string()) {
      message = body["message"].get<std::string>();
    }
    if (body.contains("code") && body["code"].is_string()) code = body["code"].get<std::string>();
  }
  const auto error_code = code_from_wire(code, res.status);
  if (error_code == ErrorCode::validation && body.contains("violations") &&
      body["violations"].is_array()) {
    throw ValidationError(body["violations"].get<std::vector<std::string>>());
  }
  if (error_code == ErrorCode::rate_limited) {
    std::optional<std::chrono::seconds> after;
    if (res.has_header("Retry-After")) {
      try {
        after = std::chrono::seconds{std::stol(res.get_header_value("Retry-After"))};
      } catch (const std::exception&) {
      }
    }
    throw RateLimitedError(message, after);
  }
  throw Error(error_code, message);
}

Json parse_reply(const httplib::Response& res) {
  auto body = Json::parse(res.body, nullptr, false);
  if (body.is_discarded()) throw Error(ErrorCode::protocol, "hub reply is not JSON");
  return body;
}

class Connection {
 public:
  explicit Connection(const HubSession& session) : session_(session) {
    if (!is_valid_base_url(session.base_url)) {
      throw Error(ErrorCode::config, "invalid hub url '" + session.base_url + "'");
    }
    const auto scheme_end = session.base_url.find("://");
    const auto path_start = session.base_url.find('/', scheme_end + 3);
    origin_ = session.base_url.substr(0, path_start);
    if (path_start != std::string::npos) prefix_ = session.base_url.substr(path_start);
    while (!prefix_.empty() && prefix_.back() == '/') prefix_.pop_back();
  }

  Json get(const std::string& path, const httplib::Params& params = {}) {
    for (int attempt = 0;; ++attempt) {
      auto client = make_client();
      auto res = client.Get(prefix_ + path, params, httplib::Headers{});
      if (!res) {
        if (attempt < session_.retry_budget) continue;
        throw Error(ErrorCode::network,
                    "hub unreachable: " + httplib::to_string(res.error()));
      }
      return handle(*res);
    }
  }

  Json post(const std::string& path, const Json& body) {
    auto client = make_client();
    auto res = client.Post(prefix_ + path, dump_json(body), "application/json");
    if (!res) {
      throw Error(ErrorCode::network, "hub unreachable: " + httplib::to_string(res.error()));
    }
    return handle(*res);
  }

 private:
  httplib::Client make_client() const {
    httplib::Client client(origin_);
    const auto secs = std::chrono::duration_cast<std::chrono::seconds>(session_.timeout);
    const auto usecs =
        std::chrono::duration_cast<std::chrono::microseconds>(session_.timeout - secs);
    client.set_connection_timeout(secs.count(), usecs.count());
    client.set_read_timeout(secs.count(), usecs.count());
    client.set_write_timeout(secs.count(), usecs.count());
    return client;
  }

  static Json handle(const httplib::Response& res) {
    if (res.status < 200 || res.status >= 300) throw_for_response(res);
    return parse_reply(res);
  }

  const HubSession& session_;
  std::string origin_;
  std::string prefix_;
};

template <typename T>
T field(const Json& body, const char* key) {
  if (!body.is_object() || !body.contains(key)) {
    throw Error(ErrorCode::protocol, std::string("hub reply lacks '") + key + "'");
  }
  try {
    return body[key].get<T>();
  } catch (const std::exception& e) {
    throw Error(ErrorCode::protocol, std::string("hub reply field '") + key + "': " + e.what());
  }
}

}  // namespace

bool is_valid_base_url(std::string_view url) {
  std::string_view rest;
  if (url.starts_with("http://")) {
    rest = url.substr(7);
  } else if (url.starts_with("https://")) {
    rest = url.substr(8);
  } else {
    return false;
  }
  const auto host_end = rest.find_first_of("/?#");
  const auto host = rest.substr(0, host_end);
  if (host.empty() || host.front() == ':') return false;
  return rest.find_first_of("?# ") == std::string_view::npos;
}

std::optional<std::string> extract_prompt_id(std::string_view input) {
  while (!input.empty() && std::isspace(static_cast<unsigned char>(input.front()))) {
    input.remove_prefix(1);
  }
  while (!input.empty() && std::isspace(static_cast<unsigned char>(input.back()))) {
    input.remove_suffix(1);
  }
  const auto normalize = [](std::string_view text) -> std::optional<std::string> {
    std::string id(text);
    for (char& c : id) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    if (is_prompt_id(id)) return id;
    return std::nullopt;
  };
  if (auto id = normalize(input)) return id;

  const auto query = input.find('?');
  if (query == std::string_view::npos) return std::nullopt;
  auto params = input.substr(query + 1);
  if (const auto hash = params.find('#'); hash != std::string_view::npos) {
    params = params.substr(0, hash);
  }
  while (!params.empty()) {
    const auto amp = params.find('&');
    const auto pair = params.substr(0, amp);
    if (pair.starts_with("prompt=")) return normalize(pair.substr(7));
    if (amp == std::string_view::npos) break;
    params.remove_prefix(amp + 1);
  }
  return std::nullopt;
}

HubClient::HubClient(HubSession session) : session_(std::move(session)) {}

std::string HubClient::share(const PromptRecord& candidate) {
  if (auto v = validate_prompt(candidate, /*for_sharing=*/true); !v.ok()) {
    throw ValidationError(std::move(v.violations));
  }
  Connection conn(session_);
  return field<std::string>(conn.post("/v1/prompts", Json(candidate)), "id");
}

HubPage HubClient::list(const ListQuery& query) {
  httplib::Params params{{"sort", std::string(to_string(query.sort))},
                         {"limit", std::to_string(query.limit)}};
  if (query.tag) params.emplace("tag", *query.tag);
  if (query.cursor) params.emplace("cursor", *query.cursor);
  Connection conn(session_);
  const auto body = conn.get("/v1/prompts", params);
  HubPage page;
  page.entries = field<std::vector<HubEntry>>(body, "entries");
  if (body.contains("next_cursor") && body["next_cursor"].is_string()) {
    page.next_cursor = body["next_cursor"].get<std::string>();
  }
  return page;
}

HubEntry HubClient::get(const std::string& id) {
  if (!is_prompt_id(id)) {
    throw Error(ErrorCode::invalid_argument, "malformed prompt id '" + id + "'");
  }
  Connection conn(session_);
  const auto body = conn.get("/v1/prompts/" + id);
  try {
    return body.get<HubEntry>();
  } catch (const std::exception& e) {
    throw Error(ErrorCode::protocol, std::string("malformed hub entry: ") + e.what());
  }
}

std::int64_t HubClient::record_run(const std::string& id) {
  Connection conn(session_);
  return field<std::int64_t>(conn.post("/v1/prompts/" + id + "/runs", Json::object()),
                             "run_count");
}

std::int64_t HubClient::report(const std::string& id, const std::string& reason) {
  Connection conn(session_);
  return field<std::int64_t>(
      conn.post("/v1/prompts/" + id + "/reports", Json{{"reason", reason}}), "report_count");
}

std::vector<TagCount> HubClient::top_tags(std::size_t limit) {
  Connection conn(session_);
  return field<std::vector<TagCount>>(
      conn.get("/v1/tags", {{"limit", std::to_string(limit)}}), "tags");
}

PromptRecord pull_to_library(const HubSession& session, const std::string& id,
                             PromptLibrary& library) {
  const auto entry = HubClient(session).get(id);
  PromptRecord record = prompt_from_hub_entry(entry);
  record.id.clear();
  record.run_count = 0;
  record.source_hub_id = entry.id;
  const auto local_id = library.add_prompt(std::move(record));
  return library.get(local_id);
}

RunReporter::RunReporter(HubSession session, std::size_t capacity)
    : client_(std::move(session)), capacity_(capacity == 0 ? 1 : capacity) {
  worker_ = std::thread([this] { worker_loop(); });
}

RunReporter::~RunReporter() {
  {
    std::lock_guard lock(mutex_);
    stopping_ = true;
  }
  wake_.notify_all();
  if (worker_.joinable()) worker_.join();
}

void RunReporter::report_run_async(const std::string& hub_id) {
  {
    std::lock_guard lock(mutex_);
    if (stopping_) return;
    if (queue_.size() >= capacity_) {
      queue_.pop_front();
      ++dropped_;
    }
    queue_.push_back(hub_id);
  }
  wake_.notify_one();
}

bool RunReporter::flush(std::chrono::milliseconds timeout) {
  std::unique_lock lock(mutex_);
  return idle_.wait_for(lock, timeout, [this] { return queue_.empty() && !in_flight_; });
}

void RunReporter::worker_loop() {
  std::unique_lock lock(mutex_);
  while (true) {
    wake_.wait(lock, [this] { return stopping_ || !queue_.empty(); });
    if (stopping_) {
      queue_.clear();
      idle_.notify_all();
      return;
    }
    const std::string id = std::move(queue_.front());
    queue_.pop_front();
    in_flight_ = true;
    lock.unlock();
    try {
      client_.record_run(id);
      ++delivered_;
    } catch (const std::exception& e) {
      ++failed_;
      spdlog::warn("run report for {} not delivered: {}", id, e.what());
    }
    lock.lock();
    in_flight_ = false;
    if (queue_.empty()) idle_.notify_all();
  }
}

}  // namespace proselab
