#include <httplib.h>
#include <spdlog/spdlog.h>

#include <charconv>
#include <deque>
#include <mutex>
#include <thread>
#include <unordered_map>

#include "proselab/errors.hpp"
#include "proselab/hub_service.hpp"
#include "proselab/json_io.hpp"

namespace proselab {
namespace {

void send_json(httplib::Response& res, int status, const Json& body) {
  res.status = status;
  res.set_content(dump_json(body), "application/json");
}

void send_error(httplib::Response& res, const Error& e) {
  Json body = error_json(e.code(), e.what());
  if (const auto* v = dynamic_cast<const ValidationError*>(&e)) {
    body["violations"] = v->violations();
  }
  send_json(res, http_status(e.code()), body);
}

template <typename Fn>
httplib::Server::Handler guarded(Fn fn) {
  return [fn = std::move(fn)](const httplib::Request& req, httplib::Response& res) {
    try {
      fn(req, res);
    } catch (const Error& e) {
      send_error(res, e);
    } catch (const std::exception& e) {
      spdlog::error("hub request {} {} failed: {}", req.method, req.path, e.what());
      send_json(res, 500, error_json(ErrorCode::storage, "internal error"));
    }
  };
}

std::size_t parse_limit(const httplib::Request& req, std::size_t fallback) {
  if (!req.has_param("limit")) return fallback;
  const auto text = req.get_param_value("limit");
  std::size_t value = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size()) {
    throw Error(ErrorCode::invalid_argument, "limit must be a positive integer");
  }
  return value;
}

Json parse_body(const httplib::Request& req) {
  return parse_json_text(req.body, "request body");
}

// Sliding one-minute window per client address.
class RateLimiter {
 public:
  explicit RateLimiter(int per_minute) : per_minute_(per_minute) {}

  // Returns seconds to wait, or 0 when the request may proceed.
  int admit(const std::string& address) {
    using clock = std::chrono::steady_clock;
    const auto now = clock::now();
    std::lock_guard lock(mutex_);
    auto& window = hits_[address];
    while (!window.empty() && now - window.front() >= std::chrono::minutes(1)) {
      window.pop_front();
    }
    if (static_cast<int>(window.size()) >= per_minute_) {
      const auto wait = std::chrono::minutes(1) - (now - window.front());
      return std::max(1, static_cast<int>(
                             std::chrono::ceil<std::chrono::seconds>(wait).count()));
    }
    window.push_back(now);
    return 0;
  }

 private:
  int per_minute_;
  std::mutex mutex_;
  std::unordered_map<std::string, std::deque<std::chrono::steady_clock::time_point>> hits_;
};

}  // namespace

void mount_hub_routes(httplib::Server& server, HubService& service,
                      const HubHttpOptions& options) {
  if (options.rate_limit_per_minute > 0) {
    auto limiter = std::make_shared<RateLimiter>(options.rate_limit_per_minute);
    server.set_pre_routing_handler(
        [limiter](const httplib::Request& req, httplib::Response& res) {
          if (!req.path.starts_with("/v1/")) return httplib::Server::HandlerResponse::Unhandled;
          if (const int wait = limiter->admit(req.remote_addr); wait > 0) {
            res.set_header("Retry-After", std::to_string(wait));
            send_json(res, 429, error_json(ErrorCode::rate_limited, "too many requests"));
            return httplib::Server::HandlerResponse::Handled;
          }
          return httplib::Server::HandlerResponse::Unhandled;
        });
  }

  server.Post("/v1/prompts", guarded([&service](const auto& req, auto& res) {
    const auto candidate = json_as<PromptRecord>(parse_body(req), "prompt");
    const auto [id, created] = service.share_entry(candidate);
    send_json(res, created ? 201 : 200, Json{{"id", id}, {"created", created}});
  }));

  server.Get("/v1/prompts", guarded([&service](const auto& req, auto& res) {
    ListQuery query;
    if (req.has_param("tag") && !req.get_param_value("tag").empty()) {
      query.tag = req.get_param_value("tag");
    }
    if (req.has_param("sort") && !req.get_param_value("sort").empty()) {
      const auto sort = parse_hub_sort(req.get_param_value("sort"));
      if (!sort) throw Error(ErrorCode::invalid_argument, "sort must be 'new' or 'popular'");
      query.sort = *sort;
    }
    query.limit = parse_limit(req, query.limit);
    if (req.has_param("cursor") && !req.get_param_value("cursor").empty()) {
      query.cursor = req.get_param_value("cursor");
    }
    const auto page = service.list(query);
    send_json(res, 200,
              Json{{"entries", page.entries},
                   {"next_cursor", page.next_cursor ? Json(*page.next_cursor) : Json(nullptr)}});
  }));

  server.Get(R"(/v1/prompts/([^/]+))", guarded([&service](const auto& req, auto& res) {
    send_json(res, 200, Json(service.get(req.matches[1].str())));
  }));

  server.Post(R"(/v1/prompts/([^/]+)/runs)", guarded([&service](const auto& req, auto& res) {
    const auto count = service.record_hub_run(req.matches[1].str());
    send_json(res, 200, Json{{"run_count", count}});
  }));

  server.Post(R"(/v1/prompts/([^/]+)/reports)", guarded([&service](const auto& req, auto& res) {
    std::string reason;
    if (!req.body.empty()) {
      const auto body = parse_body(req);
      if (body.contains("reason")) reason = json_as<std::string>(body["reason"], "reason");
    }
    const auto count = service.report(req.matches[1].str(), reason);
    send_json(res, 200, Json{{"acknowledged", true}, {"report_count", count}});
  }));

  server.Get("/v1/tags", guarded([&service](const auto& req, auto& res) {
    const auto tags = service.top_tags(parse_limit(req, 10));
    send_json(res, 200, Json{{"tags", tags}});
  }));
}

struct HubHttpServer::Worker {
  std::thread thread;
};

HubHttpServer::HubHttpServer(std::shared_ptr<HubService> service, HubHttpOptions options)
    : service_(std::move(service)), server_(std::make_unique<httplib::Server>()) {
  // httplib's default also sets SO_REUSEPORT, which lets a second process
  // share the port instead of failing.
  server_->set_socket_options([](socket_t sock) {
    int yes = 1;
    ::setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof(yes));
  });
  mount_hub_routes(*server_, *service_, options);
  server_->set_error_handler([](const httplib::Request&, httplib::Response& res) {
    if (!res.body.empty()) return httplib::Server::HandlerResponse::Unhandled;
    send_json(res, res.status,
              error_json(res.status == 404 ? ErrorCode::not_found : ErrorCode::invalid_argument,
                         "no such route"));
    return httplib::Server::HandlerResponse::Handled;
  });
}

HubHttpServer::~HubHttpServer() { stop(); }

int HubHttpServer::start(const std::string& host, int port) {
  host_ = host;
  if (port == 0) {
    port_ = server_->bind_to_any_port(host);
    if (port_ <= 0) throw Error(ErrorCode::port_in_use, "cannot bind " + host);
  } else {
    if (!server_->bind_to_port(host, port)) {
      throw Error(ErrorCode::port_in_use, "port " + std::to_string(port) + " is in use");
    }
    port_ = port;
  }
  worker_ = std::make_unique<Worker>();
  worker_->thread = std::thread([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
  return port_;
}

void HubHttpServer::stop() {
  if (!worker_) return;
  server_->stop();
  if (worker_->thread.joinable()) worker_->thread.join();
  worker_.reset();
}

std::string HubHttpServer::base_url() const {
  return "http://" + host_ + ":" + std::to_string(port_);
}

}  // namespace proselab
