#include "app/local_api.hpp"

#include <httplib.h>
#include <spdlog/spdlog.h>

#include <charconv>

#include "proselab/errors.hpp"
#include "proselab/json_io.hpp"
#include "proselab/run_pipeline.hpp"

namespace proselab::app {
namespace {

constexpr const char* kPlaceholderPage = R"html(<!doctype html>
<html><head><meta charset="utf-8"><title>proselab</title></head>
<body><h1>proselab local API</h1>
<p>The editor UI is not installed. Start the server with <code>--ui-dir</code>
pointing at the built editor assets, or use the JSON API under <code>/local/</code>.</p>
</body></html>
)html";

void send_json(httplib::Response& res, int status, const Json& body) {
  res.status = status;
  res.set_content(dump_json(body), "application/json");
}

template <typename Fn>
httplib::Server::Handler guarded(Fn fn) {
  return [fn = std::move(fn)](const httplib::Request& req, httplib::Response& res) {
    try {
      fn(req, res);
    } catch (const Error& e) {
      Json body = error_json(e.code(), e.what());
      if (const auto* v = dynamic_cast<const ValidationError*>(&e)) {
        body["violations"] = v->violations();
      }
      send_json(res, http_status(e.code()), body);
    } catch (const Json::exception& e) {
      send_json(res, 400, error_json(ErrorCode::invalid_argument, e.what()));
    } catch (const std::logic_error& e) {
      // std::stoul and friends on malformed parameters.
      send_json(res, 400, error_json(ErrorCode::invalid_argument, e.what()));
    } catch (const std::exception& e) {
      spdlog::error("local request {} {} failed: {}", req.method, req.path, e.what());
      send_json(res, 500, error_json(ErrorCode::storage, "internal error"));
    }
  };
}

Json body_of(const httplib::Request& req) {
  return parse_json_text(req.body.empty() ? "{}" : req.body, "request body");
}

std::string param(const httplib::Request& req, const char* key) {
  return req.has_param(key) ? req.get_param_value(key) : std::string();
}

Json slots_json(const FavoriteSlots& slots) {
  Json out = Json::array();
  for (const auto& s : slots) out.push_back(s ? Json(*s) : Json(nullptr));
  return out;
}

}  // namespace

LocalApiServer::LocalApiServer(AppContext& ctx, LocalApiOptions options)
    : ctx_(ctx), options_(std::move(options)), server_(std::make_unique<httplib::Server>()) {
  // httplib's default also sets SO_REUSEPORT, which lets a second process
  // share the port instead of failing.
  server_->set_socket_options([](socket_t sock) {
    int yes = 1;
    ::setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof(yes));
  });
  if (options_.with_hub) {
    const auto db = options_.hub_db.empty()
                        ? (ctx_.config.library_root / "hub.sqlite3").string()
                        : options_.hub_db;
    hub_ = std::make_shared<HubService>(std::shared_ptr<HubStore>(open_sqlite_hub_store(db)));
    HubHttpOptions hub_options;
    hub_options.rate_limit_per_minute = options_.hub_rate_limit_per_minute;
    mount_hub_routes(*server_, *hub_, hub_options);
  }
  mount_routes();
}

LocalApiServer::~LocalApiServer() { stop(); }

int LocalApiServer::bind() {
  if (options_.port == 0) {
    port_ = server_->bind_to_any_port(options_.host);
    if (port_ <= 0) throw Error(ErrorCode::port_in_use, "cannot bind " + options_.host);
  } else {
    if (!server_->bind_to_port(options_.host, options_.port)) {
      throw Error(ErrorCode::port_in_use,
                  "port " + std::to_string(options_.port) + " is already in use");
    }
    port_ = options_.port;
  }
  if (!ctx_.hub_url && hub_) ctx_.hub_url = base_url();
  return port_;
}

void LocalApiServer::serve() { server_->listen_after_bind(); }

void LocalApiServer::start_background() {
  background_ = std::thread([this] { serve(); });
  server_->wait_until_ready();
}

void LocalApiServer::stop() {
  server_->stop();
  if (background_.joinable()) background_.join();
}

std::string LocalApiServer::base_url() const {
  return "http://" + options_.host + ":" + std::to_string(port_);
}

void LocalApiServer::mount_routes() {
  auto& s = *server_;
  auto& ctx = ctx_;

  const auto hub_client = [&ctx]() {
    auto session = ctx.hub_session();
    if (!session) throw Error(ErrorCode::config, "no hub configured");
    return HubClient(*session);
  };

  s.Get("/local/library/prompts", guarded([&ctx](const auto& req, auto& res) {
    std::vector<PromptRecord> prompts;
    if (const auto q = param(req, "q"); !q.empty()) {
      prompts = ctx.library.search_prompts(q);
    } else {
      const auto sort = parse_sort_key(param(req, "sort").empty() ? "name" : param(req, "sort"));
      if (!sort) throw Error(ErrorCode::invalid_argument, "sort must be name, recency or run_count");
      prompts = ctx.library.sort_prompts(*sort);
    }
    send_json(res, 200, Json{{"prompts", prompts}});
  }));

  s.Post("/local/library/prompts", guarded([&ctx](const auto& req, auto& res) {
    auto record = json_as<PromptRecord>(body_of(req), "prompt");
    const auto id = ctx.library.add_prompt(std::move(record));
    send_json(res, 201, Json{{"id", id}, {"prompt", ctx.library.get(id)}});
  }));

  s.Get(R"(/local/library/prompts/([^/]+))", guarded([&ctx](const auto& req, auto& res) {
    send_json(res, 200, Json(ctx.library.get(req.matches[1].str())));
  }));

  s.Post(R"(/local/library/prompts/([^/]+))", guarded([&ctx](const auto& req, auto& res) {
    const auto patch = prompt_patch_from_json(body_of(req));
    send_json(res, 200, Json(ctx.library.update_prompt(req.matches[1].str(), patch)));
  }));

  s.Post(R"(/local/library/prompts/([^/]+)/delete)", guarded([&ctx](const auto& req, auto& res) {
    ctx.library.delete_prompt(req.matches[1].str());
    send_json(res, 200, Json{{"deleted", true}});
  }));

  s.Get("/local/library/slots", guarded([&ctx](const auto&, auto& res) {
    send_json(res, 200, Json{{"slots", slots_json(ctx.library.favorite_slots())}});
  }));

  s.Post(R"(/local/library/slots/(\d+))", guarded([&ctx](const auto& req, auto& res) {
    const auto slot = std::stoul(req.matches[1].str());
    const auto body = body_of(req);
    FavoriteSlots slots;
    if (!body.contains("id") || body["id"].is_null()) {
      slots = ctx.library.clear_favorite_slot(slot);
    } else {
      slots = ctx.library.set_favorite_slot(slot, body["id"].template get<std::string>());
    }
    send_json(res, 200, Json{{"slots", slots_json(slots)}});
  }));

  s.Get("/local/models", guarded([&ctx](const auto&, auto& res) {
    send_json(res, 200, Json{{"models", list_models(ctx.config.models)},
                             {"default_model", ctx.config.default_model}});
  }));

  s.Post("/local/run", guarded([&ctx](const auto& req, auto& res) {
    const auto body = body_of(req);
    const auto prompt_id = json_as<std::string>(body.value("prompt_id", Json()), "prompt_id");
    const auto input = json_as<std::string>(body.value("input", Json()), "input");
    const auto model_id = body.contains("model_id") && body["model_id"].is_string()
                              ? body["model_id"].template get<std::string>()
                              : std::string();
    const auto resolved = ctx.library.resolve_ref(prompt_id);
    if (!resolved) throw Error(ErrorCode::not_found, "prompt not found");
    RunPipeline pipeline(ctx.gateway, &ctx.library);
    const auto result =
        pipeline.run_prompt(ctx.library.get(*resolved), input, ctx.config.model(model_id));
    send_json(res, 200, Json(result));
  }));

  s.Post("/local/apply", guarded([](const auto& req, auto& res) {
    const auto body = body_of(req);
    const auto input = json_as<std::string>(body.value("input", Json()), "input");
    const auto spans = json_as<std::vector<ChangeSpan>>(body.value("spans", Json::array()), "spans");
    const auto decisions = decisions_from_json(body.value("decisions", Json::array()));
    send_json(res, 200, Json{{"text", apply_decisions(input, spans, decisions)}});
  }));

  s.Get("/local/hub/prompts", guarded([hub_client](const auto& req, auto& res) {
    ListQuery query;
    if (auto tag = param(req, "tag"); !tag.empty()) query.tag = tag;
    if (auto sort = param(req, "sort"); !sort.empty()) {
      auto parsed = parse_hub_sort(sort);
      if (!parsed) throw Error(ErrorCode::invalid_argument, "sort must be 'new' or 'popular'");
      query.sort = *parsed;
    }
    if (auto limit = param(req, "limit"); !limit.empty()) query.limit = std::stoul(limit);
    if (auto cursor = param(req, "cursor"); !cursor.empty()) query.cursor = cursor;
    const auto page = hub_client().list(query);
    send_json(res, 200,
              Json{{"entries", page.entries},
                   {"next_cursor", page.next_cursor ? Json(*page.next_cursor) : Json(nullptr)}});
  }));

  s.Get(R"(/local/hub/prompts/([^/]+))", guarded([hub_client](const auto& req, auto& res) {
    send_json(res, 200, Json(hub_client().get(req.matches[1].str())));
  }));

  s.Get("/local/hub/tags", guarded([hub_client](const auto& req, auto& res) {
    const auto limit = param(req, "limit").empty() ? 10 : std::stoul(param(req, "limit"));
    send_json(res, 200, Json{{"tags", hub_client().top_tags(limit)}});
  }));

  s.Post(R"(/local/hub/prompts/([^/]+)/pull)", guarded([&ctx, hub_client](const auto& req, auto& res) {
    const auto record = pull_to_library(hub_client().session(), req.matches[1].str(), ctx.library);
    send_json(res, 201, Json(record));
  }));

  s.Post(R"(/local/hub/share/([^/]+))", guarded([&ctx, hub_client](const auto& req, auto& res) {
    const auto resolved = ctx.library.resolve_ref(req.matches[1].str());
    if (!resolved) throw Error(ErrorCode::not_found, "prompt not found");
    const auto id = hub_client().share(ctx.library.get(*resolved));
    send_json(res, 200, Json{{"id", id}});
  }));

  if (options_.ui_dir) {
    if (!s.set_mount_point("/", options_.ui_dir->string())) {
      spdlog::warn("ui directory {} not found; serving placeholder", options_.ui_dir->string());
      s.Get("/", [](const auto&, auto& res) { res.set_content(kPlaceholderPage, "text/html"); });
    }
  } else {
    s.Get("/", [](const auto&, auto& res) { res.set_content(kPlaceholderPage, "text/html"); });
  }

  s.set_error_handler([](const httplib::Request&, httplib::Response& res) {
    if (!res.body.empty()) return httplib::Server::HandlerResponse::Unhandled;
    send_json(res, res.status,
              error_json(res.status == 404 ? ErrorCode::not_found : ErrorCode::invalid_argument,
                         "no such route"));
    return httplib::Server::HandlerResponse::Handled;
  });
}

}  // namespace proselab::app
