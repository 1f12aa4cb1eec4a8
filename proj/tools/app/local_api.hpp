#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <thread>

#include "app/context.hpp"
#include "proselab/hub_service.hpp"

namespace httplib {
class Server;
}

namespace proselab::app {

struct LocalApiOptions {
  std::string host = "127.0.0.1";
  int port = kDefaultLocalApiPort;
  // Also serve the hub /v1 routes from this process.
  bool with_hub = false;
  std::string hub_db;
  int hub_rate_limit_per_minute = 60;
  // Directory holding the built editor assets, served at "/".
  std::optional<std::filesystem::path> ui_dir;
};

// HTTP host for the editor UI: /local/... routes over the library, the run
// pipeline and the hub client, plus optional embedded hub routes.
class LocalApiServer {
 public:
  LocalApiServer(AppContext& ctx, LocalApiOptions options);
  ~LocalApiServer();

  LocalApiServer(const LocalApiServer&) = delete;
  LocalApiServer& operator=(const LocalApiServer&) = delete;

  // Binds the listening socket; port 0 picks a free one. Throws
  // Error(port_in_use).
  int bind();
  // Serves until stop() is called.
  void serve();
  void start_background();
  void stop();

  int port() const noexcept { return port_; }
  std::string base_url() const;

 private:
  void mount_routes();

  AppContext& ctx_;
  LocalApiOptions options_;
  std::unique_ptr<httplib::Server> server_;
  std::shared_ptr<HubService> hub_;
  int port_ = 0;
  std::thread background_;
};

}  // namespace proselab::app
