#include "app/config.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "proselab/errors.hpp"
#include "proselab/json_io.hpp"
#include "proselab/llm_gateway.hpp"

namespace proselab::app {
namespace {

std::optional<std::string> env(const char* name) {
  const char* value = std::getenv(name);
  if (value == nullptr || *value == '\0') return std::nullopt;
  return std::string(value);
}

}  // namespace

const ModelConfig& CliConfig::model(std::string_view id) const {
  const std::string_view wanted = id.empty() ? std::string_view(default_model) : id;
  for (const auto& m : models) {
    if (m.model_id == wanted) return m;
  }
  throw Error(ErrorCode::config, "unknown model '" + std::string(wanted) + "'");
}

std::filesystem::path resolve_library_root(const std::optional<std::string>& explicit_root) {
  if (explicit_root && !explicit_root->empty()) return *explicit_root;
  if (auto home = env("PROSELAB_HOME")) return *home;
  if (auto user_home = env("HOME")) return std::filesystem::path(*user_home) / ".proselab";
  return ".proselab";
}

CliConfig load_config(const std::filesystem::path& library_root) {
  CliConfig config;
  config.library_root = library_root;

  const auto path = library_root / "config.json";
  if (std::filesystem::exists(path)) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    const auto j = parse_json_text(buf.str(), "config.json");
    try {
      if (j.contains("hub_url") && j["hub_url"].is_string()) {
        config.hub_url = j["hub_url"].get<std::string>();
      }
      if (j.contains("models")) config.models = j["models"].get<std::vector<ModelConfig>>();
      if (j.contains("default_model")) {
        config.default_model = j["default_model"].get<std::string>();
      }
      if (j.contains("local_api_port")) config.local_api_port = j["local_api_port"].get<int>();
    } catch (const Error&) {
      throw;
    } catch (const std::exception& e) {
      throw Error(ErrorCode::config, std::string("invalid config.json: ") + e.what());
    }
  }

  if (auto hub = env("PROSELAB_HUB_URL")) config.hub_url = *hub;
  if (auto model = env("PROSELAB_DEFAULT_MODEL")) config.default_model = *model;
  if (auto port = env("PROSELAB_PORT")) {
    try {
      config.local_api_port = std::stoi(*port);
    } catch (const std::exception&) {
      throw Error(ErrorCode::config, "PROSELAB_PORT must be a number");
    }
  }

  if (config.models.empty()) {
    ModelConfig stub;
    stub.model_id = "stub";
    stub.endpoint_kind = EndpointKind::scripted_stub;
    stub.stub = StubSettings{};
    config.models.push_back(stub);
  }
  for (auto& m : config.models) {
    if (m.stub && !m.stub->map_file.empty() &&
        std::filesystem::path(m.stub->map_file).is_relative()) {
      m.stub->map_file = (library_root / m.stub->map_file).string();
    }
  }
  if (config.default_model.empty()) config.default_model = config.models.front().model_id;

  list_models(config.models);  // rejects duplicates and invalid entries
  config.model(config.default_model);
  return config;
}

}  // namespace proselab::app
