#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "proselab/core_model.hpp"

namespace proselab::app {

inline constexpr int kDefaultLocalApiPort = 7870;

struct CliConfig {
  std::filesystem::path library_root;
  std::optional<std::string> hub_url;
  std::vector<ModelConfig> models;
  std::string default_model;
  int local_api_port = kDefaultLocalApiPort;

  // Throws Error(config) for an unknown id; empty id selects the default.
  const ModelConfig& model(std::string_view id = {}) const;
};

// Library root: explicit argument, else $PROSELAB_HOME, else ~/.proselab.
std::filesystem::path resolve_library_root(const std::optional<std::string>& explicit_root);

// Reads <root>/config.json when present, then applies PROSELAB_HUB_URL,
// PROSELAB_DEFAULT_MODEL and PROSELAB_PORT. Without any configured models
// a single echo stub named "stub" is provided. Relative stub map paths are
// resolved against the library root.
CliConfig load_config(const std::filesystem::path& library_root);

}  // namespace proselab::app
