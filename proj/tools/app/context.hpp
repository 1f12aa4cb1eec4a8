#pragma once

#include <memory>
#include <optional>
#include <string>

#include "app/config.hpp"
#include "proselab/hub_client.hpp"
#include "proselab/llm_gateway.hpp"
#include "proselab/prompt_library.hpp"

namespace proselab::app {

// Everything one CLI invocation or serve process shares.
struct AppContext {
  explicit AppContext(CliConfig cfg)
      : config(std::move(cfg)), library(config.library_root) {}

  std::optional<HubSession> hub_session() const {
    if (!hub_url) return std::nullopt;
    HubSession session;
    session.base_url = *hub_url;
    return session;
  }

  // Starts forwarding local runs of hub-sourced prompts to the hub.
  void enable_run_reporting() {
    auto session = hub_session();
    if (!session || reporter) return;
    session->timeout = std::chrono::seconds(5);
    reporter = std::make_unique<RunReporter>(*session);
    library.set_run_listener([r = reporter.get()](const PromptRecord& record) {
      if (record.source_hub_id) r->report_run_async(*record.source_hub_id);
    });
  }

  CliConfig config;
  PromptLibrary library;
  LlmGateway gateway;
  std::optional<std::string> hub_url = config.hub_url;
  std::unique_ptr<RunReporter> reporter;
};

}  // namespace proselab::app
