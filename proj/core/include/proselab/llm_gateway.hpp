#pragma once

#include <chrono>
#include <functional>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "proselab/core_model.hpp"

namespace proselab {

struct CompletionRequest {
  std::string prompt;
  double temperature = kDefaultTemperature;
  ModelConfig model;
  std::chrono::milliseconds timeout{60'000};
};

struct CompletionResult {
  std::string text;
  std::string model_id;
  std::chrono::milliseconds latency{0};
};

// One endpoint adapter. Implementations throw Error with one of
// network / auth / rate_limited / protocol / stub_miss.
class ModelBackend {
 public:
  virtual ~ModelBackend() = default;
  virtual CompletionResult complete(const CompletionRequest& request) = 0;
};

std::unique_ptr<ModelBackend> make_backend(const ModelConfig& config);

// Lowercase hex SHA-256, the key format of stub map files.
std::string sha256_hex(std::string_view data);

struct RetryPolicy {
  int max_retries = 2;
  std::chrono::milliseconds initial_backoff{1000};
  double multiplier = 2.0;
};

using Sleeper = std::function<void(std::chrono::milliseconds)>;

// Routes requests to a per-model backend, created on first use. Retries
// only network errors and rate limiting, within the retry budget.
class LlmGateway {
 public:
  explicit LlmGateway(RetryPolicy policy = {}, Sleeper sleeper = {});

  CompletionResult complete(const CompletionRequest& request);

  // Installs a custom adapter for a model id (e.g. a local-inference engine).
  void register_backend(const std::string& model_id,
                        std::shared_ptr<ModelBackend> backend);

 private:
  std::shared_ptr<ModelBackend> backend_for(const ModelConfig& config);

  RetryPolicy policy_;
  Sleeper sleeper_;
  std::mutex mutex_;
  std::unordered_map<std::string, std::shared_ptr<ModelBackend>> registered_;
  std::unordered_map<std::string, std::shared_ptr<ModelBackend>> backends_;
};

struct ModelDescriptor {
  std::string model_id;
  EndpointKind endpoint_kind = EndpointKind::scripted_stub;

  bool operator==(const ModelDescriptor&) const = default;
};

// Throws Error(config) on duplicate ids or invalid configs.
std::vector<ModelDescriptor> list_models(std::span<const ModelConfig> configs);

}  // namespace proselab
