#include "proselab/llm_gateway.hpp"

#include <httplib.h>
#include <openssl/evp.h>
#include <spdlog/spdlog.h>

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <thread>
#include <unordered_map>
#include <unordered_set>

#include "fs_util.hpp"
#include "proselab/errors.hpp"
#include "proselab/json_io.hpp"

namespace proselab {
namespace {

struct SplitUrl {
  std::string scheme_host_port;
  std::string path;
};

SplitUrl split_base_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    throw Error(ErrorCode::config, "base_url must include a scheme: " + url);
  }
  const auto path_start = url.find('/', scheme_end + 3);
  SplitUrl out;
  out.scheme_host_port = url.substr(0, path_start);
  out.path = path_start == std::string::npos ? "" : url.substr(path_start);
  while (!out.path.empty() && out.path.back() == '/') out.path.pop_back();
  return out;
}

std::optional<std::chrono::seconds> parse_retry_after(const httplib::Result& res) {
  if (!res->has_header("Retry-After")) return std::nullopt;
  const auto value = res->get_header_value("Retry-After");
  char* end = nullptr;
  const long secs = std::strtol(value.c_str(), &end, 10);
  if (end == value.c_str() || *end != '\0' || secs < 0) return std::nullopt;
  return std::chrono::seconds{secs};
}

class RemoteChatBackend : public ModelBackend {
 public:
  explicit RemoteChatBackend(const ModelConfig& config)
      : url_(split_base_url(*config.base_url)) {}

  CompletionResult complete(const CompletionRequest& request) override {
    std::string api_key;
    if (const auto& ref = request.model.api_key_ref) {
      const char* value = std::getenv(ref->c_str());
      if (value == nullptr || *value == '\0') {
        throw Error(ErrorCode::auth, "environment variable " + *ref + " is not set");
      }
      api_key = value;
    }

    Json body{
        {"model", request.model.model_id},
        {"temperature", request.temperature},
        {"messages", Json::array({Json{{"role", "user"}, {"content", request.prompt}}})},
    };

    httplib::Client client(url_.scheme_host_port);
    const auto secs = std::chrono::duration_cast<std::chrono::seconds>(request.timeout);
    const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(
        request.timeout - secs);
    client.set_connection_timeout(secs.count(), usecs.count());
    client.set_read_timeout(secs.count(), usecs.count());
    client.set_write_timeout(secs.count(), usecs.count());
    httplib::Headers headers;
    if (!api_key.empty()) headers.emplace("Authorization", "Bearer " + api_key);

    const auto path = url_.path + "/chat/completions";
    const auto payload = dump_json(body);
    spdlog::debug("POST {}{} ({} bytes)", url_.scheme_host_port, path, payload.size());
    const auto res = client.Post(path, headers, payload, "application/json");
    if (!res) {
      throw Error(ErrorCode::network, "request to " + url_.scheme_host_port +
                                          " failed: " + httplib::to_string(res.error()));
    }
    if (res->status == 401 || res->status == 403) {
      throw Error(ErrorCode::auth, "endpoint rejected credentials (HTTP " +
                                       std::to_string(res->status) + ")");
    }
    if (res->status == 429) {
      throw RateLimitedError("endpoint rate limited the request (HTTP 429)",
                             parse_retry_after(res));
    }
    if (res->status < 200 || res->status >= 300) {
      throw Error(ErrorCode::protocol,
                  "unexpected HTTP status " + std::to_string(res->status));
    }

    const auto reply = Json::parse(res->body, nullptr, /*allow_exceptions=*/false);
    if (reply.is_discarded()) throw Error(ErrorCode::protocol, "response is not JSON");
    const auto* content = [&]() -> const Json* {
      const auto choices = reply.find("choices");
      if (choices == reply.end() || !choices->is_array() || choices->empty()) return nullptr;
      const auto& first = (*choices)[0];
      if (!first.is_object()) return nullptr;
      const auto message = first.find("message");
      if (message == first.end() || !message->is_object()) return nullptr;
      const auto text = message->find("content");
      if (text == message->end() || !text->is_string()) return nullptr;
      return &*text;
    }();
    if (content == nullptr) {
      throw Error(ErrorCode::protocol, "response lacks choices[0].message.content");
    }
    return {content->get<std::string>(), request.model.model_id, {}};
  }

 private:
  SplitUrl url_;
};

class EchoStub : public ModelBackend {
 public:
  CompletionResult complete(const CompletionRequest& request) override {
    return {request.prompt, request.model.model_id, {}};
  }
};

class MapStub : public ModelBackend {
 public:
  explicit MapStub(const std::string& map_file) {
    const auto what = "stub map " + map_file;
    const auto j = parse_json_text(detail::read_file(map_file), what);
    if (!j.is_array()) throw Error(ErrorCode::config, what + " must be a JSON array");
    for (const auto& entry : j) {
      try {
        responses_[entry.at("prompt_sha256").get<std::string>()] =
            entry.at("response").get<std::string>();
      } catch (const Json::exception& e) {
        throw Error(ErrorCode::config, what + ": " + e.what());
      }
    }
  }

  CompletionResult complete(const CompletionRequest& request) override {
    const auto key = sha256_hex(request.prompt);
    const auto it = responses_.find(key);
    if (it == responses_.end()) {
      throw Error(ErrorCode::stub_miss, "no scripted response for prompt sha256 " + key);
    }
    return {it->second, request.model.model_id, {}};
  }

 private:
  std::unordered_map<std::string, std::string> responses_;
};

class ScriptStub : public ModelBackend {
 public:
  explicit ScriptStub(std::vector<std::string> script) : script_(std::move(script)) {}

  CompletionResult complete(const CompletionRequest& request) override {
    const auto i = next_.fetch_add(1);
    if (i >= script_.size()) {
      throw Error(ErrorCode::stub_miss, "scripted responses exhausted");
    }
    return {script_[i], request.model.model_id, {}};
  }

 private:
  std::vector<std::string> script_;
  std::atomic<std::size_t> next_{0};
};

bool retryable(ErrorCode code) {
  return code == ErrorCode::network || code == ErrorCode::rate_limited;
}

}  // namespace

std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr);
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(len * 2);
  for (unsigned int i = 0; i < len; ++i) {
    out += kHex[digest[i] >> 4];
    out += kHex[digest[i] & 0x0F];
  }
  return out;
}

std::unique_ptr<ModelBackend> make_backend(const ModelConfig& config) {
  if (auto v = validate_model_config(config); !v.ok()) {
    throw Error(ErrorCode::config,
                "model '" + config.model_id + "': " + ValidationError(v.violations).what());
  }
  if (config.endpoint_kind == EndpointKind::remote_chat_api) {
    return std::make_unique<RemoteChatBackend>(config);
  }
  const StubSettings stub = config.stub.value_or(StubSettings{});
  switch (stub.mode) {
    case StubMode::echo: return std::make_unique<EchoStub>();
    case StubMode::map: return std::make_unique<MapStub>(stub.map_file);
    case StubMode::script: return std::make_unique<ScriptStub>(stub.script);
  }
  return std::make_unique<EchoStub>();
}

LlmGateway::LlmGateway(RetryPolicy policy, Sleeper sleeper)
    : policy_(policy), sleeper_(std::move(sleeper)) {
  if (!sleeper_) {
    sleeper_ = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
  }
}

void LlmGateway::register_backend(const std::string& model_id,
                                  std::shared_ptr<ModelBackend> backend) {
  std::lock_guard lock(mutex_);
  registered_[model_id] = std::move(backend);
}

std::shared_ptr<ModelBackend> LlmGateway::backend_for(const ModelConfig& config) {
  std::lock_guard lock(mutex_);
  if (auto it = registered_.find(config.model_id); it != registered_.end()) {
    return it->second;
  }
  // Keyed by the full config so an edited config gets a fresh backend.
  const auto key = dump_json(config);
  if (auto it = backends_.find(key); it != backends_.end()) return it->second;
  std::shared_ptr<ModelBackend> backend = make_backend(config);
  backends_.emplace(key, backend);
  return backend;
}

CompletionResult LlmGateway::complete(const CompletionRequest& request) {
  if (request.prompt.empty()) {
    throw Error(ErrorCode::invalid_argument, "prompt must be non-empty");
  }
  if (!(request.temperature >= kMinTemperature && request.temperature <= kMaxTemperature)) {
    throw Error(ErrorCode::invalid_argument, "temperature out of range");
  }
  auto backend = backend_for(request.model);

  const auto started = std::chrono::steady_clock::now();
  for (int attempt = 0;; ++attempt) {
    try {
      auto result = backend->complete(request);
      result.latency = std::chrono::duration_cast<std::chrono::milliseconds>(
          std::chrono::steady_clock::now() - started);
      return result;
    } catch (const Error& e) {
      if (!retryable(e.code()) || attempt >= policy_.max_retries) throw;
      auto delay = std::chrono::milliseconds{static_cast<std::int64_t>(
          policy_.initial_backoff.count() * std::pow(policy_.multiplier, attempt))};
      if (const auto* limited = dynamic_cast<const RateLimitedError*>(&e)) {
        if (auto after = limited->retry_after()) {
          delay = std::max<std::chrono::milliseconds>(delay, *after);
        }
      }
      spdlog::info("model '{}' attempt {} failed ({}); retrying in {} ms",
                   request.model.model_id, attempt + 1, to_string(e.code()),
                   delay.count());
      sleeper_(delay);
    }
  }
}

std::vector<ModelDescriptor> list_models(std::span<const ModelConfig> configs) {
  std::vector<ModelDescriptor> out;
  std::unordered_set<std::string> seen;
  for (const auto& config : configs) {
    if (!seen.insert(config.model_id).second) {
      throw Error(ErrorCode::config, "duplicate model_id '" + config.model_id + "'");
    }
    if (auto v = validate_model_config(config); !v.ok()) {
      throw Error(ErrorCode::config,
                  "model '" + config.model_id + "': " + ValidationError(v.violations).what());
    }
    out.push_back({config.model_id, config.endpoint_kind});
  }
  return out;
}

}  // namespace proselab
