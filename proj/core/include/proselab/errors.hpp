#pragma once

#include <chrono>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace proselab {

enum class ErrorCode {
  invalid_argument,
  validation,
  not_found,
  duplicate,
  invalid_slot,
  missing_decision,
  invalid_span,
  storage,
  config,
  network,
  auth,
  rate_limited,
  protocol,
  stub_miss,
  invalid_cursor,
  empty_input,
  port_in_use,
};

// Stable snake_case name, used in JSON error bodies and CLI stderr.
std::string_view to_string(ErrorCode code) noexcept;

// Conventional HTTP status for an error code (400/404/409/429/500/...).
int http_status(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

class ValidationError : public Error {
 public:
  explicit ValidationError(std::vector<std::string> violations);

  const std::vector<std::string>& violations() const noexcept {
    return violations_;
  }

 private:
  std::vector<std::string> violations_;
};

class RateLimitedError : public Error {
 public:
  RateLimitedError(const std::string& message,
                   std::optional<std::chrono::seconds> retry_after)
      : Error(ErrorCode::rate_limited, message), retry_after_(retry_after) {}

  std::optional<std::chrono::seconds> retry_after() const noexcept {
    return retry_after_;
  }

 private:
  std::optional<std::chrono::seconds> retry_after_;
};

}  // namespace proselab
