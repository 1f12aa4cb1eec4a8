#include "proselab/errors.hpp"

namespace proselab {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::invalid_argument: return "invalid_argument";
    case ErrorCode::validation: return "validation_error";
    case ErrorCode::not_found: return "not_found";
    case ErrorCode::duplicate: return "duplicate";
    case ErrorCode::invalid_slot: return "invalid_slot";
    case ErrorCode::missing_decision: return "missing_decision";
    case ErrorCode::invalid_span: return "invalid_span";
    case ErrorCode::storage: return "storage_error";
    case ErrorCode::config: return "config_error";
    case ErrorCode::network: return "network_error";
    case ErrorCode::auth: return "auth_error";
    case ErrorCode::rate_limited: return "rate_limited";
    case ErrorCode::protocol: return "protocol_error";
    case ErrorCode::stub_miss: return "stub_miss";
    case ErrorCode::invalid_cursor: return "invalid_cursor";
    case ErrorCode::empty_input: return "empty_input";
    case ErrorCode::port_in_use: return "port_in_use";
  }
  return "unknown";
}

int http_status(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::invalid_argument:
    case ErrorCode::validation:
    case ErrorCode::invalid_slot:
    case ErrorCode::missing_decision:
    case ErrorCode::invalid_span:
    case ErrorCode::invalid_cursor:
    case ErrorCode::empty_input:
      return 400;
    case ErrorCode::not_found:
      return 404;
    case ErrorCode::duplicate:
      return 409;
    case ErrorCode::rate_limited:
      return 429;
    case ErrorCode::network:
    case ErrorCode::auth:
    case ErrorCode::protocol:
    case ErrorCode::stub_miss:
      return 502;
    default:
      return 500;
  }
}

namespace {

std::string join_violations(const std::vector<std::string>& violations) {
  std::string out;
  for (const auto& v : violations) {
    if (!out.empty()) out += "; ";
    out += v;
  }
  return out.empty() ? "validation failed" : out;
}

}  // namespace

ValidationError::ValidationError(std::vector<std::string> violations)
    : Error(ErrorCode::validation, join_violations(violations)),
      violations_(std::move(violations)) {}

}  // namespace proselab
