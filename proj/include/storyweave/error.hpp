#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace storyweave {

enum class Errc {
  invalid_argument,
  range,
  parse,
  binding,
  precondition,
  stale_request,
  request_consumed,
  conflict,
  not_found,
  integrity,
  backend_timeout,
  backend_protocol,
  prompt_too_long,
  cancelled,
};

std::string_view errc_name(Errc code);

// All library failures are reported through this one exception type; the
// code drives HTTP status mapping in the service layer.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  Error(Errc code, const std::string& message, std::uint64_t current_version)
      : std::runtime_error(message),
        code_(code),
        current_version_(current_version) {}

  Errc code() const noexcept { return code_; }

  // Set for version conflicts so the caller can rebase.
  std::optional<std::uint64_t> current_version() const noexcept {
    return current_version_;
  }

 private:
  Errc code_;
  std::optional<std::uint64_t> current_version_;
};

inline std::string_view errc_name(Errc code) {
  switch (code) {
    case Errc::invalid_argument: return "invalid_argument";
    case Errc::range: return "range";
    case Errc::parse: return "parse";
    case Errc::binding: return "binding";
    case Errc::precondition: return "precondition";
    case Errc::stale_request: return "stale_request";
    case Errc::request_consumed: return "request_consumed";
    case Errc::conflict: return "conflict";
    case Errc::not_found: return "not_found";
    case Errc::integrity: return "integrity";
    case Errc::backend_timeout: return "backend_timeout";
    case Errc::backend_protocol: return "backend_protocol";
    case Errc::prompt_too_long: return "prompt_too_long";
    case Errc::cancelled: return "cancelled";
  }
  return "unknown";
}

}  // namespace storyweave
