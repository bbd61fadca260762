#pragma once

#include <optional>
#include <stdexcept>
#include <string>

namespace netbench {

enum class ErrorCode {
  argument,
  domain,
  schema,
  usage,
  io,
  blowup,
  singular,
  small_sample,
  alignment,
  degenerate_interval,
  invalid_scheme,
  degenerate_target,
  too_large,
  undefined_aur,
};

const char* to_string(ErrorCode code) noexcept;

// Usage-class errors map to exit status 1, everything else to 2.
bool is_usage_error(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message, std::string field = {})
      : std::runtime_error(message), code_(code), field_(std::move(field)) {}

  ErrorCode code() const noexcept { return code_; }

  // Dotted path of the offending configuration field, empty when not
  // applicable.
  const std::string& field() const noexcept { return field_; }

 private:
  ErrorCode code_;
  std::string field_;
};

/// Raised when an Euler-Maruyama step produces a non-finite state.
class BlowupError : public Error {
 public:
  BlowupError(double time, const std::string& message)
      : Error(ErrorCode::blowup, message), time_(time) {}

  double time() const noexcept { return time_; }

 private:
  double time_;
};

}  // namespace netbench
