#include "netbench/error.hpp"

namespace netbench {

const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::argument: return "argument";
    case ErrorCode::domain: return "domain";
    case ErrorCode::schema: return "schema";
    case ErrorCode::usage: return "usage";
    case ErrorCode::io: return "io";
    case ErrorCode::blowup: return "blowup";
    case ErrorCode::singular: return "singular";
    case ErrorCode::small_sample: return "small_sample";
    case ErrorCode::alignment: return "alignment";
    case ErrorCode::degenerate_interval: return "degenerate_interval";
    case ErrorCode::invalid_scheme: return "invalid_scheme";
    case ErrorCode::degenerate_target: return "degenerate_target";
    case ErrorCode::too_large: return "too_large";
    case ErrorCode::undefined_aur: return "undefined_aur";
  }
  return "unknown";
}

bool is_usage_error(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::argument:
    case ErrorCode::schema:
    case ErrorCode::usage:
    case ErrorCode::invalid_scheme:
      return true;
    default:
      return false;
  }
}

}  // namespace netbench
