#pragma once

#include <stdexcept>
#include <string>

namespace pace {

enum class ErrorCode {
  invalid_argument,
  overlap,
  out_of_bounds,
  unsorted,
  unsupported_format,
  truncated,
  too_short,
  insufficient_data,
  empty_sample,
  degenerate_effect,
  zero_variance,
  off_grid,
  length_mismatch,
  parse,
  io,
  unsupported_version,
};

const char* to_string(ErrorCode code);

// Every module reports failures through this type; `code()` lets callers
// branch without parsing the message.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace pace
