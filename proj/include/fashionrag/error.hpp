#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace fashionrag {

enum class ErrorCode {
  degenerate_input,
  invalid_embedding,
  dimension_mismatch,
  length_mismatch,
  duplicate_id,
  template_error,
  config_error,
  undefined_metric,
  parse_error,
  io_error,
  missing_image,
  missing_embedding,
  corrupt_index,
};

std::string_view to_string(ErrorCode code) noexcept;

// Process exit status for a failed CLI command; distinct per code.
int exit_status(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& detail)
      : std::runtime_error(detail), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace fashionrag
