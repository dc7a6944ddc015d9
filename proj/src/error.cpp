#include "fashionrag/error.hpp"

namespace fashionrag {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::degenerate_input: return "degenerate_input";
    case ErrorCode::invalid_embedding: return "invalid_embedding";
    case ErrorCode::dimension_mismatch: return "dimension_mismatch";
    case ErrorCode::length_mismatch: return "length_mismatch";
    case ErrorCode::duplicate_id: return "duplicate_id";
    case ErrorCode::template_error: return "template_error";
    case ErrorCode::config_error: return "config_error";
    case ErrorCode::undefined_metric: return "undefined_metric";
    case ErrorCode::parse_error: return "parse_error";
    case ErrorCode::io_error: return "io_error";
    case ErrorCode::missing_image: return "missing_image";
    case ErrorCode::missing_embedding: return "missing_embedding";
    case ErrorCode::corrupt_index: return "corrupt_index";
  }
  return "unknown";
}

int exit_status(ErrorCode code) noexcept {
  // 1 is reserved for usage errors and unexpected exceptions.
  return 10 + static_cast<int>(code);
}

}  // namespace fashionrag
