#include "mslstm/error.hpp"

namespace mslstm {

std::string_view error_tag(ErrorCode code) {
  switch (code) {
    case ErrorCode::kShape: return "shape_error";
    case ErrorCode::kConfig: return "config_error";
    case ErrorCode::kUsage: return "usage_error";
    case ErrorCode::kIo: return "io_error";
    case ErrorCode::kFormat: return "format_error";
    case ErrorCode::kNumeric: return "numeric_error";
  }
  return "error";
}

void fail(ErrorCode code, const std::string& message) { throw Error(code, message); }

}  // namespace mslstm
