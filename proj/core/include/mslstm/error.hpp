#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace mslstm {

enum class ErrorCode {
  kShape,
  kConfig,
  kUsage,
  kIo,
  kFormat,
  kNumeric,
};

// Machine-readable tag used by the CLI ("shape_error", "io_error", ...).
std::string_view error_tag(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& message);

}  // namespace mslstm
