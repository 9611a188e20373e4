#pragma once

#include <stdexcept>
#include <string>

namespace pflow {

// Numeric values are shared with the C API status codes in pflow.h.
enum class ErrorCode : int {
  kInvalidArgument = 1,
  kDimensionMismatch = 2,
  kNotConverged = 3,
  kCflViolation = 4,
  kNotDivergenceFree = 5,
  kConfig = 6,
  kIo = 7,
  kInconsistent = 8,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace pflow
