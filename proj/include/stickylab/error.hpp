#pragma once

#include <stdexcept>
#include <string>

namespace stickylab {

enum class ErrorCode {
  InvalidArgument,
  UnsupportedGrid,
  NumericalFailure,
  GridMismatch,
  DomainViolation,
  RangeError,
  DegenerateInput,
  ContractViolation,
  InvalidRule,
  AlignmentError,
  ConfigError,
  IoError,
};

const char* to_string(ErrorCode code) noexcept;

// Every failure raised by the library carries one of the codes above so the
// C layer can map it onto a stable integer without string matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

}  // namespace stickylab
