#include "stickylab/error.hpp"

namespace stickylab {

const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument: return "invalid argument";
    case ErrorCode::UnsupportedGrid: return "unsupported grid";
    case ErrorCode::NumericalFailure: return "numerical failure";
    case ErrorCode::GridMismatch: return "grid mismatch";
    case ErrorCode::DomainViolation: return "domain violation";
    case ErrorCode::RangeError: return "range error";
    case ErrorCode::DegenerateInput: return "degenerate input";
    case ErrorCode::ContractViolation: return "contract violation";
    case ErrorCode::InvalidRule: return "invalid rule";
    case ErrorCode::AlignmentError: return "alignment error";
    case ErrorCode::ConfigError: return "config error";
    case ErrorCode::IoError: return "I/O error";
  }
  return "unknown error";
}

}  // namespace stickylab
