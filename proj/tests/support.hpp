#pragma once

#include <optional>

#include "stickylab/error.hpp"

// Error code raised by f, or nullopt when it returns normally.
template <class F>
std::optional<stickylab::ErrorCode> error_code_of(F&& f) {
  try {
    f();
  } catch (const stickylab::Error& e) {
    return e.code();
  }
  return std::nullopt;
}
