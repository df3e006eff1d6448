#include "stickylab/format.hpp"

#include <charconv>
#include <cstdio>

#include "stickylab/error.hpp"

namespace stickylab {

std::string format_short(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string format_17g(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double parse_double(std::string_view text, std::string_view what) {
  double v = 0.0;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  if (first != last && *first == '+') ++first;
  auto res = std::from_chars(first, last, v);
  if (text.empty() || res.ec != std::errc() || res.ptr != last)
    fail(ErrorCode::InvalidArgument,
         "cannot parse " + std::string(what) + " from '" + std::string(text) + "'");
  return v;
}

}  // namespace stickylab
