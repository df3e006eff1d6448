#pragma once

#include <string>
#include <string_view>

namespace stickylab {

// Shortest decimal text that round-trips to the same double.
std::string format_short(double v);
// 17 significant digits, the CSV serialisation for result tables.
std::string format_17g(double v);
// Whole-string parse; throws Error(InvalidArgument) naming `what` on failure.
double parse_double(std::string_view text, std::string_view what);

}  // namespace stickylab
