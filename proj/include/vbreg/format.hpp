#pragma once

#include <string>
#include <string_view>

namespace vbreg {

/// Shortest decimal text that parses back to exactly the same double.
std::string format_real(double v);
/// Strict parse of a whole token; throws DataError on anything else.
double parse_real(std::string_view text);

}  // namespace vbreg
