#include "vbreg/format.hpp"

#include <charconv>

#include "vbreg/errors.hpp"

namespace vbreg {

std::string format_real(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

double parse_real(std::string_view text) {
  double v = 0.0;
  const char* end = text.data() + text.size();
  const auto res = std::from_chars(text.data(), end, v);
  if (res.ec != std::errc() || res.ptr != end) {
    throw DataError("not a number: '" + std::string(text) + "'");
  }
  return v;
}

}  // namespace vbreg
