#pragma once

#include <charconv>
#include <cstdint>
#include <string>
#include <system_error>

#include "zevi/errors.hpp"

namespace zevi::detail {

// Shortest decimal that round-trips the exact double.
inline std::string dtos(double x) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, ptr);
}

inline double parse_double(std::string_view sv, long line) {
  double x = 0.0;
  auto [ptr, ec] = std::from_chars(sv.data(), sv.data() + sv.size(), x);
  if (ec != std::errc() || ptr != sv.data() + sv.size())
    throw ParseError("bad floating-point value '" + std::string(sv) + "'",
                     line);
  return x;
}

inline long parse_long(std::string_view sv, long line) {
  long x = 0;
  auto [ptr, ec] = std::from_chars(sv.data(), sv.data() + sv.size(), x);
  if (ec != std::errc() || ptr != sv.data() + sv.size())
    throw ParseError("bad integer value '" + std::string(sv) + "'", line);
  return x;
}

}  // namespace zevi::detail
