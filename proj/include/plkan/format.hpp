#pragma once

#include <array>
#include <charconv>
#include <span>
#include <string>

namespace plkan {

/// Shortest decimal text that reads back to the same double.
inline std::string format_double(double v) {
  std::array<char, 32> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return {buf.data(), res.ptr};
}

inline std::string format_vector(std::span<const double> v, const char* sep = ",") {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i > 0) out += sep;
    out += format_double(v[i]);
  }
  return out;
}

}  // namespace plkan
