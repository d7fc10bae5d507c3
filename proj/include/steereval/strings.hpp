#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace steereval {

std::string trim(std::string_view text);
std::string to_lower(std::string_view text);
bool contains_ci(std::string_view haystack, std::string_view needle);
std::vector<std::string> split(std::string_view text, char sep);
std::string replace_all(std::string_view text, std::string_view from,
                        std::string_view to);

// Exact rational from a decimal literal such as "0.75" -> 75/100.
// Used so vote-fraction thresholds never go through binary floating point.
struct Rational {
  std::int64_t num = 0;
  std::int64_t den = 1;
};
Rational rational_from_decimal(std::string_view text);

}  // namespace steereval
