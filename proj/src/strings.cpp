#include "steereval/strings.hpp"

#include <algorithm>
#include <cctype>

#include "steereval/errors.hpp"
#include "steereval/hash.hpp"

#include <fmt/core.h>

namespace steereval {

std::string hash_hex(std::uint64_t value) {
  return fmt::format("{:016x}", value);
}

std::string trim(std::string_view text) {
  std::size_t begin = 0;
  std::size_t end = text.size();
  while (begin < end && std::isspace(static_cast<unsigned char>(text[begin]))) ++begin;
  while (end > begin && std::isspace(static_cast<unsigned char>(text[end - 1]))) --end;
  return std::string(text.substr(begin, end - begin));
}

std::string to_lower(std::string_view text) {
  std::string out(text);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

bool contains_ci(std::string_view haystack, std::string_view needle) {
  if (needle.empty()) return true;
  return to_lower(haystack).find(to_lower(needle)) != std::string::npos;
}

std::vector<std::string> split(std::string_view text, char sep) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= text.size(); ++i) {
    if (i == text.size() || text[i] == sep) {
      parts.emplace_back(text.substr(start, i - start));
      start = i + 1;
    }
  }
  return parts;
}

std::string replace_all(std::string_view text, std::string_view from,
                        std::string_view to) {
  std::string out;
  out.reserve(text.size());
  std::size_t pos = 0;
  while (pos < text.size()) {
    const std::size_t hit = text.find(from, pos);
    if (hit == std::string_view::npos || from.empty()) {
      out.append(text.substr(pos));
      break;
    }
    out.append(text.substr(pos, hit - pos));
    out.append(to);
    pos = hit + from.size();
  }
  return out;
}

Rational rational_from_decimal(std::string_view text) {
  std::string s = trim(text);
  if (s.empty()) throw Error(Errc::config_error, "empty decimal literal");
  bool negative = false;
  std::size_t i = 0;
  if (s[i] == '+' || s[i] == '-') {
    negative = s[i] == '-';
    ++i;
  }
  std::int64_t num = 0;
  std::int64_t den = 1;
  bool any_digit = false;
  bool seen_dot = false;
  for (; i < s.size(); ++i) {
    const char c = s[i];
    if (c == '.') {
      if (seen_dot) throw Error(Errc::config_error, "bad decimal literal: " + s);
      seen_dot = true;
      continue;
    }
    if (c < '0' || c > '9') throw Error(Errc::config_error, "bad decimal literal: " + s);
    any_digit = true;
    num = num * 10 + (c - '0');
    if (seen_dot) den *= 10;
  }
  if (!any_digit) throw Error(Errc::config_error, "bad decimal literal: " + s);
  if (negative) num = -num;
  return Rational{num, den};
}

}  // namespace steereval
