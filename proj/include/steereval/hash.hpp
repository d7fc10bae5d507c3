#pragma once

#include <cstdint>
#include <initializer_list>
#include <string>
#include <string_view>

namespace steereval {

// 64-bit FNV-1a. All seeds in the harness flow through this hash so that
// runs are reproducible across platforms and reimplementations.
inline constexpr std::uint64_t kFnvOffsetBasis = 14695981039346656037ULL;
inline constexpr std::uint64_t kFnvPrime = 1099511628211ULL;

constexpr std::uint64_t fnv1a(std::string_view bytes,
                              std::uint64_t state = kFnvOffsetBasis) {
  for (unsigned char c : bytes) {
    state ^= static_cast<std::uint64_t>(c);
    state *= kFnvPrime;
  }
  return state;
}

// FNV-1a over the UTF-8 parts joined by the ASCII unit separator (0x1F).
// Numeric parts must be rendered as decimal strings by the caller.
inline std::uint64_t stable_hash(std::initializer_list<std::string_view> parts) {
  std::uint64_t state = kFnvOffsetBasis;
  bool first = true;
  for (std::string_view part : parts) {
    if (!first) {
      state ^= 0x1FULL;
      state *= kFnvPrime;
    }
    first = false;
    state = fnv1a(part, state);
  }
  return state;
}

std::string hash_hex(std::uint64_t value);

}  // namespace steereval
