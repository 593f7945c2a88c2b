#pragma once

#include <cstdint>
#include <cstdio>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "fqc/error.hpp"

namespace fqc {

enum class Label { real, fake };

inline std::string_view label_name(Label l) { return l == Label::real ? "REAL" : "FAKE"; }

inline Label parse_label(std::string_view s) {
  if (s == "REAL") return Label::real;
  if (s == "FAKE") return Label::fake;
  fail(Errc::parse, "unknown label '" + std::string(s) + "' (expected REAL or FAKE)");
}

/// Sorted, duplicate-free list of sample ids.
using IdSet = std::vector<std::string>;

/// 64-bit FNV-1a.
inline std::uint64_t fnv1a(std::string_view bytes, std::uint64_t h = 0xcbf29ce484222325ULL) {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

/// Stable digest of a sorted id list; ids are newline-terminated before hashing.
inline std::string digest_ids(std::span<const std::string> sorted_ids) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& id : sorted_ids) {
    h = fnv1a(id, h);
    h = fnv1a("\n", h);
  }
  return hex64(h);
}

/// Uniform draw in [0, bound) from a 64-bit engine, by rejection. Unlike
/// std::uniform_int_distribution the result is identical across standard
/// library implementations.
inline std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t bound) {
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
  std::uint64_t x;
  do x = rng();
  while (x >= limit);
  return x % bound;
}

template <class T>
void deterministic_shuffle(std::vector<T>& v, std::mt19937_64& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(uniform_below(rng, i));
    std::swap(v[i - 1], v[j]);
  }
}

/// Uniform in the open interval (0,1) derived from a hash.
inline double hash_unit(std::uint64_t h) {
  return (static_cast<double>(h >> 11) + 0.5) * (1.0 / 9007199254740992.0);
}

}  // namespace fqc
