#pragma once

// Shared plumbing: error type, warning sink, seeded RNG substreams,
// hashing and small string/UTF-8 helpers used across the library.

#include <cstdint>
#include <cstdio>
#include <functional>
#include <iostream>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace reintel {

class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Warnings (fully-null imputation columns, unreadable images, ...) go through
// a replaceable sink so callers and tests can capture them.
inline std::function<void(const std::string&)>& warning_sink() {
  static std::function<void(const std::string&)> sink =
      [](const std::string& msg) { std::cerr << "[warn] " << msg << "\n"; };
  return sink;
}

inline void warn(const std::string& msg) { warning_sink()(msg); }

// FNV-1a, used for stable content hashes (token embeddings, image choice,
// precomputed-embedding file names). Must never change across versions.
inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

// Every stochastic component draws from a named substream of the root seed,
// so stages are independently reproducible.
inline std::uint64_t substream(std::uint64_t root_seed, std::string_view name) {
  return splitmix64(root_seed ^ fnv1a64(name));
}

inline std::mt19937_64 make_engine(std::uint64_t root_seed, std::string_view name) {
  return std::mt19937_64(substream(root_seed, name));
}

// Fisher-Yates with an explicit bounded draw; deterministic regardless of
// standard-library shuffle internals.
template <typename T>
void seeded_shuffle(std::vector<T>& v, std::mt19937_64& eng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    std::size_t j = static_cast<std::size_t>(eng() % i);
    std::swap(v[i - 1], v[j]);
  }
}

// ---- string helpers ----

// Round-trip-exact double formatting for persisted artifacts.
inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

inline std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && is_space(s[b])) ++b;
  while (e > b && is_space(s[e - 1])) --e;
  return std::string(s.substr(b, e - b));
}

inline std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= s.size(); ++i) {
    if (i == s.size() || s[i] == sep) {
      out.emplace_back(s.substr(start, i - start));
      start = i + 1;
    }
  }
  return out;
}

inline std::vector<std::string> split_ws(std::string_view s) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && is_space(s[i])) ++i;
    std::size_t start = i;
    while (i < s.size() && !is_space(s[i])) ++i;
    if (i > start) out.emplace_back(s.substr(start, i - start));
  }
  return out;
}

inline std::string join(const std::vector<std::string>& parts, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

inline std::string ascii_lower(std::string_view s) {
  std::string out(s);
  for (char& c : out)
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  return out;
}

// ---- UTF-8 / grapheme clusters ----
//
// Minimal clustering: a cluster is one decoded codepoint plus any trailing
// combining marks. Enough to keep decomposed Vietnamese diacritics attached;
// full UAX#29 segmentation (emoji ZWJ etc.) is out of scope.

inline bool utf8_decode_one(std::string_view s, std::size_t pos,
                            char32_t& cp, std::size_t& len) {
  unsigned char b0 = static_cast<unsigned char>(s[pos]);
  auto cont = [&](std::size_t k) {
    return pos + k < s.size() &&
           (static_cast<unsigned char>(s[pos + k]) & 0xC0) == 0x80;
  };
  if (b0 < 0x80) {
    cp = b0; len = 1; return true;
  }
  if ((b0 & 0xE0) == 0xC0 && cont(1)) {
    cp = ((b0 & 0x1Fu) << 6) | (static_cast<unsigned char>(s[pos + 1]) & 0x3Fu);
    len = 2; return true;
  }
  if ((b0 & 0xF0) == 0xE0 && cont(1) && cont(2)) {
    cp = ((b0 & 0x0Fu) << 12) |
         ((static_cast<unsigned char>(s[pos + 1]) & 0x3Fu) << 6) |
         (static_cast<unsigned char>(s[pos + 2]) & 0x3Fu);
    len = 3; return true;
  }
  if ((b0 & 0xF8) == 0xF0 && cont(1) && cont(2) && cont(3)) {
    cp = ((b0 & 0x07u) << 18) |
         ((static_cast<unsigned char>(s[pos + 1]) & 0x3Fu) << 12) |
         ((static_cast<unsigned char>(s[pos + 2]) & 0x3Fu) << 6) |
         (static_cast<unsigned char>(s[pos + 3]) & 0x3Fu);
    len = 4; return true;
  }
  // Invalid byte: treat it as a standalone unit so every input is handled.
  cp = b0; len = 1; return false;
}

inline bool is_combining_mark(char32_t cp) {
  return (cp >= 0x0300 && cp <= 0x036F) || (cp >= 0x1AB0 && cp <= 0x1AFF) ||
         (cp >= 0x1DC0 && cp <= 0x1DFF) || (cp >= 0x20D0 && cp <= 0x20FF) ||
         (cp >= 0xFE20 && cp <= 0xFE2F);
}

// Splits a UTF-8 string into grapheme-cluster substrings.
inline std::vector<std::string> grapheme_clusters(std::string_view s) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < s.size()) {
    char32_t cp; std::size_t len;
    utf8_decode_one(s, i, cp, len);
    std::size_t start = i;
    i += len;
    while (i < s.size()) {
      char32_t cp2; std::size_t len2;
      utf8_decode_one(s, i, cp2, len2);
      if (!is_combining_mark(cp2)) break;
      i += len2;
    }
    out.emplace_back(s.substr(start, i - start));
  }
  return out;
}

inline std::size_t grapheme_count(std::string_view s) {
  std::size_t n = 0, i = 0;
  while (i < s.size()) {
    char32_t cp; std::size_t len;
    utf8_decode_one(s, i, cp, len);
    i += len;
    while (i < s.size()) {
      char32_t cp2; std::size_t len2;
      utf8_decode_one(s, i, cp2, len2);
      if (!is_combining_mark(cp2)) break;
      i += len2;
    }
    ++n;
  }
  return n;
}

}  // namespace reintel
