#pragma once

// Small parsing helpers shared by the system-file and config readers.

#include <charconv>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "spinamp/error.hpp"

namespace spinamp::text {

inline std::string_view trim(std::string_view s) {
  const auto* ws = " \t\r\n";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
    if (i >= s.size()) break;
    std::size_t j = i;
    while (j < s.size() && s[j] != ' ' && s[j] != '\t') ++j;
    out.push_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

inline std::string_view strip_comment(std::string_view s) {
  const auto p = s.find_first_of("#;");
  return p == std::string_view::npos ? s : s.substr(0, p);
}

inline double to_double(std::string_view s, std::size_t line, std::string_view what) {
  s = trim(s);
  double v = 0.0;
  const auto* first = s.data();
  const auto* last = s.data() + s.size();
  if (!s.empty() && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc{} || ptr != last || s.empty()) {
    throw ConfigError("expected a number for " + std::string(what) + ", got '" + std::string(s) + "'",
                      line);
  }
  return v;
}

inline long long to_int(std::string_view s, std::size_t line, std::string_view what) {
  s = trim(s);
  long long v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty()) {
    throw ConfigError("expected an integer for " + std::string(what) + ", got '" + std::string(s) + "'",
                      line);
  }
  return v;
}

}  // namespace spinamp::text
