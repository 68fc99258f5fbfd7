#pragma once

#include <charconv>
#include <optional>
#include <string>
#include <string_view>

namespace swcs {

// 17 significant digits: enough to round-trip any double.
inline std::string fmt17(double v) {
  char buf[40];
  auto r = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  return std::string(buf, r.ptr);
}

inline std::optional<double> parse_double(std::string_view s) {
  std::string tmp(s);
  for (char& c : tmp)
    if (c == 'D' || c == 'd') c = 'e';
  if (!tmp.empty() && tmp[0] == '+') tmp.erase(0, 1);
  double v = 0.0;
  auto r = std::from_chars(tmp.data(), tmp.data() + tmp.size(), v);
  if (r.ec != std::errc() || r.ptr != tmp.data() + tmp.size()) return std::nullopt;
  return v;
}

inline std::optional<long long> parse_int(std::string_view s) {
  if (!s.empty() && s[0] == '+') s.remove_prefix(1);
  long long v = 0;
  auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

}  // namespace swcs
