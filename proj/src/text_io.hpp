// Apache License, Version 2.0, refer to LICENSE

#pragma once

#include <charconv>
#include <cstdint>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "cviat/error.hpp"

namespace cviat::text {

/// 17 significant digits; parses back to the identical double.
inline std::string format_double(double v) {
  char buf[40];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
  if (ec != std::errc()) throw NumericalError("cannot format value");
  return std::string(buf, end);
}

inline double parse_double(const std::string& s, const std::string& context) {
  double v = 0.0;
  auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || end != s.data() + s.size()) {
    throw DataError(context + ": expected a number, got '" + s + "'");
  }
  return v;
}

inline std::int64_t parse_int(const std::string& s, const std::string& context) {
  std::int64_t v = 0;
  auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || end != s.data() + s.size()) {
    throw DataError(context + ": expected an integer, got '" + s + "'");
  }
  return v;
}

inline std::uint64_t parse_uint(const std::string& s, const std::string& context) {
  std::uint64_t v = 0;
  auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || end != s.data() + s.size()) {
    throw DataError(context + ": expected an unsigned integer, got '" + s + "'");
  }
  return v;
}

inline std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream in(line);
  std::string field;
  while (in >> field) out.push_back(field);
  return out;
}

/// Line-oriented "key value..." reader with line numbers in errors.
class KeyValueReader {
 public:
  KeyValueReader(std::istream& in, std::string source) : in_(in), source_(std::move(source)) {}

  /// Next line split into fields, which must start with `key`.
  std::vector<std::string> expect(const std::string& key, std::size_t min_values = 1) {
    std::string line;
    while (std::getline(in_, line)) {
      ++line_no_;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) continue;
      auto fields = split_fields(line);
      if (fields.empty()) continue;
      if (fields[0] != key) fail("expected '" + key + "', found '" + fields[0] + "'");
      fields.erase(fields.begin());
      if (fields.size() < min_values) fail("'" + key + "' is missing its value");
      return fields;
    }
    fail("unexpected end of file, expected '" + key + "'");
  }

  std::string context() const { return source_ + ":" + std::to_string(line_no_); }
  [[noreturn]] void fail(const std::string& what) const { throw DataError(context() + ": " + what); }

 private:
  std::istream& in_;
  std::string source_;
  std::size_t line_no_ = 0;
};

}  // namespace cviat::text
