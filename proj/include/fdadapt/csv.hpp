#pragma once

#include <charconv>
#include <cmath>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace fdadapt::csv {

/// Shortest representation that parses back to the same double; "NA" for NaN.
inline std::string format_number(double value) {
  if (std::isnan(value)) return "NA";
  char buffer[64];
  auto [end, ec] = std::to_chars(buffer, buffer + sizeof buffer, value);
  return std::string(buffer, end);
}

inline std::vector<std::string_view> split(std::string_view line, char sep = ',') {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  for (;;) {
    const auto pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

/// Parses the whole field as a double; accepts "nan"/"inf" spellings so the
/// caller can reject them explicitly.
inline std::optional<double> parse_double(std::string_view field) {
  field = trim(field);
  if (field.empty()) return std::nullopt;
  if (field.front() == '+') field.remove_prefix(1);
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc{} || ptr != field.data() + field.size()) return std::nullopt;
  return value;
}

inline std::optional<long long> parse_integer(std::string_view field) {
  field = trim(field);
  long long value = 0;
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (field.empty() || ec != std::errc{} || ptr != field.data() + field.size()) return std::nullopt;
  return value;
}

/// Streams comma-separated fields; numbers go through format_number.
class RowWriter {
 public:
  explicit RowWriter(std::ostream& out) : out_(out) {}

  RowWriter& operator<<(double v) { return field(format_number(v)); }
  RowWriter& operator<<(long long v) { return field(std::to_string(v)); }
  RowWriter& operator<<(int v) { return field(std::to_string(v)); }
  RowWriter& operator<<(std::size_t v) { return field(std::to_string(v)); }
  RowWriter& operator<<(std::string_view v) { return field(v); }

  void end() {
    out_ << '\n';
    first_ = true;
  }

 private:
  RowWriter& field(std::string_view text) {
    if (!first_) out_ << ',';
    out_ << text;
    first_ = false;
    return *this;
  }

  std::ostream& out_;
  bool first_ = true;
};

}  // namespace fdadapt::csv
