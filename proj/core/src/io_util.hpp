#pragma once

// Small text helpers shared by the parsers and writers. Not installed.

#include <charconv>
#include <cmath>
#include <filesystem>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

namespace echoaudit::detail {

template <class Int>
bool parse_integer(std::string_view s, Int& out) {
  if (s.empty()) return false;
  const char* first = s.data();
  if (*first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, s.data() + s.size(), out);
  return ec == std::errc{} && ptr == s.data() + s.size();
}

/// Finite doubles only.
inline bool parse_double(std::string_view s, double& out) {
  if (s.empty()) return false;
  const char* first = s.data();
  if (*first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, s.data() + s.size(), out);
  return ec == std::errc{} && ptr == s.data() + s.size() && std::isfinite(out);
}

/// Shortest text that round-trips.
std::string format_double(double v);

/// RFC 4180 splitting of a single physical line. Returns false on an
/// unterminated quote.
bool split_csv_line(std::string_view line, std::vector<std::string>& cells);

void append_csv_cell(std::string& out, std::string_view cell);

/// Writes via a sibling temp file and rename.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

std::string read_file(const std::filesystem::path& path);

}  // namespace echoaudit::detail
