#pragma once

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

#include "care/error.hpp"

namespace care::csv {

/// Shortest representation that parses back to the same double.
inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

inline std::vector<std::string> split_line(std::string_view line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    const auto cell = line.substr(start, comma == std::string_view::npos
                                             ? std::string_view::npos
                                             : comma - start);
    out.emplace_back(trim(cell));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

/// Parses a finite decimal number; `context` names the cell in errors.
inline double parse_double(std::string_view cell, const std::string& context) {
  cell = trim(cell);
  if (!cell.empty() && cell.front() == '+') cell.remove_prefix(1);
  double v = 0.0;
  const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (cell.empty() || res.ec != std::errc() || res.ptr != cell.data() + cell.size() ||
      !std::isfinite(v)) {
    throw Error(ErrorKind::ParseError,
                context + ": expected a finite number, got '" + std::string(cell) + "'");
  }
  return v;
}

/// Like parse_double but also accepts the tokens written by format_double
/// for non-finite values.
inline double parse_double_or_special(std::string_view cell, const std::string& context) {
  cell = trim(cell);
  if (cell == "nan") return std::numeric_limits<double>::quiet_NaN();
  if (cell == "inf") return std::numeric_limits<double>::infinity();
  if (cell == "-inf") return -std::numeric_limits<double>::infinity();
  return parse_double(cell, context);
}

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Index of `name` in the header, or -1.
  int column(std::string_view name) const {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (header[i] == name) return static_cast<int>(i);
    }
    return -1;
  }
};

/// Reads a header plus rows; every row must have the header's width and no
/// blank cells.
inline Table read_table(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  Table table;
  std::string line;
  if (!std::getline(in, line)) {
    throw Error(ErrorKind::ParseError, path.string() + ": missing header row");
  }
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
  table.header = split_line(line);
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    auto cells = split_line(line);
    if (cells.size() != table.header.size()) {
      throw Error(ErrorKind::ParseError, path.string() + ":" + std::to_string(line_no) +
                                             ": expected " +
                                             std::to_string(table.header.size()) +
                                             " cells");
    }
    for (const auto& c : cells) {
      if (c.empty()) {
        throw Error(ErrorKind::ParseError,
                    path.string() + ":" + std::to_string(line_no) + ": blank cell");
      }
    }
    table.rows.push_back(std::move(cells));
  }
  return table;
}

/// Opens `path` for writing or throws Io.
inline std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  return out;
}

}  // namespace care::csv
