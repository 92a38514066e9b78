#pragma once

// CSV with shortest round-trip number formatting, and a strict numeric reader
// whose errors carry the offending line number.

#include <charconv>
#include <cmath>
#include <fstream>
#include <filesystem>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "wlns/error.hpp"

namespace wlns {

/// Shortest decimal that parses back to the same double; "inf", "-inf", "nan"
/// for non-finite values.
inline std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline std::string format_number(long long v) { return std::to_string(v); }
inline std::string format_number(int v) { return std::to_string(v); }

class CsvWriter {
public:
  CsvWriter(std::ostream& os, const std::vector<std::string>& header) : os_(os), columns_(header.size()) {
    for (std::size_t i = 0; i < header.size(); ++i) os_ << (i ? "," : "") << header[i];
    os_ << '\n';
  }

  void row(const std::vector<double>& values) {
    if (values.size() != columns_) throw Error("csv: row width differs from header");
    for (std::size_t i = 0; i < values.size(); ++i) os_ << (i ? "," : "") << format_number(values[i]);
    os_ << '\n';
  }

  /// Row of preformatted cells.
  void raw(const std::vector<std::string>& cells) {
    if (cells.size() != columns_) throw Error("csv: row width differs from header");
    for (std::size_t i = 0; i < cells.size(); ++i) os_ << (i ? "," : "") << cells[i];
    os_ << '\n';
  }

private:
  std::ostream& os_;
  std::size_t columns_;
};

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
  std::vector<int> line_numbers;  ///< source line of each row

  std::size_t column(std::string_view name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return i;
    throw Error("csv: missing column '" + std::string(name) + "'");
  }
};

namespace detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

inline std::vector<std::string> split_commas(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

inline bool parse_double(const std::string& s, double& out) {
  if (s == "inf" || s == "+inf") return out = HUGE_VAL, true;
  if (s == "-inf") return out = -HUGE_VAL, true;
  if (s == "nan") return out = NAN, true;
  const char* b = s.data();
  const char* e = b + s.size();
  if (b != e && *b == '+') ++b;
  auto res = std::from_chars(b, e, out);
  return res.ec == std::errc() && res.ptr == e && b != e;
}

}  // namespace detail

/// Reads a header line and numeric rows. Blank lines and lines starting with
/// '#' are skipped. `source` names the input in error messages.
inline CsvTable read_csv(std::istream& is, const std::string& source = "csv") {
  CsvTable t;
  std::string line;
  int lineno = 0;
  bool have_header = false;
  while (std::getline(is, line)) {
    ++lineno;
    const std::string s = detail::trim(line);
    if (s.empty() || s[0] == '#') continue;
    auto cells = detail::split_commas(s);
    if (!have_header) {
      t.header = std::move(cells);
      have_header = true;
      continue;
    }
    if (cells.size() != t.header.size())
      throw Error(source + ":" + std::to_string(lineno) + ": expected " + std::to_string(t.header.size()) +
                  " fields, found " + std::to_string(cells.size()));
    std::vector<double> row(cells.size());
    for (std::size_t i = 0; i < cells.size(); ++i)
      if (!detail::parse_double(cells[i], row[i]))
        throw Error(source + ":" + std::to_string(lineno) + ": field " + std::to_string(i + 1) + " ('" + cells[i] +
                    "') is not a number");
    t.rows.push_back(std::move(row));
    t.line_numbers.push_back(lineno);
  }
  if (!have_header) throw Error(source + ":1: empty file, expected a header line");
  return t;
}

inline CsvTable read_csv_file(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw Error("cannot open " + path.string());
  return read_csv(is, path.string());
}

}  // namespace wlns
