#pragma once

// Minimal CSV handling for the ratings/MOS/attribute tables: comma separated,
// optional double quotes around a field, one record per line, header first.

#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <istream>
#include <string>
#include <vector>

#include "revq/error.hpp"

namespace revq::csv {

struct Row {
  std::size_t line = 0;  // 1-based line number in the source
  std::vector<std::string> fields;
};

inline std::vector<std::string> split_line(const std::string& line, std::size_t line_no) {
  std::vector<std::string> out;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        field += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        field += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(std::move(field));
      field.clear();
    } else if (c != '\r') {
      field += c;
    }
  }
  require(!quoted, ErrorCode::ParseError, "line " + std::to_string(line_no) + ": unterminated quote");
  out.push_back(std::move(field));
  return out;
}

/// Reads all rows; checks the header matches `expected_header` exactly and every
/// row has the same arity. Blank lines are skipped.
inline std::vector<Row> read(std::istream& in, const std::vector<std::string>& expected_header) {
  std::string line;
  std::size_t line_no = 0;
  std::vector<Row> rows;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    auto fields = split_line(line, line_no);
    if (!header_seen) {
      require(fields == expected_header, ErrorCode::ParseError,
              "line " + std::to_string(line_no) + ": unexpected header");
      header_seen = true;
      continue;
    }
    require(fields.size() == expected_header.size(), ErrorCode::ParseError,
            "line " + std::to_string(line_no) + ": expected " + std::to_string(expected_header.size()) +
                " fields, got " + std::to_string(fields.size()));
    rows.push_back({line_no, std::move(fields)});
  }
  require(header_seen, ErrorCode::ParseError, "missing header line");
  return rows;
}

inline double parse_double(const std::string& s, std::size_t line_no) {
  double value = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  while (first < last && *first == ' ') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, value);
  require(ec == std::errc() && ptr == last, ErrorCode::ParseError,
          "line " + std::to_string(line_no) + ": not a number: '" + s + "'");
  return value;
}

inline std::string escape(const std::string& field) {
  if (field.find_first_of(",\"\n") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

/// Shortest representation that round-trips through strtod.
inline std::string format_double(double v) {
  char buf[64];
  for (int precision = 1; precision <= 17; ++precision) {
    std::snprintf(buf, sizeof(buf), "%.*g", precision, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

}  // namespace revq::csv
