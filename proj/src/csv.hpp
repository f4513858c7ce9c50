#pragma once

#include <charconv>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "pqpan/errors.hpp"

namespace pqpan::csv {

struct Record {
  std::size_t line = 0;  // 1-based source line
  std::vector<std::string> fields;
};

/// Splits CSV text into records. Blank lines and lines starting with '#' are
/// skipped. Double-quoted fields may contain commas and doubled quotes.
inline std::vector<Record> read(std::string_view text) {
  std::vector<Record> out;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty() || line.front() == '#') continue;

    Record rec{line_no, {}};
    std::string field;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
      const char c = line[i];
      if (quoted) {
        if (c == '"') {
          if (i + 1 < line.size() && line[i + 1] == '"') {
            field.push_back('"');
            ++i;
          } else {
            quoted = false;
          }
        } else {
          field.push_back(c);
        }
      } else if (c == '"') {
        quoted = true;
      } else if (c == ',') {
        rec.fields.push_back(std::move(field));
        field.clear();
      } else {
        field.push_back(c);
      }
    }
    if (quoted) {
      throw ParseError(line_no, rec.fields.size() + 1, "unterminated quote");
    }
    rec.fields.push_back(std::move(field));
    out.push_back(std::move(rec));
  }
  return out;
}

inline std::string quote(std::string_view field) {
  if (field.find_first_of(",\"\n\r") == std::string_view::npos) {
    return std::string(field);
  }
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

template <typename T>
T parse_number(const Record& rec, std::size_t column) {
  const std::string& s = rec.fields.at(column);
  T value{};
  const auto* first = s.data();
  const auto* last = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc{} || ptr != last || s.empty()) {
    throw ParseError(rec.line, column + 1, "not a number: '" + s + "'");
  }
  return value;
}

inline void expect_columns(const Record& rec, std::size_t n) {
  if (rec.fields.size() != n) {
    throw ParseError(rec.line, rec.fields.size(),
                     "expected " + std::to_string(n) + " columns, got " +
                         std::to_string(rec.fields.size()));
  }
}

inline void expect_header(const Record& rec,
                          const std::vector<std::string_view>& names) {
  expect_columns(rec, names.size());
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (rec.fields[i] != names[i]) {
      throw ParseError(rec.line, i + 1,
                       "expected header '" + std::string(names[i]) + "'");
    }
  }
}

}  // namespace pqpan::csv
