#pragma once

// Delimiter-separated text with RFC-4180 quoting. Post texts contain commas,
// quotes and embedded line breaks, so the parser is quote-aware and a record
// may span several physical lines.

#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "reintel/common.hpp"

namespace reintel::csv {

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  int column(std::string_view name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return static_cast<int>(i);
    return -1;
  }
};

// Parses full file content. Accepts LF and CRLF record terminators outside
// quotes; everything inside quotes (including newlines) is field content.
inline std::vector<std::vector<std::string>> parse(std::string_view content,
                                                   char delim = ',') {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> record;
  std::string field;
  bool in_quotes = false;
  bool field_started = false;

  auto end_field = [&] {
    record.push_back(field);
    field.clear();
    field_started = false;
  };
  auto end_record = [&] {
    end_field();
    records.push_back(std::move(record));
    record.clear();
  };

  std::size_t i = 0;
  while (i < content.size()) {
    char c = content[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < content.size() && content[i + 1] == '"') {
          field += '"';
          i += 2;
        } else {
          in_quotes = false;
          ++i;
        }
      } else {
        field += c;
        ++i;
      }
      continue;
    }
    if (c == '"' && !field_started && field.empty()) {
      in_quotes = true;
      field_started = true;
      ++i;
    } else if (c == delim) {
      end_field();
      ++i;
    } else if (c == '\n') {
      if (!field.empty() && field.back() == '\r') field.pop_back();
      end_record();
      ++i;
    } else {
      field += c;
      field_started = true;
      ++i;
    }
  }
  if (in_quotes) throw Error("csv: unterminated quoted field at end of input");
  if (field_started || !field.empty() || !record.empty()) end_record();
  return records;
}

inline Table read_file(const std::string& path, char delim = ',') {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("csv: cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  auto records = parse(ss.str(), delim);
  Table t;
  if (records.empty()) throw Error("csv: empty file (no header row): " + path);
  t.header = records.front();
  t.rows.assign(records.begin() + 1, records.end());
  return t;
}

inline std::string quote_field(std::string_view field, char delim = ',') {
  bool needs = false;
  for (char c : field)
    if (c == delim || c == '"' || c == '\n' || c == '\r') { needs = true; break; }
  if (!needs) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += "\"\"";
    else out += c;
  }
  out += '"';
  return out;
}

inline std::string format_row(const std::vector<std::string>& fields, char delim = ',') {
  std::string line;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) line += delim;
    line += quote_field(fields[i], delim);
  }
  line += '\n';
  return line;
}

inline void write_file(const std::string& path, const std::vector<std::string>& header,
                       const std::vector<std::vector<std::string>>& rows,
                       char delim = ',') {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("csv: cannot write file: " + path);
  out << format_row(header, delim);
  for (const auto& r : rows) out << format_row(r, delim);
  if (!out) throw Error("csv: write failed: " + path);
}

}  // namespace reintel::csv
