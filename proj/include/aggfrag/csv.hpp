// Minimal CSV support: a writer that prints doubles with shortest
// round-trip formatting, and a reader good enough for our own output.
#pragma once

#include <charconv>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include "aggfrag/errors.hpp"

namespace aggfrag {

inline std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  AGGFRAG_CHECK(res.ec == std::errc(), "format_double: to_chars failed");
  return std::string(buf, res.ptr);
}

class CsvWriter {
 public:
  explicit CsvWriter(const std::string& path) : out_(path) {
    if (!out_) throw ConfigError("cannot open " + path + " for writing");
    path_ = path;
  }

  void header(const std::vector<std::string>& names) { row_strings(names); }

  void row(const std::vector<double>& values) {
    bool first = true;
    for (const double v : values) {
      if (!first) out_ << ',';
      out_ << format_double(v);
      first = false;
    }
    out_ << '\n';
  }

  void row_strings(const std::vector<std::string>& cells) {
    bool first = true;
    for (const auto& c : cells) {
      if (!first) out_ << ',';
      out_ << c;
      first = false;
    }
    out_ << '\n';
  }

  void close() {
    out_.close();
    if (!out_) throw ConfigError("write failed for " + path_);
  }

 private:
  std::ofstream out_;
  std::string path_;
};

struct CsvTable {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> data;  // data[c][r], column major

  int column_index(const std::string& name) const {
    for (std::size_t i = 0; i < columns.size(); ++i)
      if (columns[i] == name) return static_cast<int>(i);
    return -1;
  }
};

inline CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path);
  CsvTable table;
  std::string line;
  if (!std::getline(in, line)) throw ConfigError(path + ": empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  std::stringstream head(line);
  std::string cell;
  while (std::getline(head, cell, ',')) table.columns.push_back(cell);
  table.data.resize(table.columns.size());
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::size_t c = 0;
    while (std::getline(ss, cell, ',')) {
      if (c >= table.columns.size())
        throw ConfigError(path + ": row " + std::to_string(rows + 2) + " has extra cells");
      double v = 0.0;
      const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (res.ec != std::errc() || res.ptr != cell.data() + cell.size())
        throw ConfigError(path + ": bad number '" + cell + "' in row " +
                          std::to_string(rows + 2));
      table.data[c].push_back(v);
      ++c;
    }
    if (c != table.columns.size())
      throw ConfigError(path + ": row " + std::to_string(rows + 2) + " is short");
    ++rows;
  }
  return table;
}

}  // namespace aggfrag
