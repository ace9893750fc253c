// Copyright 2026 The hetembed Authors
// SPDX-License-Identifier: Apache-2.0

#include "csv.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>

#include "hetembed/error.hpp"

namespace hetembed::csv {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    cells.push_back(trim(line.substr(start, comma - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return cells;
}

}  // namespace

Table read(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open file " + path.string());
  Table table;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    auto cells = split_line(line);
    if (table.header.empty()) {
      if (line_no == 1 && cells[0].rfind("\xEF\xBB\xBF", 0) == 0) cells[0].erase(0, 3);
      table.header = std::move(cells);
      if (table.header.size() < 2) {
        throw DataError(path.string() + ": header needs an id column and at least one value column");
      }
      continue;
    }
    if (cells.size() != table.header.size()) {
      throw DataError(path.string() + ": row " + std::to_string(line_no) + " has " +
                      std::to_string(cells.size()) + " columns, header has " +
                      std::to_string(table.header.size()));
    }
    if (cells[0].empty()) {
      throw DataError(path.string() + ": row " + std::to_string(line_no) + " has an empty id");
    }
    table.rows.push_back(std::move(cells));
  }
  if (table.header.empty()) throw DataError(path.string() + ": file is empty");
  return table;
}

double parse_number(const std::string& cell, const std::filesystem::path& path, std::size_t row,
                    std::size_t column) {
  const auto where = [&] {
    return path.string() + ": row " + std::to_string(row) + " column " + std::to_string(column);
  };
  char* end = nullptr;
  const double v = std::strtod(cell.c_str(), &end);
  if (cell.empty() || end != cell.c_str() + cell.size()) {
    throw DataError(where() + ": '" + cell + "' is not a number");
  }
  if (!std::isfinite(v)) throw DataError(where() + ": non-finite value '" + cell + "'");
  return v;
}

std::string format_number(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

Writer::Writer(const std::filesystem::path& path, const std::vector<std::string>& header)
    : path_(path), out_(path) {
  if (!out_) throw DataError("cannot write file " + path.string());
  row(header);
}

void Writer::row(const std::vector<std::string>& cells) {
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) out_ << ',';
    out_ << cells[i];
  }
  out_ << '\n';
  if (!out_) throw DataError("write failed for " + path_.string());
}

}  // namespace hetembed::csv
