// Copyright 2026 The hetembed Authors
// SPDX-License-Identifier: Apache-2.0

// Minimal comma-separated reader/writer used by the loaders and reports.
// No quoting: ids and cells must not contain commas.

#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

namespace hetembed::csv {

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

/// Reads a file with a header row; every row must have the header's width.
Table read(const std::filesystem::path& path);

/// Parses one numeric cell; `row`/`column` are 1-based file positions used
/// in the error message. Rejects non-numeric and non-finite cells.
double parse_number(const std::string& cell, const std::filesystem::path& path, std::size_t row,
                    std::size_t column);

/// Shortest round-trippable decimal form.
std::string format_number(double v);

class Writer {
 public:
  Writer(const std::filesystem::path& path, const std::vector<std::string>& header);
  void row(const std::vector<std::string>& cells);

 private:
  std::filesystem::path path_;
  std::ofstream out_;
};

}  // namespace hetembed::csv
