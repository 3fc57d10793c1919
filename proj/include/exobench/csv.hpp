#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

namespace exobench::csv {

/// Rows of a comma-separated file with a header line. Cells are kept as text;
/// `source_line` maps each row back to its 1-based line in the file.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> source_line;

  /// Throws Validation if the column is absent.
  std::size_t column(const std::string& name) const;
  double number(std::size_t row, std::size_t col) const;
  long integer(std::size_t row, std::size_t col) const;
};

Table parse(const std::string& text, const std::string& origin = "<memory>");
Table read(const std::filesystem::path& path);

/// Reads a single numeric column (header `value` or first column).
std::vector<double> read_column(const std::filesystem::path& path);

std::string format_number(double v);

void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

}  // namespace exobench::csv
