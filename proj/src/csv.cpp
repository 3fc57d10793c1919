#include "exobench/csv.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "exobench/error.hpp"

namespace exobench {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidInput: return "invalid-input";
    case ErrorKind::Configuration: return "configuration";
    case ErrorKind::Validation: return "validation";
    case ErrorKind::Singular: return "singular";
    case ErrorKind::IncompleteTraining: return "incomplete-training";
    case ErrorKind::InsufficientData: return "insufficient-data";
    case ErrorKind::DataQuality: return "data-quality";
    case ErrorKind::Airborne: return "airborne";
    case ErrorKind::OutOfOrder: return "out-of-order";
    case ErrorKind::IncompleteResponse: return "incomplete-response";
    case ErrorKind::Parse: return "parse";
    case ErrorKind::Io: return "io";
  }
  return "unknown";
}

namespace csv {
namespace {

std::vector<std::string> split(std::string_view line) {
  std::vector<std::string> cells;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    auto cell = line.substr(start, comma == std::string_view::npos ? line.npos : comma - start);
    while (!cell.empty() && (cell.front() == ' ' || cell.front() == '\t')) cell.remove_prefix(1);
    while (!cell.empty() && (cell.back() == ' ' || cell.back() == '\t' || cell.back() == '\r'))
      cell.remove_suffix(1);
    cells.emplace_back(cell);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return cells;
}

}  // namespace

std::size_t Table::column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return i;
  throw Error(ErrorKind::Validation, "missing CSV column '" + name + "'");
}

double Table::number(std::size_t row, std::size_t col) const {
  const std::string& cell = rows.at(row).at(col);
  double v = 0.0;
  const auto* first = cell.data();
  const auto* last = cell.data() + cell.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc{} || ptr != last || cell.empty())
    throw Error(ErrorKind::Parse, "line " + std::to_string(source_line.at(row)) +
                                      ": expected a number, got '" + cell + "'");
  return v;
}

long Table::integer(std::size_t row, std::size_t col) const {
  const std::string& cell = rows.at(row).at(col);
  long v = 0;
  const auto* last = cell.data() + cell.size();
  auto [ptr, ec] = std::from_chars(cell.data(), last, v);
  if (ec != std::errc{} || ptr != last || cell.empty())
    throw Error(ErrorKind::Parse, "line " + std::to_string(source_line.at(row)) +
                                      ": expected an integer, got '" + cell + "'");
  return v;
}

Table parse(const std::string& text, const std::string& origin) {
  Table table;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r" || line.front() == '#') continue;
    auto cells = split(line);
    if (!have_header) {
      table.header = std::move(cells);
      have_header = true;
      continue;
    }
    if (cells.size() != table.header.size())
      throw Error(ErrorKind::Parse, origin + ": line " + std::to_string(lineno) + ": expected " +
                                        std::to_string(table.header.size()) + " fields, got " +
                                        std::to_string(cells.size()));
    table.rows.push_back(std::move(cells));
    table.source_line.push_back(lineno);
  }
  if (!have_header) throw Error(ErrorKind::Parse, origin + ": empty CSV");
  return table;
}

Table read(const std::filesystem::path& path) { return parse(read_text(path), path.string()); }

std::vector<double> read_column(const std::filesystem::path& path) {
  const Table t = read(path);
  std::size_t col = 0;
  for (std::size_t i = 0; i < t.header.size(); ++i)
    if (t.header[i] == "value") col = i;
  std::vector<double> out;
  out.reserve(t.rows.size());
  for (std::size_t r = 0; r < t.rows.size(); ++r) out.push_back(t.number(r, col));
  return out;
}

std::string format_number(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  out << text;
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace csv
}  // namespace exobench
