#include "ilro/csv.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "ilro/errors.hpp"

namespace ilro {

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc{}) throw std::runtime_error("format_double failed");
  return std::string(buf, ptr);
}

int CsvTable::column(std::string_view name) const {
  for (size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return static_cast<int>(i);
  throw ConfigError("csv: missing column '" + std::string(name) + "'");
}

double CsvTable::number(size_t row, int col) const {
  const std::string& cell = rows.at(row).at(static_cast<size_t>(col));
  if (cell.empty())
    throw ConfigError("csv: empty cell in column '" + header.at(static_cast<size_t>(col)) + "'");
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (ec != std::errc{} || ptr != cell.data() + cell.size())
    throw ConfigError("csv: bad number '" + cell + "'");
  return v;
}

bool CsvTable::cell_empty(size_t row, int col) const {
  return rows.at(row).at(static_cast<size_t>(col)).empty();
}

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  for (char c : line) {
    if (c == ',') {
      cells.push_back(std::move(cell));
      cell.clear();
    } else if (c != '\r') {
      cell.push_back(c);
    }
  }
  cells.push_back(std::move(cell));
  return cells;
}

}  // namespace

void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  auto emit = [&](const std::vector<std::string>& cells) {
    for (size_t i = 0; i < cells.size(); ++i) {
      if (i) out << ',';
      out << cells[i];
    }
    out << '\n';
  };
  emit(header);
  for (const auto& row : rows) {
    if (row.size() != header.size())
      throw std::runtime_error("csv row width mismatch writing '" + path.string() + "'");
    emit(row);
  }
  if (!out.flush()) throw std::runtime_error("write failed for '" + path.string() + "'");
}

CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw PrereqError("cannot open '" + path.string() + "'");
  CsvTable table;
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("csv '" + path.string() + "' is empty");
  table.header = split_line(line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto cells = split_line(line);
    if (cells.size() != table.header.size())
      throw ConfigError("csv '" + path.string() + "' has a ragged row");
    table.rows.push_back(std::move(cells));
  }
  return table;
}

}  // namespace ilro
