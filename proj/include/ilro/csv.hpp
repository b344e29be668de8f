#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace ilro {

// Shortest decimal string that round-trips to the same double.
std::string format_double(double v);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  // Column index for name; throws ConfigError if absent.
  int column(std::string_view name) const;
  // Parses rows[row][col] as double; throws ConfigError on empty/bad cells.
  double number(size_t row, int col) const;
  bool cell_empty(size_t row, int col) const;
};

void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows);
CsvTable read_csv(const std::filesystem::path& path);

}  // namespace ilro
