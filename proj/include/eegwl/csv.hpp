#pragma once

#include <string>
#include <vector>

namespace eegwl {

// Plain comma-separated values; no quoting (none of the toolkit's fields
// contain commas).
std::vector<std::string> split_csv_line(const std::string& line);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  int column(const std::string& name) const;              // -1 if absent
  int column_ci(const std::string& name) const;           // case-insensitive
};

CsvTable read_csv(const std::string& path);

std::string format_double(double v);  // round-trip-exact (max_digits10)

}  // namespace eegwl
