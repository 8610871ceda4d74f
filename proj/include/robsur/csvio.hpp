// Minimal CSV support for numeric tables with a header row.
#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace robsur {

struct CsvTable {
  std::vector<std::string> columns;
  Eigen::MatrixXd data;  // rows x columns.size()

  // Index of a named column; throws ConfigError if absent.
  int col(const std::string& name) const;
  bool has_col(const std::string& name) const;
};

CsvTable read_csv(const std::string& path);
CsvTable parse_csv(const std::string& text, const std::string& origin = "<string>");
void write_csv(const std::string& path, const CsvTable& table);

}  // namespace robsur
