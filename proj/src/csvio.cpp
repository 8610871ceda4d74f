#include "robsur/csvio.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>

#include "robsur/errors.hpp"

namespace robsur {

namespace {

std::string trim(const std::string& s) {
  auto b = s.begin();
  auto e = s.end();
  while (b != e && std::isspace(static_cast<unsigned char>(*b))) ++b;
  while (e != b && std::isspace(static_cast<unsigned char>(*(e - 1)))) --e;
  return std::string(b, e);
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

int CsvTable::col(const std::string& name) const {
  auto it = std::find(columns.begin(), columns.end(), name);
  if (it == columns.end())
    throw ConfigError("csv: no column named '" + name + "'");
  return static_cast<int>(it - columns.begin());
}

bool CsvTable::has_col(const std::string& name) const {
  return std::find(columns.begin(), columns.end(), name) != columns.end();
}

CsvTable parse_csv(const std::string& text, const std::string& origin) {
  std::vector<std::string> lines;
  {
    std::stringstream ss(text);
    std::string line;
    while (std::getline(ss, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (!trim(line).empty()) lines.push_back(line);
    }
  }
  if (lines.empty()) throw ConfigError("csv: " + origin + " is empty");

  CsvTable t;
  t.columns = split_line(lines[0]);
  const auto ncol = t.columns.size();
  if (ncol == 0) throw ConfigError("csv: " + origin + " has an empty header");
  const auto nrow = lines.size() - 1;
  t.data.resize(static_cast<Eigen::Index>(nrow), static_cast<Eigen::Index>(ncol));
  for (std::size_t r = 0; r < nrow; ++r) {
    const auto cells = split_line(lines[r + 1]);
    if (cells.size() != ncol)
      throw ConfigError("csv: " + origin + " row " + std::to_string(r + 2) +
                        " has " + std::to_string(cells.size()) + " cells, expected " +
                        std::to_string(ncol));
    for (std::size_t c = 0; c < ncol; ++c) {
      const std::string& cell = cells[c];
      double v = 0.0;
      const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (res.ec != std::errc() || res.ptr != cell.data() + cell.size())
        throw ConfigError("csv: " + origin + " row " + std::to_string(r + 2) +
                          ", column '" + t.columns[c] + "': cannot parse '" + cell +
                          "' as a number");
      t.data(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = v;
    }
  }
  return t;
}

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("csv: cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_csv(ss.str(), path);
}

void write_csv(const std::string& path, const CsvTable& table) {
  std::ofstream out(path);
  if (!out) throw ConfigError("csv: cannot write '" + path + "'");
  for (std::size_t c = 0; c < table.columns.size(); ++c)
    out << (c ? "," : "") << table.columns[c];
  out << '\n';
  out.precision(17);
  for (Eigen::Index r = 0; r < table.data.rows(); ++r) {
    for (Eigen::Index c = 0; c < table.data.cols(); ++c)
      out << (c ? "," : "") << table.data(r, c);
    out << '\n';
  }
}

}  // namespace robsur
