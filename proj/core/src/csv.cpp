#include "betashrink/csv.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <istream>
#include <sstream>

#include "betashrink/errors.hpp"

namespace betashrink::csv {

namespace {

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += ch;
    }
  }
  out.push_back(trim(cur));
  return out;
}

bool is_missing(const std::string& cell) {
  if (cell.empty()) return true;
  std::string low;
  for (char c : cell) low += static_cast<char>(std::tolower(c));
  return low == "na" || low == "nan" || low == "n/a";
}

}  // namespace

std::size_t Table::column(const std::string& name) const {
  auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end())
    throw DataError("csv: column '" + name + "' not found");
  return static_cast<std::size_t>(it - header.begin());
}

Table parse(std::istream& is, const std::string& origin) {
  Table t;
  std::string line;
  if (!std::getline(is, line))
    throw DataError("csv: " + origin + " is empty");
  t.header = split_line(line);
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto cells = split_line(line);
    if (cells.size() != t.header.size())
      throw DataError("csv: " + origin + " line " + std::to_string(lineno) +
                      " has " + std::to_string(cells.size()) +
                      " fields, expected " + std::to_string(t.header.size()));
    std::vector<std::optional<double>> row;
    row.reserve(cells.size());
    for (std::size_t j = 0; j < cells.size(); ++j) {
      if (is_missing(cells[j])) {
        row.emplace_back(std::nullopt);
        continue;
      }
      char* end = nullptr;
      const double v = std::strtod(cells[j].c_str(), &end);
      if (end == cells[j].c_str() || *end != '\0')
        throw DataError("csv: " + origin + " line " + std::to_string(lineno) +
                        ", column '" + t.header[j] + "': cannot parse '" +
                        cells[j] + "' as a number");
      row.emplace_back(v);
    }
    t.rows.push_back(std::move(row));
  }
  return t;
}

Table read_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw DataError("csv: cannot open file " + path);
  return parse(f, path);
}

std::string format_full(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace betashrink::csv
