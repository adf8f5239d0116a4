#pragma once

#include <optional>
#include <string>
#include <vector>

// Minimal CSV support: numeric tables with a header row.  Empty cells
// and the tokens NA / NaN / nan (case-insensitive) are missing values.

namespace betashrink::csv {

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::optional<double>>> rows;

  std::size_t column(const std::string& name) const;  // throws DataError
};

Table read_file(const std::string& path);
Table parse(std::istream& is, const std::string& origin);

// Full-precision formatting used by every CSV writer so that identical
// runs produce byte-identical files.
std::string format_full(double v);

}  // namespace betashrink::csv
