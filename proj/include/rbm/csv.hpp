#pragma once

#include <cstdio>
#include <ostream>
#include <string>
#include <variant>
#include <vector>

namespace rbm::csv {

using Cell = std::variant<double, long long, std::string>;

inline std::string format(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string to_string(const Cell& c) {
  if (std::holds_alternative<double>(c)) return format(std::get<double>(c));
  if (std::holds_alternative<long long>(c)) return std::to_string(std::get<long long>(c));
  return std::get<std::string>(c);
}

// One output table: a comment line carrying the full parameter set, a header
// row, then data rows. Doubles are printed with 17 significant digits so a
// given invocation is byte-reproducible.
struct Table {
  std::string comment;
  std::vector<std::string> header;
  std::vector<std::vector<Cell>> rows;

  void add_row(std::vector<Cell> cells) { rows.push_back(std::move(cells)); }
};

inline void write_csv(std::ostream& os, const Table& t) {
  if (!t.comment.empty()) os << "# " << t.comment << "\n";
  for (std::size_t i = 0; i < t.header.size(); ++i) {
    if (i) os << ",";
    os << t.header[i];
  }
  os << "\n";
  for (const auto& row : t.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) os << ",";
      os << to_string(row[i]);
    }
    os << "\n";
  }
}

}  // namespace rbm::csv
