#pragma once

#include <initializer_list>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace donorspin::csv {

/// %.12g, the dialect used by every CSV the library writes.
std::string format_number(double value);

/// Writes one comma-separated row terminated by '\n'.
void write_row(std::ostream& out, std::initializer_list<std::string_view> cells);
void write_row(std::ostream& out, const std::vector<std::string>& cells);

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Index of a column, or -1.
  int column(std::string_view name) const;
};

/// Reads a header + rows table. Blank lines are skipped. Throws ConfigError on
/// ragged rows.
Table read(std::istream& in);

}  // namespace donorspin::csv
