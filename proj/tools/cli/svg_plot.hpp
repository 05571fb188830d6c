#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace donorspin::cli {

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
  bool scatter = false;
};

struct Plot {
  std::string title;
  std::string x_label;
  std::string y_label;
  bool log_x = false;
  bool log_y = false;
  std::vector<Series> series;
};

/// Renders a standalone SVG document. Non-finite points, and non-positive
/// points on a log axis, are skipped.
void write_svg(std::ostream& out, const Plot& plot);

}  // namespace donorspin::cli
