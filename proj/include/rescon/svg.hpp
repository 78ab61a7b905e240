#pragma once

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace rescon::svg {

struct Series {
  std::string name;
  std::vector<std::pair<double, double>> points;  // (x, y)
};

// Standalone SVG line chart with axes, ticks, and a legend. Byte-for-byte
// deterministic for identical input. With log_y the y axis shows log10 of
// the values and non-positive values are dropped.
void write_line_chart(std::ostream& out, const std::string& title,
                      const std::string& x_label, const std::string& y_label,
                      const std::vector<Series>& series, bool log_y);

}  // namespace rescon::svg
