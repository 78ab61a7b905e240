#include "rescon/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

namespace rescon::svg {
namespace {

constexpr double kWidth = 800.0, kHeight = 500.0;
constexpr double kLeft = 70.0, kRight = 170.0, kTop = 40.0, kBottom = 50.0;

const char* const kColors[] = {"#1f77b4", "#d62728", "#2ca02c",
                               "#9467bd", "#ff7f0e", "#8c564b"};

std::string fmt(double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

void write_line_chart(std::ostream& out, const std::string& title,
                      const std::string& x_label, const std::string& y_label,
                      const std::vector<Series>& series, bool log_y) {
  // Collect plottable points (log transform applied here).
  std::vector<std::vector<std::pair<double, double>>> pts(series.size());
  double xmin = 0, xmax = 1, ymin = 0, ymax = 1;
  bool any = false;
  for (std::size_t s = 0; s < series.size(); ++s) {
    for (const auto& [x, y] : series[s].points) {
      if (!std::isfinite(x) || !std::isfinite(y)) continue;
      if (log_y && !(y > 0.0)) continue;
      const double yy = log_y ? std::log10(y) : y;
      if (!std::isfinite(yy)) continue;
      if (!any) {
        xmin = xmax = x;
        ymin = ymax = yy;
        any = true;
      } else {
        xmin = std::min(xmin, x);
        xmax = std::max(xmax, x);
        ymin = std::min(ymin, yy);
        ymax = std::max(ymax, yy);
      }
      pts[s].emplace_back(x, yy);
    }
  }
  if (xmax - xmin < 1e-12) xmax = xmin + 1.0;
  if (ymax - ymin < 1e-12) ymax = ymin + 1.0;

  const double pw = kWidth - kLeft - kRight;
  const double ph = kHeight - kTop - kBottom;
  auto px = [&](double x) { return kLeft + (x - xmin) / (xmax - xmin) * pw; };
  auto py = [&](double y) {
    return kTop + ph - (y - ymin) / (ymax - ymin) * ph;
  };

  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fmt(kWidth)
      << "\" height=\"" << fmt(kHeight) << "\" viewBox=\"0 0 " << fmt(kWidth)
      << " " << fmt(kHeight) << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << fmt(kLeft + pw / 2) << "\" y=\"24\" "
      << "text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"16\">"
      << escape(title) << "</text>\n";

  // Axes box.
  out << "<rect x=\"" << fmt(kLeft) << "\" y=\"" << fmt(kTop) << "\" width=\""
      << fmt(pw) << "\" height=\"" << fmt(ph)
      << "\" fill=\"none\" stroke=\"black\"/>\n";

  // Ticks and grid (5 intervals each way).
  for (int i = 0; i <= 5; ++i) {
    const double fx = xmin + (xmax - xmin) * i / 5.0;
    const double fy = ymin + (ymax - ymin) * i / 5.0;
    const double gx = px(fx), gy = py(fy);
    out << "<line x1=\"" << fmt(gx) << "\" y1=\"" << fmt(kTop + ph)
        << "\" x2=\"" << fmt(gx) << "\" y2=\"" << fmt(kTop + ph + 5)
        << "\" stroke=\"black\"/>\n";
    out << "<text x=\"" << fmt(gx) << "\" y=\"" << fmt(kTop + ph + 18)
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
           "font-size=\"11\">"
        << fmt(fx) << "</text>\n";
    out << "<line x1=\"" << fmt(kLeft - 5) << "\" y1=\"" << fmt(gy)
        << "\" x2=\"" << fmt(kLeft) << "\" y2=\"" << fmt(gy)
        << "\" stroke=\"black\"/>\n";
    out << "<text x=\"" << fmt(kLeft - 8) << "\" y=\"" << fmt(gy + 4)
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" "
           "font-size=\"11\">"
        << (log_y ? "1e" + fmt(fy) : fmt(fy)) << "</text>\n";
  }

  out << "<text x=\"" << fmt(kLeft + pw / 2) << "\" y=\""
      << fmt(kHeight - 10)
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
         "font-size=\"13\">"
      << escape(x_label) << "</text>\n";
  out << "<text x=\"16\" y=\"" << fmt(kTop + ph / 2)
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
         "font-size=\"13\" transform=\"rotate(-90 16 "
      << fmt(kTop + ph / 2) << ")\">" << escape(y_label) << "</text>\n";

  for (std::size_t s = 0; s < series.size(); ++s) {
    const char* color = kColors[s % (sizeof(kColors) / sizeof(kColors[0]))];
    if (!pts[s].empty()) {
      out << "<polyline fill=\"none\" stroke=\"" << color
          << "\" stroke-width=\"1.5\" points=\"";
      for (std::size_t k = 0; k < pts[s].size(); ++k) {
        if (k) out << ' ';
        out << fmt(px(pts[s][k].first)) << ',' << fmt(py(pts[s][k].second));
      }
      out << "\"/>\n";
    }
    const double ly = kTop + 16.0 + 18.0 * static_cast<double>(s);
    out << "<line x1=\"" << fmt(kWidth - kRight + 12) << "\" y1=\"" << fmt(ly)
        << "\" x2=\"" << fmt(kWidth - kRight + 34) << "\" y2=\"" << fmt(ly)
        << "\" stroke=\"" << color << "\" stroke-width=\"1.5\"/>\n";
    out << "<text x=\"" << fmt(kWidth - kRight + 40) << "\" y=\""
        << fmt(ly + 4)
        << "\" font-family=\"sans-serif\" font-size=\"12\">"
        << escape(series[s].name) << "</text>\n";
  }
  out << "</svg>\n";
}

}  // namespace rescon::svg
