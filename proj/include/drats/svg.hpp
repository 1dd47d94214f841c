#pragma once

// Minimal SVG line charts with shaded interval bands.

#include <algorithm>
#include <cmath>
#include <iterator>
#include <optional>
#include <cstddef>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "drats/csv.hpp"
#include "drats/error.hpp"
#include "drats/metrics.hpp"

namespace drats {

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
  std::vector<Interval> band;  // empty, or one interval per point
};

struct ChartOptions {
  std::string title;
  std::string x_label = "env steps";
  std::string y_label = "mean success";
  int width = 720;
  int height = 440;
  std::optional<double> y_min = 0.0;
  std::optional<double> y_max = 1.0;
};

namespace detail {

inline std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

inline std::string fixed(double v, int digits = 2) {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(digits);
  os << v;
  return os.str();
}

inline std::string tick_label(double v) {
  if (v != 0.0 && (std::abs(v) >= 1e4)) {
    std::ostringstream os;
    os.precision(3);
    os << v / 1000.0 << 'k';
    return os.str();
  }
  std::ostringstream os;
  os.precision(3);
  os << v;
  return os.str();
}

}  // namespace detail

inline constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                           "#9467bd", "#8c564b", "#e377c2", "#17becf"};

inline std::string render_svg(const std::vector<Series>& series, const ChartOptions& opt = {}) {
  require(!series.empty(), "render_svg: no series");
  double x0 = 1e300, x1 = -1e300, y0 = 1e300, y1 = -1e300;
  for (const auto& s : series) {
    require(s.x.size() == s.y.size(), "render_svg: x/y length mismatch in " + s.label);
    require(s.band.empty() || s.band.size() == s.x.size(), "render_svg: band length mismatch in " + s.label);
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      x0 = std::min(x0, s.x[i]);
      x1 = std::max(x1, s.x[i]);
      y0 = std::min(y0, s.band.empty() ? s.y[i] : s.band[i].low);
      y1 = std::max(y1, s.band.empty() ? s.y[i] : s.band[i].high);
    }
  }
  require(x0 <= x1, "render_svg: all series empty");
  if (opt.y_min) y0 = std::min(y0, *opt.y_min);
  if (opt.y_max) y1 = std::max(y1, *opt.y_max);
  if (x1 == x0) x1 = x0 + 1.0;
  if (y1 == y0) y1 = y0 + 1.0;

  const double left = 70, right = 170, top = 40, bottom = 55;
  const double pw = opt.width - left - right, ph = opt.height - top - bottom;
  auto px = [&](double x) { return left + (x - x0) / (x1 - x0) * pw; };
  auto py = [&](double y) { return top + (1.0 - (y - y0) / (y1 - y0)) * ph; };
  using detail::fixed;

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << opt.width << "\" height=\"" << opt.height
     << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  if (!opt.title.empty())
    os << "<text x=\"" << fixed(left + pw / 2) << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">"
       << detail::xml_escape(opt.title) << "</text>\n";
  for (int t = 0; t <= 5; ++t) {
    const double xv = x0 + (x1 - x0) * t / 5.0, yv = y0 + (y1 - y0) * t / 5.0;
    os << "<line x1=\"" << fixed(px(xv)) << "\" y1=\"" << fixed(top) << "\" x2=\"" << fixed(px(xv)) << "\" y2=\""
       << fixed(top + ph) << "\" stroke=\"#eee\"/>\n";
    os << "<line x1=\"" << fixed(left) << "\" y1=\"" << fixed(py(yv)) << "\" x2=\"" << fixed(left + pw) << "\" y2=\""
       << fixed(py(yv)) << "\" stroke=\"#eee\"/>\n";
    os << "<text x=\"" << fixed(px(xv)) << "\" y=\"" << fixed(top + ph + 16) << "\" text-anchor=\"middle\">"
       << detail::tick_label(xv) << "</text>\n";
    os << "<text x=\"" << fixed(left - 6) << "\" y=\"" << fixed(py(yv) + 4) << "\" text-anchor=\"end\">"
       << detail::tick_label(yv) << "</text>\n";
  }
  os << "<rect x=\"" << fixed(left) << "\" y=\"" << fixed(top) << "\" width=\"" << fixed(pw) << "\" height=\""
     << fixed(ph) << "\" fill=\"none\" stroke=\"#333\"/>\n";
  os << "<text x=\"" << fixed(left + pw / 2) << "\" y=\"" << opt.height - 12 << "\" text-anchor=\"middle\">"
     << detail::xml_escape(opt.x_label) << "</text>\n";
  os << "<text transform=\"translate(18," << fixed(top + ph / 2) << ") rotate(-90)\" text-anchor=\"middle\">"
     << detail::xml_escape(opt.y_label) << "</text>\n";

  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& s = series[k];
    if (s.x.empty()) continue;
    const char* color = kPalette[k % std::size(kPalette)];
    if (!s.band.empty()) {
      os << "<polygon fill=\"" << color << "\" fill-opacity=\"0.18\" stroke=\"none\" points=\"";
      for (std::size_t i = 0; i < s.x.size(); ++i) os << fixed(px(s.x[i])) << ',' << fixed(py(s.band[i].high)) << ' ';
      for (std::size_t i = s.x.size(); i-- > 0;) os << fixed(px(s.x[i])) << ',' << fixed(py(s.band[i].low)) << ' ';
      os << "\"/>\n";
    }
    os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
    for (std::size_t i = 0; i < s.x.size(); ++i) os << fixed(px(s.x[i])) << ',' << fixed(py(s.y[i])) << ' ';
    os << "\"/>\n";
    const double ly = top + 14 + 18.0 * static_cast<double>(k);
    os << "<line x1=\"" << fixed(left + pw + 12) << "\" y1=\"" << fixed(ly - 4) << "\" x2=\"" << fixed(left + pw + 32)
       << "\" y2=\"" << fixed(ly - 4) << "\" stroke=\"" << color << "\" stroke-width=\"3\"/>\n";
    os << "<text x=\"" << fixed(left + pw + 38) << "\" y=\"" << fixed(ly) << "\">" << detail::xml_escape(s.label)
       << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

inline void write_svg(const std::string& path, const std::vector<Series>& series, const ChartOptions& opt = {}) {
  std::ofstream os(path, std::ios::binary);
  require(static_cast<bool>(os), "cannot write " + path);
  os << render_svg(series, opt);
}

}  // namespace drats
