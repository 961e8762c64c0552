#include "htclt/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

namespace htclt {

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string tick_label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", std::abs(v) < 1e-12 ? 0.0 : v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

SvgPlot::SvgPlot(std::string title, std::string xlabel, std::string ylabel)
    : title_(std::move(title)), xlabel_(std::move(xlabel)), ylabel_(std::move(ylabel)) {}

void SvgPlot::add_line(std::string label, std::vector<std::pair<double, double>> points,
                       std::string color) {
  lines_.push_back({std::move(label), std::move(color), std::move(points)});
}

void SvgPlot::add_bars(std::vector<double> left, double width, std::vector<double> height,
                       std::string color) {
  bars_.push_back({std::move(left), std::move(height), width, std::move(color)});
}

std::string SvgPlot::render(int width, int height) const {
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = 0.0, y1 = -x0;
  for (const Line& l : lines_)
    for (const auto& [x, y] : l.points) {
      if (!std::isfinite(x) || !std::isfinite(y)) continue;
      x0 = std::min(x0, x);
      x1 = std::max(x1, x);
      y0 = std::min(y0, y);
      y1 = std::max(y1, y);
    }
  for (const Bars& b : bars_)
    for (std::size_t i = 0; i < b.left.size(); ++i) {
      x0 = std::min(x0, b.left[i]);
      x1 = std::max(x1, b.left[i] + b.width);
      y1 = std::max(y1, b.height[i]);
    }
  if (!std::isfinite(x0)) x0 = 0.0, x1 = 1.0;
  if (!(y1 > y0)) y1 = y0 + 1.0;
  if (!(x1 > x0)) x1 = x0 + 1.0;
  y1 += 0.05 * (y1 - y0);

  const double ml = 70, mr = 20, mt = 40, mb = 50;
  const double pw = width - ml - mr, ph = height - mt - mb;
  auto sx = [&](double x) { return ml + (x - x0) / (x1 - x0) * pw; };
  auto sy = [&](double y) { return mt + (y1 - y) / (y1 - y0) * ph; };

  std::ostringstream os;
  os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
     << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" << width
     << "\" height=\"" << height << "\" font-family=\"sans-serif\" font-size=\"12\">\n"
     << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
     << "<text x=\"" << width / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">"
     << escape(title_) << "</text>\n";

  for (const Bars& b : bars_)
    for (std::size_t i = 0; i < b.left.size(); ++i)
      os << "<rect x=\"" << fmt(sx(b.left[i])) << "\" y=\"" << fmt(sy(b.height[i]))
         << "\" width=\"" << fmt(sx(b.left[i] + b.width) - sx(b.left[i])) << "\" height=\""
         << fmt(sy(0.0) - sy(b.height[i])) << "\" fill=\"" << b.color
         << "\" fill-opacity=\"0.5\" stroke=\"none\"/>\n";

  for (const Line& l : lines_) {
    os << "<polyline fill=\"none\" stroke=\"" << l.color << "\" stroke-width=\"1.5\" points=\"";
    bool first = true;
    for (const auto& [x, y] : l.points) {
      if (!std::isfinite(x) || !std::isfinite(y)) continue;
      os << (first ? "" : " ") << fmt(sx(x)) << ',' << fmt(sy(y));
      first = false;
    }
    os << "\"/>\n";
  }

  // axes and ticks
  os << "<line x1=\"" << fmt(ml) << "\" y1=\"" << fmt(mt + ph) << "\" x2=\"" << fmt(ml + pw)
     << "\" y2=\"" << fmt(mt + ph) << "\" stroke=\"black\"/>\n"
     << "<line x1=\"" << fmt(ml) << "\" y1=\"" << fmt(mt) << "\" x2=\"" << fmt(ml)
     << "\" y2=\"" << fmt(mt + ph) << "\" stroke=\"black\"/>\n";
  for (int k = 0; k <= 5; ++k) {
    const double x = x0 + (x1 - x0) * k / 5.0;
    const double y = y0 + (y1 - y0) * k / 5.0;
    os << "<text x=\"" << fmt(sx(x)) << "\" y=\"" << fmt(mt + ph + 16)
       << "\" text-anchor=\"middle\">" << tick_label(x) << "</text>\n";
    os << "<text x=\"" << fmt(ml - 6) << "\" y=\"" << fmt(sy(y) + 4) << "\" text-anchor=\"end\">"
       << tick_label(y) << "</text>\n";
  }
  os << "<text x=\"" << fmt(ml + pw / 2) << "\" y=\"" << height - 10
     << "\" text-anchor=\"middle\">" << escape(xlabel_) << "</text>\n"
     << "<text x=\"14\" y=\"" << fmt(mt + ph / 2) << "\" text-anchor=\"middle\" transform=\"rotate(-90 14 "
     << fmt(mt + ph / 2) << ")\">" << escape(ylabel_) << "</text>\n";

  // legend
  double ly = mt + 10;
  for (const Line& l : lines_) {
    if (l.label.empty()) continue;
    os << "<line x1=\"" << fmt(ml + pw - 150) << "\" y1=\"" << fmt(ly) << "\" x2=\""
       << fmt(ml + pw - 130) << "\" y2=\"" << fmt(ly) << "\" stroke=\"" << l.color
       << "\" stroke-width=\"1.5\"/>\n"
       << "<text x=\"" << fmt(ml + pw - 125) << "\" y=\"" << fmt(ly + 4) << "\">"
       << escape(l.label) << "</text>\n";
    ly += 16;
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace htclt
