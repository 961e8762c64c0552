#pragma once

#include <string>
#include <utility>
#include <vector>

namespace htclt {

/// Minimal SVG 1.1 line/bar chart with linear axes. Output bytes depend only on
/// the data, so files hash reproducibly.
class SvgPlot {
 public:
  SvgPlot(std::string title, std::string xlabel, std::string ylabel);

  void add_line(std::string label, std::vector<std::pair<double, double>> points,
                std::string color);
  /// Bars given by their left edges, a common width and heights.
  void add_bars(std::vector<double> left, double width, std::vector<double> height,
                std::string color);

  std::string render(int width = 640, int height = 420) const;

 private:
  struct Line {
    std::string label, color;
    std::vector<std::pair<double, double>> points;
  };
  struct Bars {
    std::vector<double> left, height;
    double width;
    std::string color;
  };
  std::string title_, xlabel_, ylabel_;
  std::vector<Line> lines_;
  std::vector<Bars> bars_;
};

}  // namespace htclt
