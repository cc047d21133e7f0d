#pragma once

#include <string>
#include <utility>
#include <vector>

#include "newsrisk/evaluation.hpp"

namespace newsrisk::plots {

struct Series {
  std::string name;
  std::vector<std::pair<double, double>> points;
  bool dashed = false;
};

struct Axes {
  std::string title;
  std::string x_label;
  std::string y_label;
};

std::string line_chart(const Axes& axes, const std::vector<Series>& series);
std::string bar_chart(const Axes& axes, const std::vector<std::pair<std::string, double>>& bars);
std::string histogram_chart(const Axes& axes, const Histogram& histogram);

}  // namespace newsrisk::plots
