#include "plots.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

namespace newsrisk::plots {

namespace {

constexpr double kWidth = 640, kHeight = 420;
constexpr double kLeft = 70, kRight = 20, kTop = 40, kBottom = 60;
const char* const kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd"};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string tick_label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '<') out += "&lt;";
    else if (c == '>') out += "&gt;";
    else if (c == '&') out += "&amp;";
    else out += c;
  }
  return out;
}

struct Frame {
  double x0, x1, y0, y1;
  double px(double x) const { return kLeft + (x - x0) / (x1 - x0) * (kWidth - kLeft - kRight); }
  double py(double y) const { return kHeight - kBottom - (y - y0) / (y1 - y0) * (kHeight - kTop - kBottom); }
};

void pad_range(double& lo, double& hi) {
  if (!(hi > lo)) {
    lo -= 0.5;
    hi += 0.5;
  }
}

std::string open_svg(const Axes& axes, const Frame& f, bool x_ticks = true) {
  std::string s = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(kWidth) + "\" height=\"" + num(kHeight) +
                  "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  s += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s += "<text x=\"" + num(kWidth / 2) + "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" + escape(axes.title) +
       "</text>\n";
  s += "<line x1=\"" + num(kLeft) + "\" y1=\"" + num(f.py(f.y0)) + "\" x2=\"" + num(kWidth - kRight) + "\" y2=\"" +
       num(f.py(f.y0)) + "\" stroke=\"black\"/>\n";
  s += "<line x1=\"" + num(kLeft) + "\" y1=\"" + num(kTop) + "\" x2=\"" + num(kLeft) + "\" y2=\"" +
       num(kHeight - kBottom) + "\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 5; ++i) {
    double y = f.y0 + (f.y1 - f.y0) * i / 5.0;
    s += "<text x=\"" + num(kLeft - 6) + "\" y=\"" + num(f.py(y) + 4) + "\" text-anchor=\"end\">" + tick_label(y) +
         "</text>\n";
    if (x_ticks) {
      double x = f.x0 + (f.x1 - f.x0) * i / 5.0;
      s += "<text x=\"" + num(f.px(x)) + "\" y=\"" + num(kHeight - kBottom + 18) + "\" text-anchor=\"middle\">" +
           tick_label(x) + "</text>\n";
    }
  }
  s += "<text x=\"" + num((kLeft + kWidth - kRight) / 2) + "\" y=\"" + num(kHeight - 15) + "\" text-anchor=\"middle\">" +
       escape(axes.x_label) + "</text>\n";
  s += "<text transform=\"translate(18," + num((kTop + kHeight - kBottom) / 2) +
       ") rotate(-90)\" text-anchor=\"middle\">" + escape(axes.y_label) + "</text>\n";
  return s;
}

}  // namespace

std::string line_chart(const Axes& axes, const std::vector<Series>& series) {
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  for (const auto& s : series)
    for (const auto& [x, y] : s.points) {
      x0 = std::min(x0, x);
      x1 = std::max(x1, x);
      y0 = std::min(y0, y);
      y1 = std::max(y1, y);
    }
  if (!std::isfinite(x0)) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  pad_range(x0, x1);
  pad_range(y0, y1);
  Frame f{x0, x1, y0, y1};
  std::string svg = open_svg(axes, f);
  for (std::size_t i = 0; i < series.size(); ++i) {
    const auto& s = series[i];
    const char* color = kColors[i % 5];
    std::string pts;
    for (const auto& [x, y] : s.points) pts += num(f.px(x)) + "," + num(f.py(y)) + " ";
    if (!pts.empty()) pts.pop_back();
    svg += "<polyline fill=\"none\" stroke=\"" + std::string(color) + "\" stroke-width=\"2\"" +
           (s.dashed ? " stroke-dasharray=\"6,4\"" : "") + " points=\"" + pts + "\"/>\n";
    double ly = kTop + 8 + 16.0 * static_cast<double>(i);
    svg += "<line x1=\"" + num(kLeft + 12) + "\" y1=\"" + num(ly) + "\" x2=\"" + num(kLeft + 32) + "\" y2=\"" + num(ly) +
           "\" stroke=\"" + color + "\" stroke-width=\"2\"/>\n";
    svg += "<text x=\"" + num(kLeft + 38) + "\" y=\"" + num(ly + 4) + "\">" + escape(s.name) + "</text>\n";
  }
  return svg + "</svg>\n";
}

std::string bar_chart(const Axes& axes, const std::vector<std::pair<std::string, double>>& bars) {
  double hi = 0.0;
  for (const auto& b : bars) hi = std::max(hi, b.second);
  Frame f{0.0, static_cast<double>(std::max<std::size_t>(bars.size(), 1)), 0.0, hi > 0 ? std::min(1.0, hi * 1.15) : 1.0};
  if (hi > 1.0) f.y1 = hi * 1.15;
  std::string svg = open_svg(axes, f, false);
  for (std::size_t i = 0; i < bars.size(); ++i) {
    double x = f.px(static_cast<double>(i) + 0.2);
    double w = f.px(static_cast<double>(i) + 0.8) - x;
    double top = f.py(bars[i].second);
    svg += "<rect x=\"" + num(x) + "\" y=\"" + num(top) + "\" width=\"" + num(w) + "\" height=\"" +
           num(f.py(0.0) - top) + "\" fill=\"" + kColors[i % 5] + "\"/>\n";
    svg += "<text x=\"" + num(x + w / 2) + "\" y=\"" + num(top - 5) + "\" text-anchor=\"middle\">" +
           num(bars[i].second) + "</text>\n";
    svg += "<text x=\"" + num(x + w / 2) + "\" y=\"" + num(kHeight - kBottom + 18) + "\" text-anchor=\"middle\">" +
           escape(bars[i].first) + "</text>\n";
  }
  return svg + "</svg>\n";
}

std::string histogram_chart(const Axes& axes, const Histogram& histogram) {
  std::size_t peak = 1;
  for (auto c : histogram.counts) peak = std::max(peak, c);
  Frame f{histogram.edges.front(), histogram.edges.back(), 0.0, static_cast<double>(peak)};
  pad_range(f.x0, f.x1);
  std::string svg = open_svg(axes, f);
  for (std::size_t i = 0; i < histogram.counts.size(); ++i) {
    double x = f.px(histogram.edges[i]);
    double w = f.px(histogram.edges[i + 1]) - x;
    double top = f.py(static_cast<double>(histogram.counts[i]));
    svg += "<rect x=\"" + num(x) + "\" y=\"" + num(top) + "\" width=\"" + num(w) + "\" height=\"" +
           num(f.py(0.0) - top) + "\" fill=\"#1f77b4\" stroke=\"white\"/>\n";
  }
  return svg + "</svg>\n";
}

}  // namespace newsrisk::plots
