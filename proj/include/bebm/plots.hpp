// Copyright 2026 The BEBM Authors - All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#ifndef BEBM_PLOTS_HPP
#define BEBM_PLOTS_HPP

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

namespace bebm::svg {

struct Series {
  std::string label;
  std::vector<double> x, y;
};

namespace detail {

inline std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

inline std::string escape(const std::string& s) {
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

inline const char* color(std::size_t i) {
  static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#17becf"};
  return palette[i % 7];
}

}  // namespace detail

inline std::string line_chart(const std::string& title, const std::string& xlabel, const std::string& ylabel,
                              const std::vector<Series>& series) {
  const double w = 640, h = 420, ml = 70, mr = 150, mt = 40, mb = 55;
  double x0 = INFINITY, x1 = -INFINITY, y0 = INFINITY, y1 = -INFINITY;
  for (const auto& s : series) {
    for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
      x0 = std::min(x0, s.x[i]);
      x1 = std::max(x1, s.x[i]);
      y0 = std::min(y0, s.y[i]);
      y1 = std::max(y1, s.y[i]);
    }
  }
  if (!(x1 >= x0)) x0 = 0, x1 = 1;
  if (!(y1 >= y0)) y0 = 0, y1 = 1;
  if (x1 == x0) x1 = x0 + 1;
  if (y1 == y0) y1 = y0 + 1;
  auto px = [&](double x) { return ml + (x - x0) / (x1 - x0) * (w - ml - mr); };
  auto py = [&](double y) { return h - mb - (y - y0) / (y1 - y0) * (h - mt - mb); };

  std::string out = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + detail::num(w) + "\" height=\"" +
                    detail::num(h) + "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  out += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out += "<text x=\"" + detail::num(w / 2) + "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" +
         detail::escape(title) + "</text>\n";
  out += "<line x1=\"" + detail::num(ml) + "\" y1=\"" + detail::num(h - mb) + "\" x2=\"" + detail::num(w - mr) +
         "\" y2=\"" + detail::num(h - mb) + "\" stroke=\"black\"/>\n";
  out += "<line x1=\"" + detail::num(ml) + "\" y1=\"" + detail::num(mt) + "\" x2=\"" + detail::num(ml) + "\" y2=\"" +
         detail::num(h - mb) + "\" stroke=\"black\"/>\n";
  for (int t = 0; t <= 4; ++t) {
    const double xv = x0 + (x1 - x0) * t / 4.0, yv = y0 + (y1 - y0) * t / 4.0;
    out += "<text x=\"" + detail::num(px(xv)) + "\" y=\"" + detail::num(h - mb + 16) + "\" text-anchor=\"middle\">" +
           detail::num(xv) + "</text>\n";
    out += "<text x=\"" + detail::num(ml - 6) + "\" y=\"" + detail::num(py(yv) + 4) + "\" text-anchor=\"end\">" +
           detail::num(yv) + "</text>\n";
  }
  out += "<text x=\"" + detail::num((ml + w - mr) / 2) + "\" y=\"" + detail::num(h - 12) + "\" text-anchor=\"middle\">" +
         detail::escape(xlabel) + "</text>\n";
  out += "<text transform=\"translate(16," + detail::num((mt + h - mb) / 2) + ") rotate(-90)\" text-anchor=\"middle\">" +
         detail::escape(ylabel) + "</text>\n";
  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& s = series[k];
    std::string pts;
    for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
      pts += detail::num(px(s.x[i])) + "," + detail::num(py(s.y[i])) + " ";
      out += "<circle cx=\"" + detail::num(px(s.x[i])) + "\" cy=\"" + detail::num(py(s.y[i])) + "\" r=\"2.5\" fill=\"" +
             detail::color(k) + "\"/>\n";
    }
    out += "<polyline fill=\"none\" stroke=\"" + std::string(detail::color(k)) + "\" stroke-width=\"1.5\" points=\"" + pts +
           "\"/>\n";
    out += "<text x=\"" + detail::num(w - mr + 10) + "\" y=\"" + detail::num(mt + 16 * (k + 1)) + "\" fill=\"" +
           detail::color(k) + "\">" + detail::escape(s.label) + "</text>\n";
  }
  out += "</svg>\n";
  return out;
}

inline std::string bar_chart(const std::string& title, const std::string& ylabel, const std::vector<std::string>& labels,
                             const std::vector<double>& values) {
  const double w = 60.0 + 46.0 * static_cast<double>(labels.size()) + 20.0, h = 360, ml = 60, mt = 40, mb = 60;
  const double top = std::max(1.0, values.empty() ? 1.0 : *std::max_element(values.begin(), values.end()));
  std::string out = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + detail::num(w) + "\" height=\"" +
                    detail::num(h) + "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  out += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out += "<text x=\"" + detail::num(w / 2) + "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" +
         detail::escape(title) + "</text>\n";
  out += "<text transform=\"translate(14," + detail::num((mt + h - mb) / 2) + ") rotate(-90)\" text-anchor=\"middle\">" +
         detail::escape(ylabel) + "</text>\n";
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const double v = i < values.size() && std::isfinite(values[i]) ? values[i] : 0.0;
    const double bh = v / top * (h - mt - mb);
    const double x = ml + 46.0 * static_cast<double>(i);
    out += "<rect x=\"" + detail::num(x) + "\" y=\"" + detail::num(h - mb - bh) + "\" width=\"36\" height=\"" +
           detail::num(bh) + "\" fill=\"" + detail::color(i % 2) + "\"/>\n";
    out += "<text x=\"" + detail::num(x + 18) + "\" y=\"" + detail::num(h - mb + 14) + "\" text-anchor=\"middle\">" +
           detail::escape(labels[i]) + "</text>\n";
    out += "<text x=\"" + detail::num(x + 18) + "\" y=\"" + detail::num(h - mb - bh - 4) + "\" text-anchor=\"middle\">" +
           detail::num(v) + "</text>\n";
  }
  out += "</svg>\n";
  return out;
}

}  // namespace bebm::svg

#endif  // BEBM_PLOTS_HPP
