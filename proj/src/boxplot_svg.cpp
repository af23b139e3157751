/*
 * Copyright 2026 The cfprobe Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "cfprobe/boxplot_svg.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "cfprobe/csv.hpp"

namespace cfprobe {
namespace {

constexpr double kWidthPerSeries = 220.0;
constexpr double kPlotTop = 60.0;
constexpr double kPlotHeight = 320.0;
constexpr double kMarginLeft = 70.0;

std::string num(double v) { return csv::format_fixed(v, 2); }

}  // namespace

std::string xml_escape(std::string_view text) {
  std::string out;
  for (char c : text) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&apos;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string boxplot_svg(std::string_view title, std::span<const BoxplotSeries> series) {
  double lo = 0.0;
  double hi = 0.0;
  for (const auto& s : series) {
    if (s.summary.count == 0) continue;
    lo = std::min(lo, s.summary.min);
    hi = std::max(hi, s.summary.max);
  }
  if (hi - lo < 1e-9) hi = lo + 1.0;
  const auto y = [&](double v) { return kPlotTop + kPlotHeight * (hi - v) / (hi - lo); };

  const double width = kMarginLeft + kWidthPerSeries * static_cast<double>(std::max<std::size_t>(series.size(), 1)) + 40.0;
  const double height = kPlotTop + kPlotHeight + 70.0;
  std::ostringstream svg;
  svg << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(width)
      << "\" height=\"" << num(height) << "\" viewBox=\"0 0 " << num(width) << ' '
      << num(height) << "\" font-family=\"sans-serif\" font-size=\"12\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << "<text class=\"title\" x=\"" << num(width / 2) << "\" y=\"28\" text-anchor=\"middle\" font-size=\"15\">"
      << xml_escape(title) << "</text>\n";

  // Axis with five ticks.
  svg << "<line x1=\"" << num(kMarginLeft) << "\" y1=\"" << num(kPlotTop) << "\" x2=\""
      << num(kMarginLeft) << "\" y2=\"" << num(kPlotTop + kPlotHeight)
      << "\" stroke=\"black\"/>\n";
  for (int t = 0; t <= 4; ++t) {
    const double v = lo + (hi - lo) * t / 4.0;
    svg << "<text class=\"tick\" x=\"" << num(kMarginLeft - 6) << "\" y=\"" << num(y(v) + 4)
        << "\" text-anchor=\"end\">" << csv::format_fixed(v, 3) << "</text>\n";
  }

  for (std::size_t i = 0; i < series.size(); ++i) {
    const auto& s = series[i].summary;
    const double cx = kMarginLeft + kWidthPerSeries * (static_cast<double>(i) + 0.5);
    svg << "<g class=\"series\" data-name=\"" << xml_escape(series[i].name) << "\">\n";
    svg << "<text class=\"series-name\" x=\"" << num(cx) << "\" y=\""
        << num(kPlotTop + kPlotHeight + 24) << "\" text-anchor=\"middle\">"
        << xml_escape(series[i].name) << "</text>\n";
    if (s.count == 0) {
      svg << "</g>\n";
      continue;
    }
    const double half = 40.0;
    svg << "<line class=\"whisker\" x1=\"" << num(cx) << "\" y1=\"" << num(y(s.max))
        << "\" x2=\"" << num(cx) << "\" y2=\"" << num(y(s.min)) << "\" stroke=\"black\"/>\n";
    svg << "<rect class=\"box\" x=\"" << num(cx - half) << "\" y=\"" << num(y(s.q3))
        << "\" width=\"" << num(2 * half) << "\" height=\""
        << num(std::max(y(s.q1) - y(s.q3), 0.5))
        << "\" fill=\"#cfe2f3\" stroke=\"black\"/>\n";
    svg << "<line class=\"median\" x1=\"" << num(cx - half) << "\" y1=\"" << num(y(s.median))
        << "\" x2=\"" << num(cx + half) << "\" y2=\"" << num(y(s.median))
        << "\" stroke=\"black\" stroke-width=\"2\"/>\n";
    svg << "<path class=\"mean\" d=\"M " << num(cx) << ' ' << num(y(s.mean) - 5) << " L "
        << num(cx + 5) << ' ' << num(y(s.mean)) << " L " << num(cx) << ' '
        << num(y(s.mean) + 5) << " L " << num(cx - 5) << ' ' << num(y(s.mean))
        << " Z\" fill=\"orange\" data-value=\"" << csv::format_double(s.mean) << "\"/>\n";
    const auto point = [&](const char* cls, const char* color, double v,
                           const std::string& subject, double dy) {
      svg << "<circle class=\"" << cls << "-point\" cx=\"" << num(cx) << "\" cy=\""
          << num(y(v)) << "\" r=\"5\" fill=\"" << color << "\" data-subject=\""
          << xml_escape(subject) << "\" data-value=\"" << csv::format_double(v)
          << "\"/>\n";
      svg << "<text class=\"" << cls << "-label\" x=\"" << num(cx + half + 6) << "\" y=\""
          << num(y(v) + dy) << "\" fill=\"" << color << "\">" << xml_escape(subject)
          << "</text>\n";
    };
    point("max", "red", s.max, s.argmax_subject, -2);
    point("min", "green", s.min, s.argmin_subject, 12);
    svg << "</g>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

}  // namespace cfprobe
