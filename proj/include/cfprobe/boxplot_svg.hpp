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

#ifndef CFPROBE_BOXPLOT_SVG_HPP_
#define CFPROBE_BOXPLOT_SVG_HPP_

#include <span>
#include <string>
#include <string_view>

#include "cfprobe/bias_metrics.hpp"

namespace cfprobe {

struct BoxplotSeries {
  std::string name;
  DistributionSummary summary;
};

// Static SVG with one box per series: whiskers at min/max, box at Q1..Q3,
// median line, mean marker. The max (red) and min (green) points carry the
// subject label as text and as data-subject / data-value attributes.
std::string boxplot_svg(std::string_view title, std::span<const BoxplotSeries> series);

std::string xml_escape(std::string_view text);

}  // namespace cfprobe

#endif  // CFPROBE_BOXPLOT_SVG_HPP_
