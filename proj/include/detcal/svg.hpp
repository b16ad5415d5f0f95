/*
 * Copyright 2026 The detcal Authors.
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

#pragma once

#include <string>

#include "detcal/experiment.hpp"

namespace detcal {

/// Confidence histogram (top) stacked over a reliability diagram (bottom).
/// Empty bins draw no bars. The title carries the D-ECE in percent.
std::string render_reliability_svg(const FigurePanel& panel,
                                   const std::string& title);

/// Per-cell miscalibration over relative (cx, cy) with a colour bar. Cells
/// without retained samples are drawn in grey.
std::string render_heatmap_svg(const FigurePanel& panel, const std::string& title);

}  // namespace detcal
