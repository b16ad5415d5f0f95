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

#include "detcal/svg.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include <fmt/format.h>

namespace detcal {
namespace {

std::string escape(const std::string& text) {
  std::string out;
  for (char c : text) {
    switch (c) {
      case '&':
        out += "&amp;";
        break;
      case '<':
        out += "&lt;";
        break;
      case '>':
        out += "&gt;";
        break;
      case '"':
        out += "&quot;";
        break;
      default:
        out += c;
    }
  }
  return out;
}

std::string title_line(const std::string& title, const std::optional<double>& d_ece) {
  if (!d_ece) return escape(title) + " (D-ECE n/a)";
  return fmt::format("{} (D-ECE = {:.3f}%)", escape(title), 100.0 * *d_ece);
}

std::string open_svg(int width, int height) {
  return fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0}\" height=\"{1}\" "
      "viewBox=\"0 0 {0} {1}\" font-family=\"sans-serif\" font-size=\"11\">\n"
      "<rect x=\"0\" y=\"0\" width=\"{0}\" height=\"{1}\" fill=\"white\"/>\n",
      width, height);
}

// Piecewise-linear approximation of the viridis colour map.
std::string colormap(double t) {
  static constexpr std::array<std::array<double, 3>, 5> kStops = {{
      {68, 1, 84},
      {59, 82, 139},
      {33, 145, 140},
      {94, 201, 98},
      {253, 231, 37},
  }};
  t = std::clamp(t, 0.0, 1.0) * (kStops.size() - 1);
  const auto i = std::min<std::size_t>(static_cast<std::size_t>(t), kStops.size() - 2);
  const double f = t - static_cast<double>(i);
  std::array<int, 3> rgb{};
  for (std::size_t c = 0; c < 3; ++c) {
    rgb[c] = static_cast<int>(
        std::lround(kStops[i][c] + f * (kStops[i + 1][c] - kStops[i][c])));
  }
  return fmt::format("#{:02x}{:02x}{:02x}", rgb[0], rgb[1], rgb[2]);
}

}  // namespace

std::string render_reliability_svg(const FigurePanel& panel,
                                   const std::string& title) {
  constexpr int kWidth = 420;
  constexpr int kHeight = 520;
  constexpr double kLeft = 60.0;
  constexpr double kPlotW = 330.0;
  constexpr double kHistTop = 50.0;
  constexpr double kHistH = 150.0;
  constexpr double kRelTop = 250.0;
  constexpr double kRelH = 220.0;

  std::size_t total = 0;
  for (const auto& bin : panel.reliability) total += bin.count;
  double max_share = 0.0;
  for (const auto& bin : panel.reliability) {
    if (total > 0) {
      max_share = std::max(max_share, static_cast<double>(bin.count) / total);
    }
  }
  const double hist_scale = max_share > 0.0 ? std::ceil(max_share * 10.0) / 10.0 : 1.0;

  std::string svg = open_svg(kWidth, kHeight);
  svg += fmt::format(
      "<text x=\"{:.2f}\" y=\"24\" text-anchor=\"middle\" font-size=\"13\">{}</text>\n",
      kWidth / 2.0, title_line(title, panel.d_ece));

  // Confidence histogram.
  svg += fmt::format(
      "<rect x=\"{:.2f}\" y=\"{:.2f}\" width=\"{:.2f}\" height=\"{:.2f}\" "
      "fill=\"none\" stroke=\"black\"/>\n",
      kLeft, kHistTop, kPlotW, kHistH);
  for (const auto& bin : panel.reliability) {
    if (bin.count == 0 || total == 0) continue;
    const double share = static_cast<double>(bin.count) / total;
    const double h = kHistH * share / hist_scale;
    svg += fmt::format(
        "<rect x=\"{:.2f}\" y=\"{:.2f}\" width=\"{:.2f}\" height=\"{:.2f}\" "
        "fill=\"#4c72b0\" stroke=\"white\" stroke-width=\"0.5\"/>\n",
        kLeft + kPlotW * bin.lo, kHistTop + kHistH - h, kPlotW * (bin.hi - bin.lo), h);
  }
  svg += fmt::format(
      "<text x=\"{:.2f}\" y=\"{:.2f}\" text-anchor=\"end\">{:.0f}%</text>\n"
      "<text x=\"{:.2f}\" y=\"{:.2f}\" text-anchor=\"end\">0%</text>\n",
      kLeft - 4, kHistTop + 4, 100.0 * hist_scale, kLeft - 4, kHistTop + kHistH);
  svg += fmt::format(
      "<text x=\"16\" y=\"{:.2f}\" transform=\"rotate(-90 16 {:.2f})\" "
      "text-anchor=\"middle\">% of samples</text>\n",
      kHistTop + kHistH / 2, kHistTop + kHistH / 2);

  // Reliability diagram: precision per bin against the diagonal.
  svg += fmt::format(
      "<rect x=\"{:.2f}\" y=\"{:.2f}\" width=\"{:.2f}\" height=\"{:.2f}\" "
      "fill=\"none\" stroke=\"black\"/>\n",
      kLeft, kRelTop, kPlotW, kRelH);
  for (const auto& bin : panel.reliability) {
    if (!bin.prec || !bin.conf) continue;
    const double x = kLeft + kPlotW * bin.lo;
    const double w = kPlotW * (bin.hi - bin.lo);
    const double prec_y = kRelTop + kRelH * (1.0 - *bin.prec);
    const double conf_y = kRelTop + kRelH * (1.0 - *bin.conf);
    svg += fmt::format(
        "<rect x=\"{:.2f}\" y=\"{:.2f}\" width=\"{:.2f}\" height=\"{:.2f}\" "
        "fill=\"#4c72b0\" stroke=\"white\" stroke-width=\"0.5\"/>\n",
        x, prec_y, w, kRelTop + kRelH - prec_y);
    svg += fmt::format(
        "<rect x=\"{:.2f}\" y=\"{:.2f}\" width=\"{:.2f}\" height=\"{:.2f}\" "
        "fill=\"#dd8452\" fill-opacity=\"0.45\"/>\n",
        x, std::min(prec_y, conf_y), w, std::abs(prec_y - conf_y));
  }
  svg += fmt::format(
      "<line x1=\"{:.2f}\" y1=\"{:.2f}\" x2=\"{:.2f}\" y2=\"{:.2f}\" "
      "stroke=\"gray\" stroke-dasharray=\"4 3\"/>\n",
      kLeft, kRelTop + kRelH, kLeft + kPlotW, kRelTop);
  for (int tick = 0; tick <= 4; ++tick) {
    const double v = tick / 4.0;
    svg += fmt::format(
        "<text x=\"{:.2f}\" y=\"{:.2f}\" text-anchor=\"middle\">{:.2f}</text>\n",
        kLeft + kPlotW * v, kRelTop + kRelH + 16, v);
    svg += fmt::format(
        "<text x=\"{:.2f}\" y=\"{:.2f}\" text-anchor=\"end\">{:.2f}</text>\n",
        kLeft - 4, kRelTop + kRelH * (1.0 - v) + 4, v);
  }
  svg += fmt::format(
      "<text x=\"16\" y=\"{:.2f}\" transform=\"rotate(-90 16 {:.2f})\" "
      "text-anchor=\"middle\">Precision</text>\n",
      kRelTop + kRelH / 2, kRelTop + kRelH / 2);
  svg += fmt::format(
      "<text x=\"{:.2f}\" y=\"{:.2f}\" text-anchor=\"middle\">Confidence</text>\n",
      kLeft + kPlotW / 2, kRelTop + kRelH + 36);
  svg += "</svg>\n";
  return svg;
}

std::string render_heatmap_svg(const FigurePanel& panel, const std::string& title) {
  constexpr int kWidth = 440;
  constexpr int kHeight = 420;
  constexpr double kLeft = 50.0;
  constexpr double kTop = 50.0;
  constexpr double kSize = 300.0;
  constexpr double kBarX = 370.0;
  constexpr double kBarW = 16.0;

  const Heatmap& heatmap = panel.heatmap;
  const std::size_t n = heatmap.grid_n;
  double max_value = 0.0;
  for (const auto& cell : heatmap.cells) {
    if (cell.value) max_value = std::max(max_value, *cell.value);
  }
  // Colour bar spans [0, vmax] with vmax rounded up to a multiple of 0.1.
  const double vmax = std::max(0.1, std::ceil(max_value * 10.0 - 1e-9) / 10.0);

  std::string svg = open_svg(kWidth, kHeight);
  svg += fmt::format(
      "<text x=\"{:.2f}\" y=\"24\" text-anchor=\"middle\" font-size=\"13\">{}</text>\n",
      kWidth / 2.0, title_line(title, panel.d_ece));

  const double cell = n > 0 ? kSize / static_cast<double>(n) : kSize;
  for (std::size_t row = 0; row < n; ++row) {
    for (std::size_t col = 0; col < n; ++col) {
      const HeatmapCell& c = heatmap.at(row, col);
      // Row 0 holds the smallest cy and sits at the bottom.
      const double x = kLeft + cell * static_cast<double>(col);
      const double y = kTop + kSize - cell * static_cast<double>(row + 1);
      const std::string fill = c.value ? colormap(*c.value / vmax) : "#d9d9d9";
      svg += fmt::format(
          "<rect x=\"{:.2f}\" y=\"{:.2f}\" width=\"{:.2f}\" height=\"{:.2f}\" "
          "fill=\"{}\"/>\n",
          x, y, cell, cell, fill);
    }
  }
  svg += fmt::format(
      "<rect x=\"{:.2f}\" y=\"{:.2f}\" width=\"{:.2f}\" height=\"{:.2f}\" "
      "fill=\"none\" stroke=\"black\"/>\n",
      kLeft, kTop, kSize, kSize);
  svg += fmt::format(
      "<text x=\"{:.2f}\" y=\"{:.2f}\" text-anchor=\"middle\">0.0</text>\n"
      "<text x=\"{:.2f}\" y=\"{:.2f}\" text-anchor=\"middle\">1.0</text>\n"
      "<text x=\"{:.2f}\" y=\"{:.2f}\" text-anchor=\"middle\">relative cx</text>\n",
      kLeft, kTop + kSize + 16, kLeft + kSize, kTop + kSize + 16, kLeft + kSize / 2,
      kTop + kSize + 34);
  svg += fmt::format(
      "<text x=\"{:.2f}\" y=\"{:.2f}\" text-anchor=\"end\">1.0</text>\n"
      "<text x=\"18\" y=\"{:.2f}\" transform=\"rotate(-90 18 {:.2f})\" "
      "text-anchor=\"middle\">relative cy</text>\n",
      kLeft - 4, kTop + 4, kTop + kSize / 2, kTop + kSize / 2);

  constexpr int kSteps = 20;
  for (int i = 0; i < kSteps; ++i) {
    const double t0 = static_cast<double>(i) / kSteps;
    svg += fmt::format(
        "<rect x=\"{:.2f}\" y=\"{:.2f}\" width=\"{:.2f}\" height=\"{:.2f}\" "
        "fill=\"{}\"/>\n",
        kBarX, kTop + kSize * (1.0 - t0) - kSize / kSteps, kBarW, kSize / kSteps,
        colormap(t0 + 0.5 / kSteps));
  }
  svg += fmt::format(
      "<rect x=\"{:.2f}\" y=\"{:.2f}\" width=\"{:.2f}\" height=\"{:.2f}\" "
      "fill=\"none\" stroke=\"black\"/>\n",
      kBarX, kTop, kBarW, kSize);
  for (int tick = 0; tick <= 4; ++tick) {
    const double v = vmax * tick / 4.0;
    svg += fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\">{:.3f}</text>\n",
                       kBarX + kBarW + 4, kTop + kSize * (1.0 - tick / 4.0) + 4, v);
  }
  svg += "</svg>\n";
  return svg;
}

}  // namespace detcal
