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

#include "detcal/report.hpp"

#include <numeric>

#include <fmt/format.h>

#include "detcal/error.hpp"

namespace detcal {
namespace {

using ojson = nlohmann::ordered_json;

ojson optional_number(const std::optional<double>& value) {
  return value ? ojson(*value) : ojson(nullptr);
}

std::optional<double> read_optional(const nlohmann::json& value) {
  if (value.is_null()) return std::nullopt;
  return value.get<double>();
}

ojson dece_to_json(const DEceReport& r) {
  return ojson{{"d_ece", r.d_ece},
               {"total_samples", r.total_sample_count},
               {"retained_samples", r.retained_sample_count},
               {"total_bins", r.total_bin_count},
               {"occupied_bins", r.occupied_bin_count},
               {"retained_bins", r.retained_bin_count},
               {"neglected_bins", r.neglected_bin_count},
               {"empty_bins", r.empty_bin_count}};
}

ojson series_to_json(const SeriesSummary& s) {
  return ojson{{"mean", s.mean},
               {"per_repeat", s.per_repeat},
               {"neglected_bins", s.neglected_bins}};
}

double mean_of(const std::vector<std::uint64_t>& values) {
  if (values.empty()) return 0.0;
  const double sum = std::accumulate(values.begin(), values.end(), 0.0);
  return sum / static_cast<double>(values.size());
}

std::uint64_t total_bins(const std::vector<std::size_t>& bins) {
  return std::accumulate(bins.begin(), bins.end(), std::uint64_t{1},
                         std::multiplies<>());
}

// 117292 -> "117,292"
std::string with_thousands(std::size_t value) {
  std::string digits = std::to_string(value);
  std::string out;
  const std::size_t lead = digits.size() % 3;
  for (std::size_t i = 0; i < digits.size(); ++i) {
    if (i != 0 && i >= lead && (i - lead) % 3 == 0) out += ',';
    out += digits[i];
  }
  return out;
}

std::string csv_field(const std::string& text) {
  if (text.find_first_of(",\"\n") == std::string::npos) return text;
  std::string out = "\"";
  for (char c : text) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

std::string format_percent(double fraction) {
  return fmt::format("{:.3f}", 100.0 * fraction);
}

ojson panel_to_json(const FigurePanel& panel) {
  ojson reliability = ojson::array();
  for (const auto& bin : panel.reliability) {
    reliability.push_back(ojson{{"lo", bin.lo},
                                {"hi", bin.hi},
                                {"count", bin.count},
                                {"conf", optional_number(bin.conf)},
                                {"prec", optional_number(bin.prec)}});
  }
  ojson counts = ojson::array();
  ojson values = ojson::array();
  for (const auto& cell : panel.heatmap.cells) {
    counts.push_back(cell.count);
    values.push_back(optional_number(cell.value));
  }
  return ojson{{"d_ece", optional_number(panel.d_ece)},
               {"reliability", std::move(reliability)},
               {"heatmap",
                {{"grid", panel.heatmap.grid_n},
                 {"counts", std::move(counts)},
                 {"values", std::move(values)}}}};
}

FigurePanel panel_from_json(const nlohmann::json& document) {
  try {
    FigurePanel panel;
    panel.d_ece = read_optional(document.at("d_ece"));
    for (const auto& bin : document.at("reliability")) {
      ReliabilityBin out;
      out.lo = bin.at("lo").get<double>();
      out.hi = bin.at("hi").get<double>();
      out.count = bin.at("count").get<std::size_t>();
      out.conf = read_optional(bin.at("conf"));
      out.prec = read_optional(bin.at("prec"));
      panel.reliability.push_back(out);
    }
    const auto& heatmap = document.at("heatmap");
    panel.heatmap.grid_n = heatmap.at("grid").get<std::size_t>();
    const auto& counts = heatmap.at("counts");
    const auto& values = heatmap.at("values");
    const std::size_t n = panel.heatmap.grid_n * panel.heatmap.grid_n;
    if (counts.size() != n || values.size() != n) {
      throw ValidationError("heatmap size does not match its grid");
    }
    for (std::size_t i = 0; i < n; ++i) {
      panel.heatmap.cells.push_back(
          HeatmapCell{counts[i].get<std::size_t>(), read_optional(values[i])});
    }
    return panel;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(fmt::format("malformed figure data: {}", e.what()));
  }
}

ojson report_to_json(const ExperimentReport& report) {
  const ExperimentConfig& config = report.config;
  ojson subsets = ojson::array();
  for (FeatureSubset s : config.subsets) subsets.push_back(to_string(s));

  ojson out;
  out["format"] = kReportFormat;
  out["version"] = kReportVersion;
  out["config"] = ojson{
      {"seed", config.seed},
      {"repeats", config.repeats},
      {"split_ratio", config.split_ratio},
      {"split_mode", to_string(config.split_mode)},
      {"min_bin_count", config.dece.min_bin_count},
      {"normalization",
       config.dece.normalization == WeightNormalization::kRetainedSamples
           ? "retained"
           : "all"},
      {"exclude_crowd", config.exclude_crowd},
      {"fallback", to_string(config.fallback)},
      {"post_calibration_threshold",
       optional_number(config.post_calibration_threshold)},
      {"taus", config.taus},
      {"subsets", std::move(subsets)}};

  ojson variants = ojson::array();
  for (const auto& v : report.variants) {
    variants.push_back(ojson{{"name", v.name},
                             {"stages", pipeline_to_json(v.pipeline)},
                             {"sample_count", v.sample_count}});
  }
  out["variants"] = std::move(variants);

  ojson results = ojson::array();
  for (const auto& cell : report.cells) {
    results.push_back(ojson{{"variant", cell.variant},
                            {"tau", cell.tau},
                            {"subset", to_string(cell.subset)},
                            {"sample_count", cell.sample_count},
                            {"matched_count", cell.matched_count},
                            {"dece_bins", cell.dece_bins},
                            {"calibration_bins", cell.calibration_bins},
                            {"baseline", series_to_json(cell.baseline)},
                            {"calibrated", series_to_json(cell.calibrated)}});
  }
  out["results"] = std::move(results);

  ojson figures = ojson::array();
  for (const auto& fig : report.figures) {
    figures.push_back(ojson{{"variant", fig.variant},
                            {"tau", fig.tau},
                            {"subset", to_string(fig.subset)},
                            {"baseline", panel_to_json(fig.baseline)},
                            {"calibrated", panel_to_json(fig.calibrated)}});
  }
  out["figures"] = std::move(figures);

  if (report.calibrate_then_nms && config.calibrate_then_nms) {
    const auto& r = *report.calibrate_then_nms;
    const auto& c = *config.calibrate_then_nms;
    out["calibrate_then_nms"] =
        ojson{{"nms_threshold", c.nms_threshold},
              {"tau", c.tau},
              {"subset", to_string(c.subset)},
              {"white_box", pipeline_to_json(c.white_box)},
              {"train_images", r.train_images},
              {"test_images", r.test_images},
              {"white_box_baseline", dece_to_json(r.white_box_baseline)},
              {"white_box_calibrated", dece_to_json(r.white_box_calibrated)},
              {"after_nms", dece_to_json(r.after_nms)},
              {"after_nms_figure", panel_to_json(r.after_nms_figure)}};
  }
  return out;
}

std::string report_to_csv(const ExperimentReport& report) {
  std::string out =
      "variant,pipeline,tau,subset,sample_count,matched_count,"
      "baseline_dece_pct,calibrated_dece_pct,baseline_neglected_bins,"
      "calibrated_neglected_bins,total_bins\n";
  for (const auto& cell : report.cells) {
    std::string pipeline;
    for (const auto& v : report.variants) {
      if (v.name == cell.variant) pipeline = describe(v.pipeline);
    }
    out += fmt::format("{},{},{},{},{},{},{},{},{:.2f},{:.2f},{}\n",
                       csv_field(cell.variant), csv_field(pipeline), cell.tau,
                       to_string(cell.subset), cell.sample_count,
                       cell.matched_count, format_percent(cell.baseline.mean),
                       format_percent(cell.calibrated.mean),
                       mean_of(cell.baseline.neglected_bins),
                       mean_of(cell.calibrated.neglected_bins),
                       total_bins(cell.dece_bins));
  }
  return out;
}

std::string report_to_table(const ExperimentReport& report, bool color) {
  const std::string bold = color ? "\x1b[1m" : "";
  const std::string reset = color ? "\x1b[0m" : "";
  const auto& subsets = report.config.subsets;
  constexpr int kLabel = 12;
  constexpr int kColumn = 12;

  std::string out;
  auto header_row = [&] {
    std::string row = fmt::format("{:<{}}", "", kLabel);
    for (FeatureSubset s : subsets) row += fmt::format("{:>{}}", heading(s), kColumn);
    return bold + row + reset + "\n";
  };

  out += "D-ECE (%) before (Baseline) and after histogram binning (HB)\n";
  for (const auto& variant : report.variants) {
    out += "\n" + bold +
           fmt::format("{}: {}, |D|={}", variant.name, describe(variant.pipeline),
                       with_thousands(variant.sample_count)) +
           reset + "\n";
    out += header_row();
    for (double tau : report.config.taus) {
      out += fmt::format("IoU@{}\n", tau);
      std::string base_row = fmt::format("{:<{}}", "  Baseline", kLabel);
      std::string hb_row = fmt::format("{:<{}}", "  HB", kLabel);
      for (FeatureSubset s : subsets) {
        const ExperimentCell* cell = report.find(variant.name, tau, s);
        base_row += fmt::format("{:>{}}", format_percent(cell->baseline.mean), kColumn);
        hb_row += fmt::format("{:>{}}", format_percent(cell->calibrated.mean), kColumn);
      }
      out += base_row + "\n" + hb_row + "\n";
    }
  }

  const double first_tau = report.config.taus.front();
  out += "\n" + bold +
         fmt::format("Neglected bins (baseline, mean over repeats) at IoU@{}",
                     first_tau) +
         reset + "\n";
  out += header_row();
  for (const auto& variant : report.variants) {
    std::string row = fmt::format("{:<{}}", variant.name, kLabel);
    for (FeatureSubset s : subsets) {
      const ExperimentCell* cell = report.find(variant.name, first_tau, s);
      row += fmt::format("{:>{}.2f}", mean_of(cell->baseline.neglected_bins), kColumn);
    }
    out += row + "\n";
  }
  std::string total_row = fmt::format("{:<{}}", "total", kLabel);
  for (FeatureSubset s : subsets) {
    total_row += fmt::format("{:>{}}", report.config.dece_scheme(s).total_bins(), kColumn);
  }
  out += total_row + "\n";

  if (report.calibrate_then_nms && report.config.calibrate_then_nms) {
    const auto& r = *report.calibrate_then_nms;
    const auto& c = *report.config.calibrate_then_nms;
    out += "\n" + bold +
           fmt::format("Calibrate then NMS@{} (IoU@{}, {}, {} test images)",
                       c.nms_threshold, c.tau, heading(c.subset), r.test_images) +
           reset + "\n";
    out += fmt::format("  white-box baseline    {:>8}\n",
                       format_percent(r.white_box_baseline.d_ece));
    out += fmt::format("  white-box calibrated  {:>8}\n",
                       format_percent(r.white_box_calibrated.d_ece));
    out += fmt::format("  after NMS             {:>8}\n",
                       format_percent(r.after_nms.d_ece));
  }
  return out;
}

}  // namespace detcal
