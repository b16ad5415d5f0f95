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

#include "json.hpp"

#include "detcal/experiment.hpp"

namespace detcal {

inline constexpr const char* kReportFormat = "detcal.experiment_report";
inline constexpr int kReportVersion = 1;

/// Machine-readable report; D-ECE values are fractions.
nlohmann::ordered_json report_to_json(const ExperimentReport& report);

/// One row per (variant, tau, subset). Columns:
///   variant,pipeline,tau,subset,sample_count,matched_count,
///   baseline_dece_pct,calibrated_dece_pct,
///   baseline_neglected_bins,calibrated_neglected_bins,total_bins
/// D-ECE values are percentages with three decimals; neglected bin counts
/// are means over repeats.
std::string report_to_csv(const ExperimentReport& report);

/// Aligned text in the layout of the published tables: one block per
/// variant, rows IoU@tau x {Baseline, HB}, columns per feature subset,
/// values in percent.
std::string report_to_table(const ExperimentReport& report, bool color = false);

// Figure payloads as stored in the report, used by the plotting command.
nlohmann::ordered_json panel_to_json(const FigurePanel& panel);
FigurePanel panel_from_json(const nlohmann::json& document);

std::string format_percent(double fraction);

}  // namespace detcal
