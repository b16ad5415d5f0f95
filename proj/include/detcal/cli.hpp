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

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "detcal/experiment.hpp"

namespace detcal {

/// Parsed run configuration file. Relative paths are resolved against the
/// directory holding the configuration file.
struct RunConfig {
  std::filesystem::path ground_truth;
  std::filesystem::path detections;
  std::optional<CategoryId> category;
  std::filesystem::path output_dir = "detcal_out";
  ExperimentConfig experiment;
};

/// Validates the whole document (unknown keys, types, ranges) before
/// returning; throws ValidationError.
RunConfig parse_run_config(const nlohmann::json& document,
                           const std::filesystem::path& base_dir = {});
RunConfig load_run_config(const std::filesystem::path& path);

enum class OutputFormat { kJson, kCsv, kTable };

// Artifact names written by the evaluate command.
inline constexpr const char* kReportJsonName = "report.json";
inline constexpr const char* kReportCsvName = "report.csv";
inline constexpr const char* kReportTableName = "report.txt";

struct EvaluateResult {
  ExperimentReport report;
  std::filesystem::path output_dir;
};

EvaluateResult cmd_evaluate(const std::filesystem::path& config_path,
                            const std::optional<std::filesystem::path>& out_dir,
                            std::optional<std::uint64_t> seed);

void cmd_simulate(const std::filesystem::path& generator_config_path,
                  const std::filesystem::path& out_dir,
                  std::optional<std::uint64_t> seed);

/// Fits one calibrator per (variant, tau, subset) on all matched samples and
/// writes them as calibrator_<variant>_<tau>_<subset>.json.
std::vector<std::filesystem::path> cmd_calibrate(
    const std::filesystem::path& config_path,
    const std::optional<std::filesystem::path>& out_dir,
    std::optional<std::uint64_t> seed);

/// Returns the SVG files written, in a fixed order.
std::vector<std::filesystem::path> cmd_plot(const std::filesystem::path& report_path,
                                            const std::filesystem::path& out_dir);

/// Exit codes: 0 success, 1 validation, 2 I/O, 3 computation. Failures
/// print one line `error[<category>]: <message>` to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out,
            std::ostream& err, bool color = false);

}  // namespace detcal
