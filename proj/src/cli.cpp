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

#include "detcal/cli.hpp"

#include <cctype>
#include <ostream>
#include <set>

#include <fmt/format.h>

#include "CLI11.hpp"

#include "detcal/calibration.hpp"
#include "detcal/error.hpp"
#include "detcal/report.hpp"
#include "detcal/svg.hpp"
#include "detcal/synthetic.hpp"

namespace detcal {
namespace {

using nlohmann::json;

void reject_unknown_keys(const json& object, const std::set<std::string>& known,
                         const char* where) {
  if (!object.is_object()) {
    throw ValidationError(fmt::format("{} must be a JSON object", where));
  }
  for (const auto& [key, value] : object.items()) {
    if (!known.contains(key)) {
      throw ValidationError(fmt::format("unknown key '{}' in {}", key, where));
    }
  }
}

std::size_t get_count(const json& object, const char* key, std::size_t fallback,
                      std::size_t minimum) {
  if (!object.contains(key)) return fallback;
  const json& value = object.at(key);
  if (!value.is_number_integer() || value.get<std::int64_t>() < 0) {
    throw ValidationError(
        fmt::format("'{}' must be a non-negative integer", key));
  }
  const auto out = value.get<std::size_t>();
  if (out < minimum) {
    throw ValidationError(fmt::format("'{}' must be >= {}", key, minimum));
  }
  return out;
}

std::filesystem::path resolve(const std::filesystem::path& base,
                              const std::string& value) {
  std::filesystem::path p(value);
  return p.is_absolute() || base.empty() ? p : base / p;
}

std::map<FeatureSubset, std::vector<std::size_t>> parse_bin_overrides(
    const json& object) {
  if (!object.is_object()) {
    throw ValidationError("bin overrides must map subset names to bin counts");
  }
  std::map<FeatureSubset, std::vector<std::size_t>> out;
  for (const auto& [name, bins] : object.items()) {
    const FeatureSubset subset = parse_feature_subset(name);
    std::vector<std::size_t> counts;
    if (bins.is_number_integer()) {
      counts.push_back(bins.get<std::size_t>());
    } else {
      counts = bins.get<std::vector<std::size_t>>();
    }
    BinningScheme(subset, counts);  // validates
    out[subset] = std::move(counts);
  }
  return out;
}

FigureConfig parse_figures(const json& object) {
  reject_unknown_keys(object, {"tau", "subset", "reliability_bins", "heatmap_grid"},
                      "figures");
  FigureConfig fig;
  fig.tau = object.value("tau", fig.tau);
  if (object.contains("subset")) {
    fig.subset = parse_feature_subset(object.at("subset").get<std::string>());
  }
  fig.reliability_bins = get_count(object, "reliability_bins", fig.reliability_bins, 1);
  fig.heatmap_grid = get_count(object, "heatmap_grid", fig.heatmap_grid, 1);
  return fig;
}

CalibrateThenNmsConfig parse_calibrate_then_nms(const json& object) {
  reject_unknown_keys(object,
                      {"white_box", "nms_threshold", "tau", "subset",
                       "reliability_bins", "heatmap_grid"},
                      "calibrate_then_nms");
  CalibrateThenNmsConfig c;
  if (object.contains("white_box")) c.white_box = pipeline_from_json(object.at("white_box"));
  c.nms_threshold = object.value("nms_threshold", c.nms_threshold);
  c.tau = object.value("tau", c.tau);
  if (object.contains("subset")) {
    c.subset = parse_feature_subset(object.at("subset").get<std::string>());
  }
  c.reliability_bins = get_count(object, "reliability_bins", c.reliability_bins, 1);
  c.heatmap_grid = get_count(object, "heatmap_grid", c.heatmap_grid, 1);
  return c;
}

std::string slug(const std::string& text) {
  std::string out;
  for (char c : text) {
    out += std::isalnum(static_cast<unsigned char>(c)) || c == '-' ? c : '_';
  }
  return out;
}

void ensure_directory(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError(fmt::format("cannot create directory '{}'", dir.string()));
}

Dataset load_run_data(const RunConfig& run) {
  Dataset data = load_dataset(run.ground_truth, run.detections);
  if (run.category) data = filter_category(data, *run.category);
  return data;
}

std::string one_line(std::string text) {
  for (char& c : text) {
    if (c == '\n' || c == '\r') c = ' ';
  }
  return text;
}

}  // namespace

RunConfig parse_run_config(const json& document,
                           const std::filesystem::path& base_dir) {
  static const std::set<std::string> kKnown = {
      "ground_truth",  "detections",       "category",
      "output_dir",    "variants",         "taus",
      "subsets",       "split_ratio",      "split_mode",
      "repeats",       "seed",             "min_bin_count",
      "normalization", "dece_bins",        "calibration_bins",
      "exclude_crowd", "fallback",         "post_calibration_threshold",
      "figures",       "calibrate_then_nms", "threads"};
  reject_unknown_keys(document, kKnown, "run config");

  RunConfig run;
  ExperimentConfig& exp = run.experiment;
  try {
    if (!document.contains("ground_truth") || !document.contains("detections")) {
      throw ValidationError("run config needs 'ground_truth' and 'detections'");
    }
    run.ground_truth = resolve(base_dir, document.at("ground_truth").get<std::string>());
    run.detections = resolve(base_dir, document.at("detections").get<std::string>());
    if (document.contains("category") && !document.at("category").is_null()) {
      run.category = document.at("category").get<CategoryId>();
    }
    if (document.contains("output_dir")) {
      run.output_dir = resolve(base_dir, document.at("output_dir").get<std::string>());
    }
    if (document.contains("variants")) {
      exp.variants.clear();
      for (const auto& v : document.at("variants")) {
        reject_unknown_keys(v, {"name", "stages"}, "variant");
        exp.variants.push_back(PipelineVariant{
            v.at("name").get<std::string>(), pipeline_from_json(v.at("stages"))});
      }
    }
    if (document.contains("taus")) exp.taus = document.at("taus").get<std::vector<double>>();
    if (document.contains("subsets")) {
      exp.subsets.clear();
      for (const auto& s : document.at("subsets")) {
        exp.subsets.push_back(parse_feature_subset(s.get<std::string>()));
      }
    }
    exp.split_ratio = document.value("split_ratio", exp.split_ratio);
    if (document.contains("split_mode")) {
      exp.split_mode = parse_split_mode(document.at("split_mode").get<std::string>());
    }
    exp.repeats = get_count(document, "repeats", exp.repeats, 1);
    exp.seed = document.value("seed", exp.seed);
    exp.dece.min_bin_count = get_count(document, "min_bin_count", exp.dece.min_bin_count, 1);
    if (document.contains("normalization")) {
      const auto name = document.at("normalization").get<std::string>();
      if (name == "retained") {
        exp.dece.normalization = WeightNormalization::kRetainedSamples;
      } else if (name == "all") {
        exp.dece.normalization = WeightNormalization::kAllSamples;
      } else {
        throw ValidationError(fmt::format(
            "unknown normalization '{}' (expected retained or all)", name));
      }
    }
    if (document.contains("dece_bins")) {
      exp.dece_bins = parse_bin_overrides(document.at("dece_bins"));
    }
    if (document.contains("calibration_bins")) {
      exp.calibration_bins = parse_bin_overrides(document.at("calibration_bins"));
    }
    exp.exclude_crowd = document.value("exclude_crowd", exp.exclude_crowd);
    if (document.contains("fallback")) {
      exp.fallback = parse_empty_bin_fallback(document.at("fallback").get<std::string>());
    }
    if (document.contains("post_calibration_threshold") &&
        !document.at("post_calibration_threshold").is_null()) {
      exp.post_calibration_threshold =
          document.at("post_calibration_threshold").get<double>();
    }
    if (document.contains("figures") && !document.at("figures").is_null()) {
      exp.figures = parse_figures(document.at("figures"));
    }
    if (document.contains("calibrate_then_nms") &&
        !document.at("calibrate_then_nms").is_null()) {
      exp.calibrate_then_nms = parse_calibrate_then_nms(document.at("calibrate_then_nms"));
    }
    exp.threads = get_count(document, "threads", exp.threads, 0);
  } catch (const json::exception& e) {
    throw ValidationError(fmt::format("malformed run config: {}", e.what()));
  }
  exp.validate();
  return run;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  return parse_run_config(read_json_file(path), path.parent_path());
}

EvaluateResult cmd_evaluate(const std::filesystem::path& config_path,
                            const std::optional<std::filesystem::path>& out_dir,
                            std::optional<std::uint64_t> seed) {
  RunConfig run = load_run_config(config_path);
  if (seed) run.experiment.seed = *seed;
  if (out_dir) run.output_dir = *out_dir;

  const Dataset data = load_run_data(run);
  EvaluateResult result{run_experiment(run.experiment, data), run.output_dir};

  const std::string json_text = report_to_json(result.report).dump(1) + "\n";
  const std::string csv_text = report_to_csv(result.report);
  const std::string table_text = report_to_table(result.report, false);
  ensure_directory(run.output_dir);
  write_file_atomic(run.output_dir / kReportJsonName, json_text);
  write_file_atomic(run.output_dir / kReportCsvName, csv_text);
  write_file_atomic(run.output_dir / kReportTableName, table_text);
  return result;
}

void cmd_simulate(const std::filesystem::path& generator_config_path,
                  const std::filesystem::path& out_dir,
                  std::optional<std::uint64_t> seed) {
  GeneratorConfig config = generator_config_from_json(read_json_file(generator_config_path));
  if (seed) config.seed = *seed;
  write_synthetic(generate(config), out_dir);
}

std::vector<std::filesystem::path> cmd_calibrate(
    const std::filesystem::path& config_path,
    const std::optional<std::filesystem::path>& out_dir,
    std::optional<std::uint64_t> seed) {
  RunConfig run = load_run_config(config_path);
  if (seed) run.experiment.seed = *seed;
  if (out_dir) run.output_dir = *out_dir;
  const Dataset data = load_run_data(run);
  const ExperimentConfig& exp = run.experiment;

  std::vector<std::pair<std::filesystem::path, std::string>> files;
  for (const auto& variant : exp.variants) {
    for (double tau : exp.taus) {
      const std::vector<MatchedSample> samples =
          prepare_samples(data, variant.pipeline, MatchConfig{tau, exp.exclude_crowd});
      for (FeatureSubset subset : exp.subsets) {
        const HistogramCalibrator calibrator = HistogramCalibrator::fit(
            samples, exp.calibration_scheme(subset), exp.fallback);
        const std::string name = fmt::format("calibrator_{}_{}_{}.json", slug(variant.name),
                                             slug(fmt::format("{}", tau)), to_string(subset));
        files.emplace_back(run.output_dir / name, calibrator.to_json().dump(1) + "\n");
      }
    }
  }
  ensure_directory(run.output_dir);
  std::vector<std::filesystem::path> written;
  for (const auto& [path, text] : files) {
    write_file_atomic(path, text);
    written.push_back(path);
  }
  return written;
}

std::vector<std::filesystem::path> cmd_plot(const std::filesystem::path& report_path,
                                            const std::filesystem::path& out_dir) {
  const json report = read_json_file(report_path);
  std::vector<std::pair<std::string, std::string>> files;
  try {
    if (!report.is_object() || report.value("format", "") != kReportFormat) {
      throw ValidationError(fmt::format("'{}' is not an experiment report",
                                        report_path.string()));
    }
    if (report.contains("figures")) {
      for (const auto& fig : report.at("figures")) {
        const std::string variant = fig.at("variant").get<std::string>();
        const double tau = fig.at("tau").get<double>();
        const std::string subset = fig.at("subset").get<std::string>();
        const FigurePanel baseline = panel_from_json(fig.at("baseline"));
        const FigurePanel calibrated = panel_from_json(fig.at("calibrated"));
        const std::string base_title = fmt::format("{} IoU@{} uncalibrated", variant, tau);
        const std::string cal_title =
            fmt::format("{} IoU@{} after HB ({})", variant, tau, subset);
        const std::string stem = slug(variant);
        files.emplace_back(stem + "_reliability_baseline.svg",
                           render_reliability_svg(baseline, base_title));
        files.emplace_back(stem + "_reliability_calibrated.svg",
                           render_reliability_svg(calibrated, cal_title));
        files.emplace_back(stem + "_heatmap_baseline.svg",
                           render_heatmap_svg(baseline, base_title));
        files.emplace_back(stem + "_heatmap_calibrated.svg",
                           render_heatmap_svg(calibrated, cal_title));
      }
    }
    if (report.contains("calibrate_then_nms")) {
      const auto& c = report.at("calibrate_then_nms");
      const FigurePanel panel = panel_from_json(c.at("after_nms_figure"));
      const std::string title =
          fmt::format("HB then NMS@{} IoU@{}", c.at("nms_threshold").get<double>(),
                      c.at("tau").get<double>());
      files.emplace_back("calibrate_then_nms_reliability.svg",
                         render_reliability_svg(panel, title));
      files.emplace_back("calibrate_then_nms_heatmap.svg", render_heatmap_svg(panel, title));
    }
  } catch (const json::exception& e) {
    throw ValidationError(fmt::format("malformed report: {}", e.what()));
  }
  if (files.empty()) {
    throw ValidationError(
        "report has no figure data; enable 'figures' or 'calibrate_then_nms' in the "
        "run config");
  }
  ensure_directory(out_dir);
  std::vector<std::filesystem::path> written;
  for (const auto& [name, text] : files) {
    write_file_atomic(out_dir / name, text);
    written.push_back(out_dir / name);
  }
  return written;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out,
            std::ostream& err, bool color) {
  CLI::App app{"Confidence calibration tooling for object detectors", "detcal"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  std::string report_path;
  std::uint64_t seed = 0;
  std::string format = "table";

  auto* evaluate = app.add_subcommand("evaluate", "Run the calibration protocol");
  evaluate->add_option("--config", config_path, "Run configuration (JSON)")->required();
  evaluate->add_option("--out", out_dir, "Output directory (overrides config)");
  auto* evaluate_seed = evaluate->add_option("--seed", seed, "Master seed override");
  evaluate->add_option("--format", format, "What to print: json, csv or table")
      ->check(CLI::IsMember({"json", "csv", "table"}));

  auto* calibrate = app.add_subcommand("calibrate", "Fit and save histogram calibrators");
  calibrate->add_option("--config", config_path, "Run configuration (JSON)")->required();
  calibrate->add_option("--out", out_dir, "Output directory (overrides config)");
  auto* calibrate_seed = calibrate->add_option("--seed", seed, "Seed override");

  auto* simulate = app.add_subcommand("simulate", "Write a synthetic dataset");
  simulate->add_option("--config", config_path, "Generator configuration (JSON)")->required();
  simulate->add_option("--out", out_dir, "Output directory")->required();
  auto* simulate_seed = simulate->add_option("--seed", seed, "Generator seed override");

  auto* plot = app.add_subcommand("plot", "Render report figures as SVG");
  plot->add_option("--report", report_path, "report.json from evaluate")->required();
  plot->add_option("--out", out_dir, "Output directory")->required();

  std::vector<const char*> argv;
  argv.push_back("detcal");
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error[" << to_string(ErrorCategory::kValidation) << "]: " << one_line(e.what())
        << "\n";
    return static_cast<int>(ErrorCategory::kValidation);
  }

  auto seed_override = [&](const CLI::Option* opt) {
    return opt->count() > 0 ? std::optional<std::uint64_t>(seed) : std::nullopt;
  };
  auto out_override = [&]() {
    return out_dir.empty() ? std::nullopt
                           : std::optional<std::filesystem::path>(out_dir);
  };

  try {
    if (evaluate->parsed()) {
      const EvaluateResult result =
          cmd_evaluate(config_path, out_override(), seed_override(evaluate_seed));
      if (format == "json") {
        out << report_to_json(result.report).dump(1) << "\n";
      } else if (format == "csv") {
        out << report_to_csv(result.report);
      } else {
        out << report_to_table(result.report, color);
      }
    } else if (calibrate->parsed()) {
      for (const auto& path :
           cmd_calibrate(config_path, out_override(), seed_override(calibrate_seed))) {
        out << path.string() << "\n";
      }
    } else if (simulate->parsed()) {
      cmd_simulate(config_path, out_dir, seed_override(simulate_seed));
      out << (std::filesystem::path(out_dir) / kGroundTruthFileName).string() << "\n"
          << (std::filesystem::path(out_dir) / kDetectionsFileName).string() << "\n";
    } else if (plot->parsed()) {
      for (const auto& path : cmd_plot(report_path, out_dir)) {
        out << path.string() << "\n";
      }
    }
  } catch (const Error& e) {
    err << "error[" << to_string(e.category()) << "]: " << one_line(e.what()) << "\n";
    return static_cast<int>(e.category());
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error[" << to_string(ErrorCategory::kIo) << "]: " << one_line(e.what()) << "\n";
    return static_cast<int>(ErrorCategory::kIo);
  }
  return 0;
}

}  // namespace detcal
