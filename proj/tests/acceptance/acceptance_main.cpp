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

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <unistd.h>

#include "detcal/cli.hpp"
#include "detcal/calibration.hpp"
#include "detcal/error.hpp"
#include "detcal/experiment.hpp"
#include "detcal/metrics.hpp"
#include "detcal/postprocess.hpp"
#include "detcal/synthetic.hpp"
#include "oracles.hpp"

namespace fs = std::filesystem;
using namespace detcal;

namespace {

// Pinned from detcal_pin_oracles (4000 replicates of a 15000-sample test set).
constexpr double kDistortedBaselineMean = 0.105306;
constexpr double kDistortedBaselineSd = 0.003403;

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  int id;
  std::string name;
  double budget_seconds;
  std::function<Outcome()> run;
};

fs::path g_data_dir;
fs::path g_work_dir;

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

Outcome dece_oracle() {
  std::mt19937_64 rng(1001);
  double worst = 0.0;
  int mismatched_counts = 0;
  int no_retained = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const FeatureSubset subset = kAllFeatureSubsets[trial % 4];
    const auto defaults = BinningScheme::for_dece(subset).bins_per_dim();
    std::vector<std::size_t> bins;
    for (std::size_t d : defaults) bins.push_back(1 + rng() % d);
    const std::size_t n = 1 + rng() % 5000;
    const std::size_t min_count = 1 + rng() % 10;
    const auto samples = testing::random_samples(rng, n);
    const auto ref = testing::naive_d_ece(samples, subset, bins, min_count);
    try {
      const auto got = compute_d_ece(samples, BinningScheme(subset, bins),
                                     DEceOptions{min_count});
      worst = std::max(worst, std::fabs(got.d_ece - ref.d_ece));
      if (got.neglected_bin_count != ref.neglected_bins ||
          got.empty_bin_count != ref.empty_bins ||
          got.retained_sample_count != ref.retained_samples) {
        ++mismatched_counts;
      }
    } catch (const NoRetainedSamplesError&) {
      ++no_retained;
      if (ref.retained_samples != 0) ++mismatched_counts;
    }
  }
  return {worst <= 1e-12 && mismatched_counts == 0,
          fmt::format("100 instances, max |diff| {:.2e}, count mismatches {}, "
                      "all-neglected {}",
                      worst, mismatched_counts, no_retained)};
}

Outcome nms_oracle() {
  std::mt19937_64 rng(2002);
  std::uniform_real_distribution<double> threshold(0.05, 0.95);
  int mismatches = 0;
  std::size_t boxes = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const auto dets = testing::random_detections(rng, 1 + rng() % 500, 1 + trial % 3);
    const double t = threshold(rng);
    boxes += dets.size();
    if (nms(dets, t) != testing::reference_nms(dets, t)) ++mismatches;
  }
  return {mismatches == 0,
          fmt::format("100 instances, {} boxes, mismatches {}", boxes, mismatches)};
}

Outcome in_sample_recalibration() {
  std::mt19937_64 rng(3003);
  const auto samples = testing::random_samples(rng, 20000);
  double worst = 0.0;
  std::string parts;
  for (FeatureSubset subset : kAllFeatureSubsets) {
    const auto scheme = BinningScheme::for_calibration(subset);
    const auto cal = HistogramCalibrator::fit(samples, scheme);
    const double v = compute_d_ece(cal.apply_all(samples), scheme, DEceOptions{1}).d_ece;
    worst = std::max(worst, v);
    parts += fmt::format(" {}={:.1e}", to_string(subset), v);
  }
  return {worst <= 1e-9, "d_ece" + parts};
}

Outcome nms_degrades_calibration() {
  GeneratorConfig g;
  g.n_images = 200;
  g.gt_per_image = 10;
  g.cluster_size = 4;
  g.confidence_model = ConstantConfidence{0.25};
  g.seed = 4;
  const Dataset data = generate(g).to_dataset();
  const auto scheme = BinningScheme::for_dece(FeatureSubset::kConfOnly);
  const MatchConfig mc{0.5, true};

  const auto white = prepare_samples(data, PipelineConfig{}, mc);
  const auto black = prepare_samples(data, PipelineConfig({Nms{0.5}}), mc);
  const double before = compute_d_ece(white, scheme).d_ece;
  const double after = compute_d_ece(black, scheme).d_ece;

  // Same construction through the full protocol.
  ExperimentConfig c;
  c.variants = {PipelineVariant{"white-box raw", PipelineConfig{}},
                PipelineVariant{"NMS@0.5 raw", PipelineConfig({Nms{0.5}})}};
  c.taus = {0.5};
  c.subsets = {FeatureSubset::kConfOnly};
  c.split_mode = SplitMode::kPerImage;
  const auto report = run_experiment(c, data);
  const double protocol_before = report.cells[0].baseline.mean;
  const double protocol_after = report.cells[1].baseline.mean;

  const bool pass = before == 0.0 && std::fabs(after - 0.75) <= 1e-12 &&
                    protocol_before == 0.0 && std::fabs(protocol_after - 0.75) <= 1e-12;
  return {pass, fmt::format("n=4: white-box {:.3g}, NMS@0.5 {:.15f}; protocol means "
                            "{:.3g} / {:.15f}",
                            before, after, protocol_before, protocol_after)};
}

Outcome calibration_improves_held_out() {
  GeneratorConfig g;
  g.n_images = 2500;
  g.gt_per_image = 20;
  g.cluster_size = 1;
  g.confidence_model = DistortedConfidence{0.5, 0.0};
  g.seed = 5;
  const Dataset data = generate(g).to_dataset();

  ExperimentConfig c;
  c.variants = {PipelineVariant{"raw", PipelineConfig{}}};
  c.taus = {0.5};
  c.subsets = {FeatureSubset::kConfOnly};
  c.repeats = 20;
  c.seed = 55;
  const auto report = run_experiment(c, data);
  const auto& cell = report.cells.at(0);

  // Cross-check the pinned constant with a fresh, smaller oracle run.
  const auto fresh = testing::simulate_distorted_baseline(0.5, 0.0, 0.05, 0.95, 15000,
                                                          20, 8, 300, 777);
  const double oracle_error = 4.0 * kDistortedBaselineSd / std::sqrt(300.0);
  const bool oracle_ok = std::fabs(fresh.mean - kDistortedBaselineMean) <= oracle_error;

  const double tolerance = 4.0 * kDistortedBaselineSd;
  const bool baseline_ok =
      std::fabs(cell.baseline.mean - kDistortedBaselineMean) <= tolerance;
  const bool improved = cell.calibrated.mean <= cell.baseline.mean / 3.0;
  return {cell.sample_count == 50000 && oracle_ok && baseline_ok && improved,
          fmt::format("|D|={}, baseline {:.5f} (oracle {:.5f} +/- {:.5f}, fresh {:.5f}), "
                      "calibrated {:.5f} (limit {:.5f})",
                      cell.sample_count, cell.baseline.mean, kDistortedBaselineMean,
                      tolerance, fresh.mean, cell.calibrated.mean,
                      cell.baseline.mean / 3.0)};
}

Outcome neglect_boundary() {
  std::vector<MatchedSample> samples;
  for (int i = 0; i < 7; ++i) samples.push_back(testing::sample(0.12, i < 3));
  for (int i = 0; i < 8; ++i) samples.push_back(testing::sample(0.62, i < 6));
  const auto scheme = BinningScheme::for_dece(FeatureSubset::kConfOnly);
  const auto r = compute_d_ece(samples, scheme, DEceOptions{8});
  const bool identity = r.neglected_bin_count + r.retained_bin_count +
                            r.empty_bin_count ==
                        r.total_bin_count;
  double kept_conf = 0.0;
  for (const auto& b : r.bins) {
    if (!b.neglected) kept_conf = b.conf;
  }
  const bool pass = r.neglected_bin_count == 1 && r.retained_bin_count == 1 &&
                    r.empty_bin_count == 18 && r.retained_sample_count == 8 &&
                    identity && kept_conf == 0.62 &&
                    r.d_ece == std::fabs(0.75 - 0.62);
  return {pass, fmt::format("neglected {} + retained {} + empty {} = {} of {}; "
                            "d_ece {:.6f}",
                            r.neglected_bin_count, r.retained_bin_count,
                            r.empty_bin_count,
                            r.neglected_bin_count + r.retained_bin_count +
                                r.empty_bin_count,
                            r.total_bin_count, r.d_ece)};
}

Outcome reduces_to_ece() {
  std::mt19937_64 rng(7007);
  double worst = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const auto samples = testing::random_samples(rng, 1 + rng() % 4000);
    std::vector<double> conf;
    std::vector<int> correct;
    for (const auto& s : samples) {
      conf.push_back(s.confidence);
      correct.push_back(s.matched ? 1 : 0);
    }
    const std::size_t bins = 1 + rng() % 30;
    const double got =
        compute_d_ece(samples, BinningScheme::uniform(FeatureSubset::kConfOnly, bins),
                      DEceOptions{1})
            .d_ece;
    worst = std::max(worst, std::fabs(got - testing::classical_ece(conf, correct, bins)));
  }
  return {worst <= 1e-12, fmt::format("50 instances, max |diff| {:.2e}", worst)};
}

Outcome protocol_determinism() {
  const fs::path dir = g_work_dir / "determinism";
  GeneratorConfig g;
  g.n_images = 1000;
  g.gt_per_image = 10;
  g.cluster_size = 2;
  g.jitter = 2.0;
  g.confidence_model = DistortedConfidence{0.7, 1.5};
  g.seed = 8;
  const SyntheticData data = generate(g);
  write_synthetic(data, dir / "data");
  std::ofstream(dir / "run.json") << R"({
  "ground_truth": "data/ground_truth.json",
  "detections": "data/detections.json",
  "variants": [
    {"name": "white-box", "stages": [{"type": "top_k", "k": 1000},
                                     {"type": "confidence_threshold", "threshold": 0.3}]},
    {"name": "NMS@0.5", "stages": [{"type": "top_k", "k": 1000},
                                   {"type": "nms", "iou_threshold": 0.5},
                                   {"type": "confidence_threshold", "threshold": 0.3}]}
  ],
  "taus": [0.5, 0.6, 0.75],
  "subsets": ["conf", "conf_center", "conf_scale", "full"],
  "repeats": 20,
  "seed": 2024,
  "threads": 0
})";
  const auto a = cmd_evaluate(dir / "run.json", dir / "a", std::nullopt);
  const auto b = cmd_evaluate(dir / "run.json", dir / "b", std::nullopt);
  const std::string ja = slurp(dir / "a" / kReportJsonName);
  const std::string jb = slurp(dir / "b" / kReportJsonName);
  const bool shape = a.report.cells.size() == 24 &&
                     a.report.cells[0].baseline.per_repeat.size() == 20;
  return {shape && !ja.empty() && ja == jb &&
              slurp(dir / "a" / kReportCsvName) == slurp(dir / "b" / kReportCsvName),
          fmt::format("{} detections, {} cells x 20 repeats, report {} bytes, identical={}",
                      data.detections.size(), a.report.cells.size(), ja.size(),
                      ja == jb)};
}

Outcome monotonicity() {
  GeneratorConfig g;
  g.n_images = 100;
  g.gt_per_image = 40;
  g.cluster_size = 2;
  g.jitter = 8.0;
  g.fp_rate = 1.0;
  g.confidence_model = DistortedConfidence{0.8, 0.0};
  g.seed = 9;
  const Dataset data = generate(g).to_dataset();

  std::vector<std::size_t> survivors;
  for (double t : {0.5, 0.75, 0.9}) {
    survivors.push_back(run_pipeline(data.detections, PipelineConfig({Nms{t}})).size());
  }
  std::vector<std::size_t> matched;
  for (double tau : {0.5, 0.6, 0.75}) {
    std::size_t m = 0;
    for (const auto& s : prepare_samples(data, PipelineConfig{}, MatchConfig{tau, true})) {
      m += s.matched ? 1 : 0;
    }
    matched.push_back(m);
  }
  const bool pass = survivors[0] <= survivors[1] && survivors[1] <= survivors[2] &&
                    matched[0] >= matched[1] && matched[1] >= matched[2] &&
                    survivors[0] < survivors[2] && matched[0] > matched[2];
  return {pass, fmt::format("survivors NMS@0.5/0.75/0.9 = {}/{}/{}; matched "
                            "tau 0.5/0.6/0.75 = {}/{}/{}",
                            survivors[0], survivors[1], survivors[2], matched[0],
                            matched[1], matched[2])};
}

Outcome golden_end_to_end() {
  const fs::path golden = g_data_dir / "golden";
  const fs::path out = g_work_dir / "golden";
  const auto evaluated = cmd_evaluate(golden / "run.json", out / "report", std::nullopt);
  const auto plots = cmd_plot(out / "report" / kReportJsonName, out / "plots");

  int compared = 0;
  std::vector<std::string> differing;
  const auto check = [&](const fs::path& produced, const fs::path& expected) {
    ++compared;
    if (!fs::exists(expected) || slurp(produced) != slurp(expected)) {
      differing.push_back(expected.filename().string());
    }
  };
  check(out / "report" / kReportCsvName, golden / "expected" / kReportCsvName);
  for (const auto& svg : plots) check(svg, golden / "expected" / svg.filename());
  std::size_t expected_svgs = 0;
  for (const auto& entry : fs::directory_iterator(golden / "expected")) {
    expected_svgs += entry.path().extension() == ".svg";
  }
  const bool pass = differing.empty() && expected_svgs == plots.size() &&
                    evaluated.report.config.seed != 0 && !plots.empty();
  std::string detail = fmt::format("{} images, {} files compared", 50, compared);
  if (!differing.empty()) detail += ", differing: " + differing.front();
  if (expected_svgs != plots.size()) {
    detail += fmt::format(", expected {} SVGs got {}", expected_svgs, plots.size());
  }
  return {pass, detail};
}

}  // namespace

int main(int argc, char** argv) {
  g_data_dir = fs::path(DETCAL_TEST_DATA_DIR);
  if (argc > 2 && std::string(argv[1]) == "--data") g_data_dir = argv[2];
  g_work_dir = fs::temp_directory_path() / fmt::format("detcal_acceptance_{}", ::getpid());
  fs::remove_all(g_work_dir);
  fs::create_directories(g_work_dir);

  const std::vector<Criterion> criteria = {
      {1, "D-ECE matches full-enumeration oracle", 10, dece_oracle},
      {2, "NMS matches quadratic reference", 5, nms_oracle},
      {3, "perfect in-sample recalibration", 5, in_sample_recalibration},
      {4, "NMS degrades perfectly calibrated clusters", 5, nms_degrades_calibration},
      {5, "calibration improves held-out D-ECE", 60, calibration_improves_held_out},
      {6, "bin-neglect boundary", 1, neglect_boundary},
      {7, "ConfOnly D-ECE reduces to classical ECE", 1, reduces_to_ece},
      {8, "protocol determinism", 120, protocol_determinism},
      {9, "monotonicity sweeps", 10, monotonicity},
      {10, "golden end-to-end ingestion", 10, golden_end_to_end},
  };

  int failures = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome outcome;
    try {
      outcome = c.run();
    } catch (const std::exception& e) {
      outcome = {false, fmt::format("exception: {}", e.what())};
    }
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_budget = seconds < c.budget_seconds;
    const bool pass = outcome.pass && in_budget;
    failures += pass ? 0 : 1;
    std::printf("[%s] criterion %2d: %s (%.2fs / %.0fs budget) -- %s%s\n",
                pass ? "PASS" : "FAIL", c.id, c.name.c_str(), seconds,
                c.budget_seconds, outcome.detail.c_str(),
                in_budget ? "" : " [over time budget]");
    std::fflush(stdout);
  }
  fs::remove_all(g_work_dir);
  std::printf("%d of %zu acceptance criteria passed\n",
              static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
