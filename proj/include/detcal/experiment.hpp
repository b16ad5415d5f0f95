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

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "detcal/calibration.hpp"
#include "detcal/dataset_io.hpp"
#include "detcal/matching.hpp"
#include "detcal/metrics.hpp"
#include "detcal/postprocess.hpp"

namespace detcal {

struct PipelineVariant {
  std::string name;
  PipelineConfig pipeline;
};

/// White-box (top-k + threshold) followed by NMS@0.5, NMS@0.75, NMS@0.9.
std::vector<PipelineVariant> default_variants();

enum class SplitMode {
  kPerSample,  // shuffle matched samples
  kPerImage,   // shuffle images; every sample follows its image
};

std::string_view to_string(SplitMode mode);
SplitMode parse_split_mode(std::string_view name);

struct FigureConfig {
  double tau = 0.6;
  FeatureSubset subset = FeatureSubset::kConfOnly;  // calibrator for the figure
  std::size_t reliability_bins = 20;
  std::size_t heatmap_grid = 10;
};

struct CalibrateThenNmsConfig {
  PipelineConfig white_box = PipelineConfig::white_box();
  double nms_threshold = 0.5;
  double tau = 0.6;
  FeatureSubset subset = FeatureSubset::kConfOnly;
  std::size_t reliability_bins = 20;
  std::size_t heatmap_grid = 10;
};

struct ExperimentConfig {
  std::vector<PipelineVariant> variants = default_variants();
  std::vector<double> taus = {0.5, 0.6, 0.75};
  std::vector<FeatureSubset> subsets = {kAllFeatureSubsets.begin(),
                                        kAllFeatureSubsets.end()};
  double split_ratio = 0.7;
  SplitMode split_mode = SplitMode::kPerSample;
  std::size_t repeats = 20;
  std::uint64_t seed = 0;
  // Per-subset overrides of the default bin counts.
  std::map<FeatureSubset, std::vector<std::size_t>> dece_bins;
  std::map<FeatureSubset, std::vector<std::size_t>> calibration_bins;
  DEceOptions dece;
  bool exclude_crowd = true;
  EmptyBinFallback fallback = EmptyBinFallback::kIdentity;
  // When set, calibrated samples below this confidence are dropped before
  // evaluation.
  std::optional<double> post_calibration_threshold;
  std::optional<FigureConfig> figures;
  std::optional<CalibrateThenNmsConfig> calibrate_then_nms;
  // 0 picks the hardware concurrency. Results do not depend on it.
  std::size_t threads = 1;

  void validate() const;
  BinningScheme dece_scheme(FeatureSubset subset) const;
  BinningScheme calibration_scheme(FeatureSubset subset) const;
};

struct Split {
  std::vector<MatchedSample> train;
  std::vector<MatchedSample> test;
};

/// Uniform partition without replacement, deterministic in `seed`.
/// Per sample: the train split holds floor(ratio * N) samples. Per image:
/// floor(ratio * images) images go to train. Throws ValidationError for
/// fewer than two samples or a ratio outside (0, 1).
Split split(std::span<const MatchedSample> samples, double ratio,
            std::uint64_t seed, SplitMode mode = SplitMode::kPerSample);

/// Seed of repeat r: splitmix64(master + r).
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t repeat_index);

/// Post-process and match one variant at one tau.
std::vector<MatchedSample> prepare_samples(const Dataset& data,
                                           const PipelineConfig& pipeline,
                                           const MatchConfig& match_config);

struct TrialResult {
  DEceReport baseline;
  DEceReport calibrated;
  std::size_t train_count = 0;
  std::size_t test_count = 0;
};

/// split -> fit on train -> D-ECE of raw and calibrated test samples.
TrialResult run_trial(std::span<const MatchedSample> samples,
                      FeatureSubset subset, std::uint64_t seed,
                      const ExperimentConfig& config);

TrialResult run_trial(const Dataset& data, const PipelineVariant& variant,
                      double tau, FeatureSubset subset, std::uint64_t seed,
                      const ExperimentConfig& config);

struct SeriesSummary {
  double mean = 0.0;
  std::vector<double> per_repeat;
  std::vector<std::uint64_t> neglected_bins;
};

struct ExperimentCell {
  std::string variant;
  double tau = 0.0;
  FeatureSubset subset = FeatureSubset::kConfOnly;
  std::size_t sample_count = 0;
  std::size_t matched_count = 0;
  std::vector<std::size_t> dece_bins;
  std::vector<std::size_t> calibration_bins;
  SeriesSummary baseline;
  SeriesSummary calibrated;
};

struct VariantSummary {
  std::string name;
  PipelineConfig pipeline;
  std::size_t sample_count = 0;  // |D| after post-processing
};

struct FigurePanel {
  // Confidence-only D-ECE as a fraction; unset when every bin was neglected.
  std::optional<double> d_ece;
  std::vector<ReliabilityBin> reliability;
  Heatmap heatmap;
};

struct FigureSet {
  std::string variant;
  double tau = 0.0;
  FeatureSubset subset = FeatureSubset::kConfOnly;
  FigurePanel baseline;
  FigurePanel calibrated;
};

struct CalibrateThenNmsResult {
  std::size_t train_images = 0;
  std::size_t test_images = 0;
  DEceReport white_box_baseline;    // raw test samples before NMS
  DEceReport white_box_calibrated;  // calibrated test samples before NMS
  DEceReport after_nms;             // calibrated, NMS, re-matched
  FigurePanel after_nms_figure;
};

/// Fit on white-box train images, rewrite test-image confidences, apply NMS
/// and re-match before measuring.
CalibrateThenNmsResult calibrate_then_nms(const Dataset& data,
                                          const CalibrateThenNmsConfig& settings,
                                          const ExperimentConfig& config);

struct ExperimentReport {
  ExperimentConfig config;
  std::vector<VariantSummary> variants;
  std::vector<ExperimentCell> cells;  // variant-major, then tau, then subset
  std::vector<FigureSet> figures;
  std::optional<CalibrateThenNmsResult> calibrate_then_nms;

  const ExperimentCell* find(std::string_view variant, double tau,
                             FeatureSubset subset) const;
};

/// repeats x variants x taus x subsets trials. Deterministic in config.seed
/// and independent of config.threads.
ExperimentReport run_experiment(const ExperimentConfig& config,
                                const Dataset& data);

}  // namespace detcal
