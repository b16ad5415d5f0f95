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

#include "detcal/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <numeric>
#include <thread>
#include <unordered_map>
#include <unordered_set>

#include <fmt/format.h>

#include "detcal/error.hpp"
#include "detcal/random.hpp"

namespace detcal {
namespace {

std::vector<ImageId> images_in_order(std::span<const MatchedSample> samples) {
  std::vector<ImageId> order;
  std::unordered_set<ImageId> seen;
  for (const auto& s : samples) {
    if (seen.insert(s.image_id).second) order.push_back(s.image_id);
  }
  return order;
}

std::unordered_set<ImageId> draw_train_images(std::vector<ImageId> images,
                                              double ratio, std::uint64_t seed) {
  Rng rng(seed);
  rng.shuffle(std::span<ImageId>(images));
  const auto n_train = static_cast<std::size_t>(
      std::floor(ratio * static_cast<double>(images.size())));
  return {images.begin(), images.begin() + static_cast<std::ptrdiff_t>(n_train)};
}

void validate_ratio(double ratio) {
  if (!(ratio > 0.0 && ratio < 1.0)) {
    throw ValidationError(fmt::format("split ratio {} outside (0, 1)", ratio));
  }
}

std::vector<MatchedSample> drop_below(std::vector<MatchedSample> samples,
                                      std::optional<double> threshold) {
  if (!threshold) return samples;
  std::erase_if(samples, [&](const MatchedSample& s) {
    return s.confidence < *threshold;
  });
  return samples;
}

FigurePanel make_panel(std::span<const MatchedSample> samples,
                       std::size_t reliability_bins, std::size_t heatmap_grid,
                       const ExperimentConfig& config) {
  FigurePanel panel;
  const BinningScheme conf_scheme = config.dece_scheme(FeatureSubset::kConfOnly);
  try {
    panel.d_ece = compute_d_ece(samples, conf_scheme, config.dece).d_ece;
  } catch (const NoRetainedSamplesError&) {
  }
  panel.reliability = reliability_data(samples, reliability_bins);
  panel.heatmap = position_heatmap(samples, heatmap_grid,
                                   conf_scheme.bins_per_dim().front(),
                                   config.dece.min_bin_count);
  return panel;
}

// Runs fn(i) for i in [0, count) on up to `threads` workers. Rethrows the
// exception of the lowest failing index so failures are reproducible.
template <class Fn>
void parallel_for(std::size_t count, std::size_t threads, Fn fn) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, count);
  if (threads <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::mutex mutex;
  std::size_t failed_index = count;
  std::exception_ptr failure;
  auto worker = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(mutex);
        if (i < failed_index) {
          failed_index = i;
          failure = std::current_exception();
        }
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace

std::vector<PipelineVariant> default_variants() {
  return {
      {"white-box", PipelineConfig::white_box()},
      {"NMS@0.5", PipelineConfig::black_box(0.5)},
      {"NMS@0.75", PipelineConfig::black_box(0.75)},
      {"NMS@0.9", PipelineConfig::black_box(0.9)},
  };
}

std::string_view to_string(SplitMode mode) {
  return mode == SplitMode::kPerImage ? "image" : "sample";
}

SplitMode parse_split_mode(std::string_view name) {
  if (name == "sample") return SplitMode::kPerSample;
  if (name == "image") return SplitMode::kPerImage;
  throw ValidationError(
      fmt::format("unknown split mode '{}' (expected sample or image)", name));
}

void ExperimentConfig::validate() const {
  validate_ratio(split_ratio);
  if (repeats < 1) throw ValidationError("repeats must be >= 1");
  if (variants.empty()) throw ValidationError("at least one variant is required");
  if (taus.empty()) throw ValidationError("at least one tau is required");
  if (subsets.empty()) throw ValidationError("at least one feature subset is required");
  std::unordered_set<std::string> names;
  for (const auto& v : variants) {
    if (v.name.empty()) throw ValidationError("variant names must be non-empty");
    if (!names.insert(v.name).second) {
      throw ValidationError(fmt::format("duplicate variant name '{}'", v.name));
    }
  }
  for (double tau : taus) MatchConfig{tau, exclude_crowd}.validate();
  for (FeatureSubset subset : subsets) {
    dece_scheme(subset);
    calibration_scheme(subset);
  }
  if (dece.min_bin_count < 1) throw ValidationError("min_bin_count must be >= 1");
  if (post_calibration_threshold &&
      !(*post_calibration_threshold >= 0.0 && *post_calibration_threshold < 1.0)) {
    throw ValidationError("post-calibration threshold outside [0, 1)");
  }
  if (figures) {
    MatchConfig{figures->tau, exclude_crowd}.validate();
    if (figures->reliability_bins < 1 || figures->heatmap_grid < 1) {
      throw ValidationError("figure bin counts must be >= 1");
    }
  }
  if (calibrate_then_nms) {
    const auto& c = *calibrate_then_nms;
    MatchConfig{c.tau, exclude_crowd}.validate();
    PipelineConfig({Nms{c.nms_threshold}});
    if (c.reliability_bins < 1 || c.heatmap_grid < 1) {
      throw ValidationError("figure bin counts must be >= 1");
    }
  }
}

BinningScheme ExperimentConfig::dece_scheme(FeatureSubset subset) const {
  if (auto it = dece_bins.find(subset); it != dece_bins.end()) {
    return BinningScheme(subset, it->second);
  }
  return BinningScheme::for_dece(subset);
}

BinningScheme ExperimentConfig::calibration_scheme(FeatureSubset subset) const {
  if (auto it = calibration_bins.find(subset); it != calibration_bins.end()) {
    return BinningScheme(subset, it->second);
  }
  return BinningScheme::for_calibration(subset);
}

Split split(std::span<const MatchedSample> samples, double ratio,
            std::uint64_t seed, SplitMode mode) {
  validate_ratio(ratio);
  if (samples.size() < 2) {
    throw ValidationError(
        fmt::format("cannot split {} samples into train and test", samples.size()));
  }
  Split out;
  if (mode == SplitMode::kPerImage) {
    std::vector<ImageId> images = images_in_order(samples);
    if (images.size() < 2) {
      throw ValidationError("per-image split needs samples from two images");
    }
    const auto train = draw_train_images(std::move(images), ratio, seed);
    for (const auto& s : samples) {
      (train.contains(s.image_id) ? out.train : out.test).push_back(s);
    }
    return out;
  }

  std::vector<std::size_t> order(samples.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  rng.shuffle(std::span<std::size_t>(order));
  const auto n_train = static_cast<std::size_t>(
      std::floor(ratio * static_cast<double>(samples.size())));
  std::vector<char> in_train(samples.size(), 0);
  for (std::size_t i = 0; i < n_train; ++i) in_train[order[i]] = 1;
  out.train.reserve(n_train);
  out.test.reserve(samples.size() - n_train);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    (in_train[i] ? out.train : out.test).push_back(samples[i]);
  }
  return out;
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t repeat_index) {
  return splitmix64(master + repeat_index);
}

std::vector<MatchedSample> prepare_samples(const Dataset& data,
                                           const PipelineConfig& pipeline,
                                           const MatchConfig& match_config) {
  const std::vector<Detection> processed = run_pipeline(data.detections, pipeline);
  return match(processed, data.ground_truth.objects, data.ground_truth.images,
               match_config);
}

TrialResult run_trial(std::span<const MatchedSample> samples,
                      FeatureSubset subset, std::uint64_t seed,
                      const ExperimentConfig& config) {
  const Split parts = split(samples, config.split_ratio, seed, config.split_mode);
  const HistogramCalibrator calibrator = HistogramCalibrator::fit(
      parts.train, config.calibration_scheme(subset), config.fallback);
  const BinningScheme scheme = config.dece_scheme(subset);

  TrialResult result;
  result.train_count = parts.train.size();
  result.test_count = parts.test.size();
  result.baseline = compute_d_ece(parts.test, scheme, config.dece);
  const std::vector<MatchedSample> calibrated = drop_below(
      calibrator.apply_all(parts.test), config.post_calibration_threshold);
  result.calibrated = compute_d_ece(calibrated, scheme, config.dece);
  return result;
}

TrialResult run_trial(const Dataset& data, const PipelineVariant& variant,
                      double tau, FeatureSubset subset, std::uint64_t seed,
                      const ExperimentConfig& config) {
  const std::vector<MatchedSample> samples = prepare_samples(
      data, variant.pipeline, MatchConfig{tau, config.exclude_crowd});
  return run_trial(samples, subset, seed, config);
}

CalibrateThenNmsResult calibrate_then_nms(const Dataset& data,
                                          const CalibrateThenNmsConfig& settings,
                                          const ExperimentConfig& config) {
  const MatchConfig match_config{settings.tau, config.exclude_crowd};
  const std::vector<Detection> white =
      run_pipeline(data.detections, settings.white_box);
  const std::vector<MatchedSample> samples = match(
      white, data.ground_truth.objects, data.ground_truth.images, match_config);

  std::vector<ImageId> images = images_in_order(samples);
  if (images.size() < 2) {
    throw ValidationError("calibrate-then-NMS needs detections in two images");
  }
  const std::size_t image_count = images.size();
  const auto train_images = draw_train_images(std::move(images), config.split_ratio,
                                              derive_seed(config.seed, 0));

  std::vector<MatchedSample> train;
  std::vector<MatchedSample> test;
  std::vector<Detection> test_detections;
  for (std::size_t i = 0; i < white.size(); ++i) {
    if (train_images.contains(white[i].image_id)) {
      train.push_back(samples[i]);
    } else {
      test.push_back(samples[i]);
      test_detections.push_back(white[i]);
    }
  }

  const HistogramCalibrator calibrator = HistogramCalibrator::fit(
      train, config.calibration_scheme(settings.subset), config.fallback);
  const BinningScheme scheme = config.dece_scheme(settings.subset);

  CalibrateThenNmsResult result;
  result.train_images = train_images.size();
  result.test_images = image_count - train_images.size();
  result.white_box_baseline = compute_d_ece(test, scheme, config.dece);

  std::vector<MatchedSample> calibrated = calibrator.apply_all(test);
  for (std::size_t i = 0; i < test_detections.size(); ++i) {
    test_detections[i].confidence = calibrated[i].confidence;
  }
  if (config.post_calibration_threshold) {
    test_detections = confidence_threshold(test_detections,
                                           *config.post_calibration_threshold);
    calibrated = drop_below(std::move(calibrated), config.post_calibration_threshold);
  }
  result.white_box_calibrated = compute_d_ece(calibrated, scheme, config.dece);

  const std::vector<Detection> survivors =
      run_pipeline(test_detections, PipelineConfig({Nms{settings.nms_threshold}}));
  const std::vector<MatchedSample> after = match(
      survivors, data.ground_truth.objects, data.ground_truth.images, match_config);
  result.after_nms = compute_d_ece(after, scheme, config.dece);
  result.after_nms_figure =
      make_panel(after, settings.reliability_bins, settings.heatmap_grid, config);
  return result;
}

const ExperimentCell* ExperimentReport::find(std::string_view variant, double tau,
                                             FeatureSubset subset) const {
  for (const auto& cell : cells) {
    if (cell.variant == variant && cell.tau == tau && cell.subset == subset) {
      return &cell;
    }
  }
  return nullptr;
}

ExperimentReport run_experiment(const ExperimentConfig& config,
                                const Dataset& data) {
  config.validate();
  ExperimentReport report;
  report.config = config;

  const std::size_t n_variants = config.variants.size();
  const std::size_t n_taus = config.taus.size();
  const std::size_t n_subsets = config.subsets.size();
  const std::size_t repeats = config.repeats;

  std::vector<std::vector<Detection>> processed(n_variants);
  for (std::size_t v = 0; v < n_variants; ++v) {
    processed[v] = run_pipeline(data.detections, config.variants[v].pipeline);
    report.variants.push_back(VariantSummary{
        config.variants[v].name, config.variants[v].pipeline, processed[v].size()});
  }

  std::vector<std::vector<MatchedSample>> samples(n_variants * n_taus);
  parallel_for(samples.size(), config.threads, [&](std::size_t i) {
    const std::size_t v = i / n_taus;
    const std::size_t t = i % n_taus;
    samples[i] = match(processed[v], data.ground_truth.objects,
                       data.ground_truth.images,
                       MatchConfig{config.taus[t], config.exclude_crowd});
  });

  // Trial index = ((sample_set * n_subsets) + subset) * repeats + repeat.
  const std::size_t n_trials = samples.size() * n_subsets * repeats;
  std::vector<double> baseline(n_trials), calibrated(n_trials);
  std::vector<std::uint64_t> baseline_neglected(n_trials), calibrated_neglected(n_trials);
  parallel_for(n_trials, config.threads, [&](std::size_t i) {
    const std::size_t r = i % repeats;
    const std::size_t s = (i / repeats) % n_subsets;
    const std::size_t set = i / (repeats * n_subsets);
    const TrialResult trial = run_trial(samples[set], config.subsets[s],
                                        derive_seed(config.seed, r), config);
    baseline[i] = trial.baseline.d_ece;
    calibrated[i] = trial.calibrated.d_ece;
    baseline_neglected[i] = trial.baseline.neglected_bin_count;
    calibrated_neglected[i] = trial.calibrated.neglected_bin_count;
  });

  for (std::size_t set = 0; set < samples.size(); ++set) {
    const std::size_t v = set / n_taus;
    const std::size_t t = set % n_taus;
    const std::size_t matched = static_cast<std::size_t>(std::count_if(
        samples[set].begin(), samples[set].end(),
        [](const MatchedSample& m) { return m.matched; }));
    for (std::size_t s = 0; s < n_subsets; ++s) {
      ExperimentCell cell;
      cell.variant = config.variants[v].name;
      cell.tau = config.taus[t];
      cell.subset = config.subsets[s];
      cell.sample_count = samples[set].size();
      cell.matched_count = matched;
      cell.dece_bins = config.dece_scheme(cell.subset).bins_per_dim();
      cell.calibration_bins = config.calibration_scheme(cell.subset).bins_per_dim();
      const std::size_t first = (set * n_subsets + s) * repeats;
      for (std::size_t r = 0; r < repeats; ++r) {
        cell.baseline.per_repeat.push_back(baseline[first + r]);
        cell.calibrated.per_repeat.push_back(calibrated[first + r]);
        cell.baseline.neglected_bins.push_back(baseline_neglected[first + r]);
        cell.calibrated.neglected_bins.push_back(calibrated_neglected[first + r]);
      }
      const double n = static_cast<double>(repeats);
      cell.baseline.mean = std::accumulate(cell.baseline.per_repeat.begin(),
                                           cell.baseline.per_repeat.end(), 0.0) / n;
      cell.calibrated.mean =
          std::accumulate(cell.calibrated.per_repeat.begin(),
                          cell.calibrated.per_repeat.end(), 0.0) / n;
      report.cells.push_back(std::move(cell));
    }
  }

  if (config.figures) {
    const FigureConfig& fig = *config.figures;
    for (std::size_t v = 0; v < n_variants; ++v) {
      const std::vector<MatchedSample> figure_samples =
          match(processed[v], data.ground_truth.objects, data.ground_truth.images,
                MatchConfig{fig.tau, config.exclude_crowd});
      const Split parts = split(figure_samples, config.split_ratio,
                                derive_seed(config.seed, 0), config.split_mode);
      const HistogramCalibrator calibrator = HistogramCalibrator::fit(
          parts.train, config.calibration_scheme(fig.subset), config.fallback);
      FigureSet set;
      set.variant = config.variants[v].name;
      set.tau = fig.tau;
      set.subset = fig.subset;
      set.baseline = make_panel(parts.test, fig.reliability_bins,
                                fig.heatmap_grid, config);
      const std::vector<MatchedSample> cal = drop_below(
          calibrator.apply_all(parts.test), config.post_calibration_threshold);
      set.calibrated = make_panel(cal, fig.reliability_bins, fig.heatmap_grid, config);
      report.figures.push_back(std::move(set));
    }
  }

  if (config.calibrate_then_nms) {
    report.calibrate_then_nms =
        calibrate_then_nms(data, *config.calibrate_then_nms, config);
  }
  return report;
}

}  // namespace detcal
