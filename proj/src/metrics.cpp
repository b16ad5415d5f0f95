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

#include "detcal/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <tuple>

#include <fmt/format.h>

#include "detcal/error.hpp"

namespace detcal {
namespace {

constexpr std::array<Feature, 1> kConfOnlyFeatures = {Feature::kConfidence};
constexpr std::array<Feature, 3> kConfCenterFeatures = {
    Feature::kConfidence, Feature::kCenterX, Feature::kCenterY};
constexpr std::array<Feature, 3> kConfScaleFeatures = {
    Feature::kConfidence, Feature::kHeight, Feature::kWidth};
constexpr std::array<Feature, 5> kFullFeatures = {
    Feature::kConfidence, Feature::kCenterX, Feature::kCenterY,
    Feature::kHeight, Feature::kWidth};

struct BinAccumulator {
  std::uint64_t index = 0;
  std::size_t count = 0;
  double sum_conf = 0.0;
  std::size_t positives = 0;
};

// Groups samples by bin. Entries are sorted by (bin, confidence, flag)
// before summation so every aggregate is independent of input order.
std::vector<BinAccumulator> aggregate(std::span<const MatchedSample> samples,
                                      const BinningScheme& scheme) {
  std::vector<std::tuple<std::uint64_t, double, bool>> keys;
  keys.reserve(samples.size());
  for (const auto& s : samples) {
    keys.emplace_back(scheme.assign(s), s.confidence, s.matched);
  }
  std::sort(keys.begin(), keys.end());

  std::vector<BinAccumulator> bins;
  for (const auto& [index, conf, matched] : keys) {
    if (bins.empty() || bins.back().index != index) {
      bins.push_back(BinAccumulator{index, 0, 0.0, 0});
    }
    BinAccumulator& acc = bins.back();
    ++acc.count;
    acc.sum_conf += conf;
    if (matched) ++acc.positives;
  }
  return bins;
}

}  // namespace

std::span<const Feature> features_of(FeatureSubset subset) {
  switch (subset) {
    case FeatureSubset::kConfOnly:
      return kConfOnlyFeatures;
    case FeatureSubset::kConfCenter:
      return kConfCenterFeatures;
    case FeatureSubset::kConfScale:
      return kConfScaleFeatures;
    case FeatureSubset::kFull:
      return kFullFeatures;
  }
  throw ValidationError("unknown feature subset");
}

double feature_value(const MatchedSample& sample, Feature feature) {
  switch (feature) {
    case Feature::kConfidence:
      return sample.confidence;
    case Feature::kCenterX:
      return sample.rel_cx;
    case Feature::kCenterY:
      return sample.rel_cy;
    case Feature::kHeight:
      return sample.rel_h;
    case Feature::kWidth:
      return sample.rel_w;
  }
  throw ValidationError("unknown feature");
}

std::string_view to_string(FeatureSubset subset) {
  switch (subset) {
    case FeatureSubset::kConfOnly:
      return "conf";
    case FeatureSubset::kConfCenter:
      return "conf_center";
    case FeatureSubset::kConfScale:
      return "conf_scale";
    case FeatureSubset::kFull:
      return "full";
  }
  return "unknown";
}

std::string_view heading(FeatureSubset subset) {
  switch (subset) {
    case FeatureSubset::kConfOnly:
      return "(p)";
    case FeatureSubset::kConfCenter:
      return "(p,cx,cy)";
    case FeatureSubset::kConfScale:
      return "(p,h,w)";
    case FeatureSubset::kFull:
      return "full";
  }
  return "unknown";
}

FeatureSubset parse_feature_subset(std::string_view name) {
  for (FeatureSubset subset : kAllFeatureSubsets) {
    if (name == to_string(subset)) return subset;
  }
  throw ValidationError(fmt::format(
      "unknown feature subset '{}' (expected conf, conf_center, conf_scale or "
      "full)",
      name));
}

BinningScheme::BinningScheme(FeatureSubset subset,
                             std::vector<std::size_t> bins_per_dim,
                             std::vector<FeatureRange> ranges)
    : subset_(subset),
      bins_per_dim_(std::move(bins_per_dim)),
      ranges_(std::move(ranges)) {
  const std::size_t dims = features_of(subset_).size();
  if (bins_per_dim_.size() == 1 && dims > 1) {
    bins_per_dim_.assign(dims, bins_per_dim_.front());
  }
  if (bins_per_dim_.size() != dims) {
    throw ValidationError(fmt::format(
        "subset '{}' needs {} bin counts, got {}", to_string(subset_), dims,
        bins_per_dim_.size()));
  }
  if (ranges_.empty()) ranges_.assign(dims, FeatureRange{});
  if (ranges_.size() != dims) {
    throw ValidationError(fmt::format("subset '{}' needs {} ranges, got {}",
                                      to_string(subset_), dims,
                                      ranges_.size()));
  }
  constexpr std::uint64_t kMaxBins = std::uint64_t{1} << 40;
  total_bins_ = 1;
  for (std::size_t d = 0; d < dims; ++d) {
    if (bins_per_dim_[d] < 1) {
      throw ValidationError("every axis needs at least one bin");
    }
    const FeatureRange& r = ranges_[d];
    if (!std::isfinite(r.lo) || !std::isfinite(r.hi) || !(r.hi > r.lo)) {
      throw ValidationError(
          fmt::format("invalid feature range [{}, {}]", r.lo, r.hi));
    }
    if (total_bins_ > kMaxBins / bins_per_dim_[d]) {
      throw ValidationError("binning scheme has too many bins");
    }
    total_bins_ *= bins_per_dim_[d];
  }
}

BinningScheme BinningScheme::uniform(FeatureSubset subset, std::size_t bins) {
  return BinningScheme(subset,
                       std::vector<std::size_t>(features_of(subset).size(), bins));
}

BinningScheme BinningScheme::for_dece(FeatureSubset subset) {
  switch (subset) {
    case FeatureSubset::kConfOnly:
      return uniform(subset, 20);
    case FeatureSubset::kConfCenter:
    case FeatureSubset::kConfScale:
      return uniform(subset, 8);
    case FeatureSubset::kFull:
      return uniform(subset, 5);
  }
  throw ValidationError("unknown feature subset");
}

BinningScheme BinningScheme::for_calibration(FeatureSubset subset) {
  switch (subset) {
    case FeatureSubset::kConfOnly:
      return uniform(subset, 15);
    case FeatureSubset::kConfCenter:
    case FeatureSubset::kConfScale:
      return uniform(subset, 5);
    case FeatureSubset::kFull:
      return uniform(subset, 3);
  }
  throw ValidationError("unknown feature subset");
}

std::size_t BinningScheme::axis_bin(std::size_t dim, double value) const {
  if (std::isnan(value)) throw ValidationError("cannot bin a NaN feature");
  const FeatureRange& r = ranges_[dim];
  const std::size_t n = bins_per_dim_[dim];
  const double x = std::clamp(value, r.lo, r.hi);
  const double scaled = (x - r.lo) * static_cast<double>(n) / (r.hi - r.lo);
  const auto index = static_cast<std::size_t>(std::floor(scaled));
  return std::min(index, n - 1);
}

std::uint64_t BinningScheme::assign(const MatchedSample& sample) const {
  const auto features = features_of(subset_);
  std::uint64_t flat = 0;
  for (std::size_t d = 0; d < features.size(); ++d) {
    flat = flat * bins_per_dim_[d] + axis_bin(d, feature_value(sample, features[d]));
  }
  return flat;
}

std::uint64_t BinningScheme::flatten(
    std::span<const std::size_t> multi_index) const {
  if (multi_index.size() != bins_per_dim_.size()) {
    throw ValidationError("multi-index has the wrong dimensionality");
  }
  std::uint64_t flat = 0;
  for (std::size_t d = 0; d < multi_index.size(); ++d) {
    if (multi_index[d] >= bins_per_dim_[d]) {
      throw ValidationError("multi-index out of range");
    }
    flat = flat * bins_per_dim_[d] + multi_index[d];
  }
  return flat;
}

std::vector<std::size_t> BinningScheme::unflatten(std::uint64_t flat) const {
  if (flat >= total_bins_) throw ValidationError("bin index out of range");
  std::vector<std::size_t> out(bins_per_dim_.size());
  for (std::size_t d = bins_per_dim_.size(); d-- > 0;) {
    out[d] = static_cast<std::size_t>(flat % bins_per_dim_[d]);
    flat /= bins_per_dim_[d];
  }
  return out;
}

DEceReport compute_d_ece(std::span<const MatchedSample> samples,
                         const BinningScheme& scheme,
                         const DEceOptions& options) {
  const std::size_t min_count = std::max<std::size_t>(options.min_bin_count, 1);
  DEceReport report;
  report.total_sample_count = samples.size();
  report.total_bin_count = scheme.total_bins();

  for (const BinAccumulator& acc : aggregate(samples, scheme)) {
    BinStatistics stats;
    stats.index = acc.index;
    stats.count = acc.count;
    stats.conf = acc.sum_conf / static_cast<double>(acc.count);
    stats.prec =
        static_cast<double>(acc.positives) / static_cast<double>(acc.count);
    stats.neglected = acc.count < min_count;
    if (stats.neglected) {
      ++report.neglected_bin_count;
    } else {
      ++report.retained_bin_count;
      report.retained_sample_count += acc.count;
    }
    report.bins.push_back(stats);
  }
  report.occupied_bin_count = report.bins.size();
  report.empty_bin_count = report.total_bin_count - report.occupied_bin_count;

  if (report.retained_sample_count == 0) {
    throw NoRetainedSamplesError(fmt::format(
        "no retained samples: {} samples in {} occupied bins, none reaching "
        "the minimum of {}",
        samples.size(), report.occupied_bin_count, min_count));
  }

  const double denominator = static_cast<double>(
      options.normalization == WeightNormalization::kRetainedSamples
          ? report.retained_sample_count
          : report.total_sample_count);
  double d_ece = 0.0;
  for (const BinStatistics& stats : report.bins) {
    if (stats.neglected) continue;
    d_ece += static_cast<double>(stats.count) / denominator *
             std::abs(stats.prec - stats.conf);
  }
  report.d_ece = d_ece;
  return report;
}

std::vector<ReliabilityBin> reliability_data(
    std::span<const MatchedSample> samples, std::size_t n_conf_bins) {
  if (n_conf_bins < 1) {
    throw ValidationError("reliability diagram needs at least one bin");
  }
  const BinningScheme scheme = BinningScheme::uniform(FeatureSubset::kConfOnly,
                                                      n_conf_bins);
  std::vector<ReliabilityBin> out(n_conf_bins);
  for (std::size_t i = 0; i < n_conf_bins; ++i) {
    out[i].lo = static_cast<double>(i) / static_cast<double>(n_conf_bins);
    out[i].hi = static_cast<double>(i + 1) / static_cast<double>(n_conf_bins);
  }
  for (const BinAccumulator& acc : aggregate(samples, scheme)) {
    ReliabilityBin& bin = out[acc.index];
    bin.count = acc.count;
    bin.conf = acc.sum_conf / static_cast<double>(acc.count);
    bin.prec =
        static_cast<double>(acc.positives) / static_cast<double>(acc.count);
  }
  return out;
}

Heatmap position_heatmap(std::span<const MatchedSample> samples,
                         std::size_t grid_n, std::size_t n_conf_bins,
                         std::size_t min_bin_count) {
  if (grid_n < 1) throw ValidationError("heatmap grid needs at least one cell");
  const BinningScheme grid(FeatureSubset::kConfCenter, {1, grid_n, grid_n});
  const BinningScheme conf_scheme =
      BinningScheme::uniform(FeatureSubset::kConfOnly, n_conf_bins);

  std::vector<std::vector<MatchedSample>> per_cell(grid_n * grid_n);
  for (const auto& s : samples) {
    const std::size_t col = grid.axis_bin(1, s.rel_cx);
    const std::size_t row = grid.axis_bin(2, s.rel_cy);
    per_cell[row * grid_n + col].push_back(s);
  }

  Heatmap heatmap;
  heatmap.grid_n = grid_n;
  heatmap.cells.resize(per_cell.size());
  const DEceOptions options{min_bin_count, WeightNormalization::kRetainedSamples};
  for (std::size_t c = 0; c < per_cell.size(); ++c) {
    heatmap.cells[c].count = per_cell[c].size();
    if (per_cell[c].empty()) continue;
    try {
      heatmap.cells[c].value =
          compute_d_ece(per_cell[c], conf_scheme, options).d_ece;
    } catch (const NoRetainedSamplesError&) {
      // cell stays empty
    }
  }
  return heatmap;
}

}  // namespace detcal
