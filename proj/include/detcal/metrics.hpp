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

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "detcal/matching.hpp"

namespace detcal {

enum class Feature { kConfidence, kCenterX, kCenterY, kHeight, kWidth };

/// Which sample features span the binning space. Confidence is always the
/// first dimension.
enum class FeatureSubset {
  kConfOnly,    // (p)
  kConfCenter,  // (p, cx, cy)
  kConfScale,   // (p, h, w)
  kFull,        // (p, cx, cy, h, w)
};

inline constexpr std::array<FeatureSubset, 4> kAllFeatureSubsets = {
    FeatureSubset::kConfOnly, FeatureSubset::kConfCenter,
    FeatureSubset::kConfScale, FeatureSubset::kFull};

std::span<const Feature> features_of(FeatureSubset subset);
double feature_value(const MatchedSample& sample, Feature feature);

// Machine names: conf, conf_center, conf_scale, full.
std::string_view to_string(FeatureSubset subset);
// Column headings used in text tables.
std::string_view heading(FeatureSubset subset);
FeatureSubset parse_feature_subset(std::string_view name);

struct FeatureRange {
  double lo = 0.0;
  double hi = 1.0;
  friend bool operator==(const FeatureRange&, const FeatureRange&) = default;
};

/// Equal-width partition of each feature range into N_k bins.
///
/// Intervals are left-closed and right-open except the last one, which is
/// closed so that hi itself lands in bin N_k - 1. Values outside the range
/// are clamped first. Bins are flattened row-major with the confidence axis
/// most significant.
class BinningScheme {
 public:
  BinningScheme(FeatureSubset subset, std::vector<std::size_t> bins_per_dim,
                std::vector<FeatureRange> ranges = {});

  static BinningScheme uniform(FeatureSubset subset, std::size_t bins);
  // Evaluation defaults: 20 bins for (p), 8 per axis for the 3-d subsets,
  // 5 per axis for the full feature set.
  static BinningScheme for_dece(FeatureSubset subset);
  // Calibration defaults: 15, 5 and 3 bins respectively.
  static BinningScheme for_calibration(FeatureSubset subset);

  FeatureSubset subset() const { return subset_; }
  std::size_t dimensions() const { return bins_per_dim_.size(); }
  const std::vector<std::size_t>& bins_per_dim() const { return bins_per_dim_; }
  const std::vector<FeatureRange>& ranges() const { return ranges_; }
  std::uint64_t total_bins() const { return total_bins_; }

  std::size_t axis_bin(std::size_t dim, double value) const;
  std::uint64_t assign(const MatchedSample& sample) const;
  std::uint64_t flatten(std::span<const std::size_t> multi_index) const;
  std::vector<std::size_t> unflatten(std::uint64_t flat) const;

  friend bool operator==(const BinningScheme&, const BinningScheme&) = default;

 private:
  FeatureSubset subset_;
  std::vector<std::size_t> bins_per_dim_;
  std::vector<FeatureRange> ranges_;
  std::uint64_t total_bins_ = 1;
};

struct BinStatistics {
  std::uint64_t index = 0;
  std::size_t count = 0;
  double conf = 0.0;  // mean confidence
  double prec = 0.0;  // mean match flag
  bool neglected = false;
};

enum class WeightNormalization {
  kRetainedSamples,  // weights over kept bins sum to 1
  kAllSamples,       // |D| counts neglected samples too
};

struct DEceOptions {
  std::size_t min_bin_count = 8;
  WeightNormalization normalization = WeightNormalization::kRetainedSamples;
};

/// Bin accounting always satisfies
///   neglected_bin_count + retained_bin_count + empty_bin_count == total_bin_count.
struct DEceReport {
  double d_ece = 0.0;
  std::size_t total_sample_count = 0;
  std::size_t retained_sample_count = 0;
  std::uint64_t total_bin_count = 0;
  std::uint64_t occupied_bin_count = 0;
  std::uint64_t retained_bin_count = 0;
  // Occupied bins holding fewer than min_bin_count samples.
  std::uint64_t neglected_bin_count = 0;
  std::uint64_t empty_bin_count = 0;
  // Occupied bins only, ascending index, neglected ones flagged.
  std::vector<BinStatistics> bins;

  // Alternate reading of the neglect count that also includes empty bins.
  std::uint64_t neglected_or_empty_bin_count() const {
    return neglected_bin_count + empty_bin_count;
  }
};

/// Detection expected calibration error: sum over retained bins of
/// weight * |prec(n) - conf(n)|. Throws NoRetainedSamplesError when no bin
/// reaches min_bin_count. The result does not depend on sample order.
DEceReport compute_d_ece(std::span<const MatchedSample> samples,
                         const BinningScheme& scheme,
                         const DEceOptions& options = {});

struct ReliabilityBin {
  double lo = 0.0;
  double hi = 0.0;
  std::size_t count = 0;
  // Unset for empty bins.
  std::optional<double> conf;
  std::optional<double> prec;

  std::optional<double> gap() const {
    if (!conf || !prec) return std::nullopt;
    return *prec - *conf;
  }
};

/// Confidence-only histogram over [0, 1]; one entry per bin, empty bins
/// included.
std::vector<ReliabilityBin> reliability_data(
    std::span<const MatchedSample> samples, std::size_t n_conf_bins);

struct HeatmapCell {
  std::size_t count = 0;
  std::optional<double> value;  // unset when nothing was retained
};

/// grid_n x grid_n cells over relative (cx, cy); row-major with rows
/// indexing cy.
struct Heatmap {
  std::size_t grid_n = 0;
  std::vector<HeatmapCell> cells;

  const HeatmapCell& at(std::size_t row, std::size_t col) const {
    return cells[row * grid_n + col];
  }
};

/// Per-cell confidence-only ECE, using the same neglect rule as
/// compute_d_ece.
Heatmap position_heatmap(std::span<const MatchedSample> samples,
                         std::size_t grid_n, std::size_t n_conf_bins,
                         std::size_t min_bin_count);

}  // namespace detcal
