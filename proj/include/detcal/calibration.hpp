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
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "detcal/metrics.hpp"

namespace detcal {

/// What apply() returns for a bin that saw no training samples.
enum class EmptyBinFallback {
  kIdentity,         // raw confidence unchanged
  kGlobalPrecision,  // precision over the whole training set
  kNearestOccupied,  // value of the closest occupied bin in index space
};

std::string_view to_string(EmptyBinFallback fallback);
EmptyBinFallback parse_empty_bin_fallback(std::string_view name);

/// Multivariate histogram binning: each occupied bin maps to the precision
/// observed in it during training. Immutable once fitted.
class HistogramCalibrator {
 public:
  struct Entry {
    std::uint64_t index = 0;
    std::size_t count = 0;
    std::size_t positives = 0;
    double value = 0.0;  // positives / count

    friend bool operator==(const Entry&, const Entry&) = default;
  };

  /// Throws ValidationError when `train` is empty.
  static HistogramCalibrator fit(
      std::span<const MatchedSample> train, BinningScheme scheme,
      EmptyBinFallback fallback = EmptyBinFallback::kIdentity);

  double apply(const MatchedSample& sample) const;
  // Same samples with confidence replaced; geometry and flags untouched.
  std::vector<MatchedSample> apply_all(
      std::span<const MatchedSample> samples) const;

  std::optional<double> lookup(std::uint64_t bin) const;

  const BinningScheme& scheme() const { return scheme_; }
  EmptyBinFallback fallback() const { return fallback_; }
  const std::vector<Entry>& entries() const { return entries_; }
  double global_precision() const { return global_precision_; }

  nlohmann::json to_json() const;
  static HistogramCalibrator from_json(const nlohmann::json& document);

  friend bool operator==(const HistogramCalibrator&,
                         const HistogramCalibrator&) = default;

 private:
  HistogramCalibrator(BinningScheme scheme, EmptyBinFallback fallback,
                      std::vector<Entry> entries);

  double nearest_occupied(std::uint64_t bin) const;

  BinningScheme scheme_;
  EmptyBinFallback fallback_;
  std::vector<Entry> entries_;  // ascending index
  double global_precision_ = 0.0;
};

}  // namespace detcal
