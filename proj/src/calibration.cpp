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

#include "detcal/calibration.hpp"

#include <algorithm>
#include <limits>
#include <map>

#include <fmt/format.h>

#include "detcal/error.hpp"

namespace detcal {
namespace {

constexpr std::string_view kFormatName = "detcal.histogram_calibrator";
constexpr int kFormatVersion = 1;

}  // namespace

std::string_view to_string(EmptyBinFallback fallback) {
  switch (fallback) {
    case EmptyBinFallback::kIdentity:
      return "identity";
    case EmptyBinFallback::kGlobalPrecision:
      return "global_precision";
    case EmptyBinFallback::kNearestOccupied:
      return "nearest_occupied";
  }
  return "unknown";
}

EmptyBinFallback parse_empty_bin_fallback(std::string_view name) {
  for (auto f : {EmptyBinFallback::kIdentity, EmptyBinFallback::kGlobalPrecision,
                 EmptyBinFallback::kNearestOccupied}) {
    if (name == to_string(f)) return f;
  }
  throw ValidationError(fmt::format(
      "unknown empty-bin fallback '{}' (expected identity, global_precision or "
      "nearest_occupied)",
      name));
}

HistogramCalibrator::HistogramCalibrator(BinningScheme scheme,
                                         EmptyBinFallback fallback,
                                         std::vector<Entry> entries)
    : scheme_(std::move(scheme)),
      fallback_(fallback),
      entries_(std::move(entries)) {
  std::size_t count = 0;
  std::size_t positives = 0;
  for (const Entry& e : entries_) {
    count += e.count;
    positives += e.positives;
  }
  global_precision_ =
      count == 0 ? 0.0
                 : static_cast<double>(positives) / static_cast<double>(count);
}

HistogramCalibrator HistogramCalibrator::fit(
    std::span<const MatchedSample> train, BinningScheme scheme,
    EmptyBinFallback fallback) {
  if (train.empty()) {
    throw ValidationError("cannot fit a calibrator on an empty training set");
  }
  std::map<std::uint64_t, Entry> bins;
  for (const auto& sample : train) {
    Entry& e = bins[scheme.assign(sample)];
    ++e.count;
    if (sample.matched) ++e.positives;
  }
  std::vector<Entry> entries;
  entries.reserve(bins.size());
  for (auto& [index, e] : bins) {
    e.index = index;
    e.value = static_cast<double>(e.positives) / static_cast<double>(e.count);
    entries.push_back(e);
  }
  return HistogramCalibrator(std::move(scheme), fallback, std::move(entries));
}

std::optional<double> HistogramCalibrator::lookup(std::uint64_t bin) const {
  auto it = std::lower_bound(
      entries_.begin(), entries_.end(), bin,
      [](const Entry& e, std::uint64_t key) { return e.index < key; });
  if (it == entries_.end() || it->index != bin) return std::nullopt;
  return it->value;
}

double HistogramCalibrator::nearest_occupied(std::uint64_t bin) const {
  const std::vector<std::size_t> target = scheme_.unflatten(bin);
  double best_distance = std::numeric_limits<double>::infinity();
  double best_value = 0.0;
  // Entries are scanned in ascending index, so ties keep the lowest index.
  for (const Entry& e : entries_) {
    const std::vector<std::size_t> other = scheme_.unflatten(e.index);
    double distance = 0.0;
    for (std::size_t d = 0; d < target.size(); ++d) {
      const double delta = static_cast<double>(target[d]) -
                           static_cast<double>(other[d]);
      distance += delta * delta;
    }
    if (distance < best_distance) {
      best_distance = distance;
      best_value = e.value;
    }
  }
  return best_value;
}

double HistogramCalibrator::apply(const MatchedSample& sample) const {
  const std::uint64_t bin = scheme_.assign(sample);
  if (auto value = lookup(bin)) return *value;
  switch (fallback_) {
    case EmptyBinFallback::kIdentity:
      return sample.confidence;
    case EmptyBinFallback::kGlobalPrecision:
      return global_precision_;
    case EmptyBinFallback::kNearestOccupied:
      return nearest_occupied(bin);
  }
  return sample.confidence;
}

std::vector<MatchedSample> HistogramCalibrator::apply_all(
    std::span<const MatchedSample> samples) const {
  std::vector<MatchedSample> out(samples.begin(), samples.end());
  for (auto& sample : out) sample.confidence = apply(sample);
  return out;
}

nlohmann::json HistogramCalibrator::to_json() const {
  using nlohmann::json;
  json ranges = json::array();
  for (const auto& r : scheme_.ranges()) ranges.push_back(json::array({r.lo, r.hi}));
  json bins = json::array();
  for (const Entry& e : entries_) {
    bins.push_back({{"index", e.index},
                    {"count", e.count},
                    {"positives", e.positives},
                    {"value", e.value}});
  }
  return json{{"format", kFormatName},
              {"version", kFormatVersion},
              {"scheme",
               {{"subset", to_string(scheme_.subset())},
                {"bins_per_dim", scheme_.bins_per_dim()},
                {"ranges", std::move(ranges)}}},
              {"fallback", to_string(fallback_)},
              {"bins", std::move(bins)}};
}

HistogramCalibrator HistogramCalibrator::from_json(
    const nlohmann::json& document) {
  try {
    if (document.at("format").get<std::string>() != kFormatName) {
      throw ValidationError("not a histogram calibrator document");
    }
    const int version = document.at("version").get<int>();
    if (version != kFormatVersion) {
      throw ValidationError(
          fmt::format("unsupported calibrator version {}", version));
    }
    const auto& scheme_json = document.at("scheme");
    std::vector<FeatureRange> ranges;
    for (const auto& r : scheme_json.at("ranges")) {
      ranges.push_back(FeatureRange{r.at(0).get<double>(), r.at(1).get<double>()});
    }
    BinningScheme scheme(
        parse_feature_subset(scheme_json.at("subset").get<std::string>()),
        scheme_json.at("bins_per_dim").get<std::vector<std::size_t>>(),
        std::move(ranges));

    std::vector<Entry> entries;
    for (const auto& b : document.at("bins")) {
      Entry e;
      e.index = b.at("index").get<std::uint64_t>();
      e.count = b.at("count").get<std::size_t>();
      e.positives = b.at("positives").get<std::size_t>();
      e.value = b.at("value").get<double>();
      if (e.index >= scheme.total_bins() || e.count == 0 ||
          e.positives > e.count || !(e.value >= 0.0 && e.value <= 1.0)) {
        throw ValidationError(
            fmt::format("calibrator bin {} is inconsistent", e.index));
      }
      if (!entries.empty() && entries.back().index >= e.index) {
        throw ValidationError("calibrator bins must be sorted by index");
      }
      entries.push_back(e);
    }
    return HistogramCalibrator(
        std::move(scheme),
        parse_empty_bin_fallback(document.at("fallback").get<std::string>()),
        std::move(entries));
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(fmt::format("malformed calibrator: {}", e.what()));
  }
}

}  // namespace detcal
