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
#include <random>
#include <vector>

#include "detcal/dataset_io.hpp"
#include "detcal/matching.hpp"
#include "detcal/metrics.hpp"

namespace detcal::testing {

MatchedSample sample(double conf, bool matched, double cx = 0.5,
                     double cy = 0.5, double w = 0.5, double h = 0.5,
                     ImageId image = 1);

Detection detection(double conf, double x, double y, double w, double h,
                    ImageId image = 1, CategoryId category = 1);

GroundTruthObject ground_truth(double x, double y, double w, double h,
                               ImageId image = 1, CategoryId category = 1,
                               bool crowd = false);

std::vector<MatchedSample> random_samples(std::mt19937_64& rng, std::size_t n);

// Boxes drawn so that a fair share of pairs overlap.
std::vector<Detection> random_detections(std::mt19937_64& rng, std::size_t n,
                                         int categories = 1);

// Corner-based IoU, written separately from the library.
double reference_iou(const BoundingBox& a, const BoundingBox& b);

// Full enumeration over every bin index; each bin scans all samples.
struct NaiveDece {
  double d_ece = 0.0;
  std::size_t retained_samples = 0;
  std::uint64_t neglected_bins = 0;
  std::uint64_t retained_bins = 0;
  std::uint64_t empty_bins = 0;
};
NaiveDece naive_d_ece(const std::vector<MatchedSample>& samples,
                      FeatureSubset subset,
                      const std::vector<std::size_t>& bins_per_dim,
                      std::size_t min_bin_count, bool normalize_by_all = false);

// Textbook ECE over equal-width confidence bins, no neglect.
double classical_ece(const std::vector<double>& conf,
                     const std::vector<int>& correct, std::size_t bins);

// Pairwise-matrix greedy suppression, class-wise.
std::vector<Detection> reference_nms(const std::vector<Detection>& dets,
                                     double threshold);

// Exhaustive search over one-to-one assignments, preferring matches for
// higher-confidence detections first.
std::vector<bool> brute_force_match(const std::vector<Detection>& dets,
                                    const std::vector<GroundTruthObject>& gts,
                                    double tau);

// Distribution of the ConfOnly baseline on a held-out set drawn from the
// latent-precision generator with singleton clusters: q ~ U(lo, hi),
// m ~ Bernoulli(q), reported confidence sigmoid((logit q + shift) / T).
struct DistortedBaseline {
  double mean = 0.0;
  double stddev = 0.0;
  std::size_t replicates = 0;
};
DistortedBaseline simulate_distorted_baseline(
    double temperature, double shift, double precision_lo, double precision_hi,
    std::size_t test_size, std::size_t bins, std::size_t min_bin_count,
    std::size_t replicates, std::uint64_t seed);

}  // namespace detcal::testing
