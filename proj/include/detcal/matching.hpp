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

#include <span>
#include <vector>

#include "detcal/dataset_io.hpp"

namespace detcal {

struct MatchConfig {
  double iou_threshold = 0.5;  // tau, in (0, 1)
  // Drop crowd annotations before matching. Detections over crowd regions
  // are still emitted, they simply cannot become true positives.
  bool exclude_crowd = true;

  void validate() const;
};

/// One detection reduced to its calibration features and its match flag.
struct MatchedSample {
  ImageId image_id = 0;
  double confidence = 0.0;
  double rel_cx = 0.0;
  double rel_cy = 0.0;
  double rel_w = 0.0;
  double rel_h = 0.0;
  bool matched = false;

  friend bool operator==(const MatchedSample&, const MatchedSample&) = default;
};

/// Greedy one-to-one matching against ground truth of the same category.
///
/// Within each image detections are visited by confidence descending (ties
/// by input index). Each one claims the unclaimed ground-truth box with the
/// highest IoU if that IoU is at least tau; equal IoUs go to the earlier
/// annotation. Sample i of the result belongs to detections[i].
std::vector<MatchedSample> match(std::span<const Detection> detections,
                                 std::span<const GroundTruthObject> ground_truth,
                                 std::span<const ImageInfo> images,
                                 const MatchConfig& config);

}  // namespace detcal
