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
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"

#include "detcal/dataset_io.hpp"

namespace detcal {

struct TopK {
  std::size_t k = 1000;
  friend bool operator==(const TopK&, const TopK&) = default;
};

struct Nms {
  double iou_threshold = 0.5;
  friend bool operator==(const Nms&, const Nms&) = default;
};

struct ConfidenceThreshold {
  double threshold = 0.3;
  friend bool operator==(const ConfidenceThreshold&,
                         const ConfidenceThreshold&) = default;
};

using Stage = std::variant<TopK, Nms, ConfidenceThreshold>;

/// Ordered list of post-processing stages. Each stage kind appears at most
/// once; an empty list passes raw detections through unchanged.
class PipelineConfig {
 public:
  PipelineConfig() = default;
  explicit PipelineConfig(std::vector<Stage> stages);

  // top-k 1000 followed by the 0.3 confidence threshold.
  static PipelineConfig white_box();
  // top-k 1000, NMS at `iou_threshold`, then the 0.3 confidence threshold.
  static PipelineConfig black_box(double iou_threshold);

  const std::vector<Stage>& stages() const { return stages_; }
  bool empty() const { return stages_.empty(); }

  friend bool operator==(const PipelineConfig&,
                         const PipelineConfig&) = default;

 private:
  std::vector<Stage> stages_;
};

std::string describe(const Stage& stage);
std::string describe(const PipelineConfig& config);

// [{"type":"top_k","k":1000}, {"type":"nms","iou_threshold":0.5},
//  {"type":"confidence_threshold","threshold":0.3}]
nlohmann::json pipeline_to_json(const PipelineConfig& config);
PipelineConfig pipeline_from_json(const nlohmann::json& stages);

/// Class-wise greedy NMS over the detections of one image.
///
/// Candidates are visited by confidence descending, ties broken by input
/// index. A visited box is kept and every remaining box of the same category
/// whose IoU with it is strictly greater than `iou_threshold` is dropped.
/// Survivors come back in the order they were kept.
std::vector<Detection> nms(std::span<const Detection> detections,
                           double iou_threshold);

/// The k highest-confidence detections, sorted by confidence descending with
/// ties resolved by input index.
std::vector<Detection> top_k(std::span<const Detection> detections,
                             std::size_t k);

/// Detections with confidence >= threshold, input order preserved.
std::vector<Detection> confidence_threshold(
    std::span<const Detection> detections, double threshold);

/// Applies the stages per image, in configured order. Images are emitted in
/// order of first appearance. An empty pipeline returns the input as is.
std::vector<Detection> run_pipeline(std::span<const Detection> detections,
                                    const PipelineConfig& config);

}  // namespace detcal
