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
#include <filesystem>
#include <optional>
#include <variant>
#include <vector>

#include "json.hpp"

#include "detcal/dataset_io.hpp"

namespace detcal {

// Every detection reports the same confidence.
struct ConstantConfidence {
  double value = 0.5;
};

// Reported confidence equals the detection's true precision.
struct TruePrecisionConfidence {};

// Reported confidence is distort(true precision, temperature, shift).
struct DistortedConfidence {
  double temperature = 1.0;
  double shift = 0.0;
};

using ConfidenceModel = std::variant<ConstantConfidence, TruePrecisionConfidence,
                                     DistortedConfidence>;

/// Synthetic scenes with known calibration.
///
/// Each image is cut into a grid of equal cells and every object slot gets a
/// cell of its own, so boxes from different slots never overlap. A slot
/// carries a cluster of `cluster_size` identical boxes offset by multiples of
/// `jitter` pixels along x, centred on the slot's base box.
///
/// With a constant confidence model every slot holds a real object, so
/// exactly one member per cluster can match. With the latent models each slot
/// draws a hit probability q ~ U(precision_min, precision_max); on a hit the
/// base box becomes a ground-truth object, otherwise the cluster sits on
/// background. Cluster members then have true precision q / cluster_size.
struct GeneratorConfig {
  std::size_t n_images = 100;
  std::size_t gt_per_image = 4;
  std::size_t cluster_size = 1;
  ConfidenceModel confidence_model = TruePrecisionConfidence{};
  double jitter = 0.25;
  // Expected background boxes per image; the fractional part is a coin flip.
  double fp_rate = 0.0;
  // Overrides the confidence model for background boxes.
  std::optional<double> fp_confidence;
  double precision_min = 0.05;
  double precision_max = 0.95;
  int image_width = 640;
  int image_height = 480;
  double min_box_size = 16.0;
  CategoryId category = 1;
  std::uint64_t seed = 0;

  void validate() const;
};

struct SyntheticData {
  std::vector<ImageInfo> images;
  std::vector<GroundTruthObject> ground_truth;
  std::vector<Detection> detections;

  Dataset to_dataset() const;
};

/// Logistic temperature map sigmoid((logit(p) + shift) / temperature).
/// temperature < 1 pushes confidences toward 0 and 1 (overconfident),
/// temperature > 1 pulls them toward 0.5.
double distort(double p_true, double temperature, double shift);

/// Smallest IoU between any two members of a cluster (and hence between a
/// member and its object) that the configuration can produce.
double cluster_iou_floor(const GeneratorConfig& config);

/// Throws ValidationError for invalid or geometrically infeasible configs.
SyntheticData generate(const GeneratorConfig& config);

GeneratorConfig generator_config_from_json(const nlohmann::json& document);
nlohmann::json to_json(const GeneratorConfig& config);

inline constexpr const char* kGroundTruthFileName = "ground_truth.json";
inline constexpr const char* kDetectionsFileName = "detections.json";

/// Writes ground_truth.json and detections.json into `directory`.
void write_synthetic(const SyntheticData& data,
                     const std::filesystem::path& directory);

}  // namespace detcal
