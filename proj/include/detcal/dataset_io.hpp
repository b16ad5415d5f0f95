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
#include <filesystem>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "json.hpp"

#include "detcal/geometry.hpp"

namespace detcal {

using ImageId = std::int64_t;
using CategoryId = std::int64_t;

struct Detection {
  ImageId image_id = 0;
  CategoryId category = 0;
  double confidence = 0.0;
  BoundingBox box;  // pixel frame

  friend bool operator==(const Detection&, const Detection&) = default;
};

struct GroundTruthObject {
  ImageId image_id = 0;
  CategoryId category = 0;
  BoundingBox box;  // pixel frame
  bool crowd = false;

  friend bool operator==(const GroundTruthObject&,
                         const GroundTruthObject&) = default;
};

struct ImageInfo {
  ImageId image_id = 0;
  int width = 0;
  int height = 0;

  friend bool operator==(const ImageInfo&, const ImageInfo&) = default;
};

struct GroundTruthSet {
  std::vector<GroundTruthObject> objects;
  std::vector<ImageInfo> images;
};

/// Detections plus the annotations they are evaluated against.
struct Dataset {
  std::vector<Detection> detections;
  GroundTruthSet ground_truth;
};

using ImageTable = std::unordered_map<ImageId, ImageInfo>;

// Throws ValidationError on duplicate ids or non-positive dimensions.
ImageTable index_images(std::span<const ImageInfo> images);

// COCO annotation subset: images[{id,width,height}],
// annotations[{image_id,category_id,bbox:[x,y,w,h],iscrowd}].
GroundTruthSet parse_ground_truth(const nlohmann::json& document);
GroundTruthSet load_ground_truth(const std::filesystem::path& path);
nlohmann::json ground_truth_to_json(const GroundTruthSet& ground_truth);

// COCO results convention: [{image_id,category_id,bbox:[x,y,w,h],score}].
std::vector<Detection> parse_detections(const nlohmann::json& document);
std::vector<Detection> load_detections(const std::filesystem::path& path);
nlohmann::json detections_to_json(std::span<const Detection> detections);

/// Throws ValidationError naming the first detection whose image is unknown.
void check_image_references(std::span<const Detection> detections,
                            std::span<const ImageInfo> images);

Dataset load_dataset(const std::filesystem::path& ground_truth_path,
                     const std::filesystem::path& detections_path);

/// Keeps only records of `category`, preserving input order. Image metadata
/// is carried over untouched.
Dataset filter_category(const Dataset& data, CategoryId category);

// File helpers shared by every component that writes artifacts.
nlohmann::json read_json_file(const std::filesystem::path& path);
/// Writes through a sibling temporary file and renames it into place.
void write_file_atomic(const std::filesystem::path& path,
                       const std::string& contents);

}  // namespace detcal
