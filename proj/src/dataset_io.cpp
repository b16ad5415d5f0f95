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

#include "detcal/dataset_io.hpp"

#include <fstream>
#include <sstream>
#include <set>
#include <system_error>

#include <fmt/format.h>

#include "detcal/error.hpp"

namespace detcal {
namespace {

using nlohmann::json;

const json& require(const json& object, const char* key, const char* what) {
  if (!object.is_object()) {
    throw ValidationError(fmt::format("{}: expected an object", what));
  }
  auto it = object.find(key);
  if (it == object.end()) {
    throw ValidationError(fmt::format("{}: missing field '{}'", what, key));
  }
  return *it;
}

std::int64_t as_integer(const json& value, const char* key, const char* what) {
  if (!value.is_number_integer()) {
    throw ValidationError(
        fmt::format("{}: field '{}' must be an integer", what, key));
  }
  return value.get<std::int64_t>();
}

double as_number(const json& value, const char* key, const char* what) {
  if (!value.is_number()) {
    throw ValidationError(
        fmt::format("{}: field '{}' must be a number", what, key));
  }
  return value.get<double>();
}

BoundingBox parse_corner_box(const json& value, const char* what) {
  if (!value.is_array() || value.size() != 4) {
    throw ValidationError(
        fmt::format("{}: bbox must be an array [x, y, w, h]", what));
  }
  double v[4];
  for (std::size_t i = 0; i < 4; ++i) v[i] = as_number(value[i], "bbox", what);
  return BoundingBox::from_corner(v[0], v[1], v[2], v[3]);
}

json corner_box_to_json(const BoundingBox& box) {
  return json::array({box.x_min(), box.y_min(), box.w, box.h});
}

}  // namespace

ImageTable index_images(std::span<const ImageInfo> images) {
  ImageTable table;
  table.reserve(images.size());
  for (const auto& image : images) {
    if (image.width <= 0 || image.height <= 0) {
      throw ValidationError(fmt::format("image {} has invalid size {}x{}",
                                        image.image_id, image.width,
                                        image.height));
    }
    if (!table.emplace(image.image_id, image).second) {
      throw ValidationError(
          fmt::format("duplicate image id {}", image.image_id));
    }
  }
  return table;
}

GroundTruthSet parse_ground_truth(const json& document) {
  GroundTruthSet out;
  const json& images = require(document, "images", "ground truth");
  const json& annotations = require(document, "annotations", "ground truth");
  if (!images.is_array() || !annotations.is_array()) {
    throw ValidationError("ground truth: images and annotations must be arrays");
  }

  out.images.reserve(images.size());
  for (const auto& record : images) {
    ImageInfo info;
    info.image_id = as_integer(require(record, "id", "image"), "id", "image");
    info.width = static_cast<int>(
        as_integer(require(record, "width", "image"), "width", "image"));
    info.height = static_cast<int>(
        as_integer(require(record, "height", "image"), "height", "image"));
    out.images.push_back(info);
  }
  const ImageTable table = index_images(out.images);

  out.objects.reserve(annotations.size());
  for (const auto& record : annotations) {
    GroundTruthObject object;
    object.image_id = as_integer(require(record, "image_id", "annotation"),
                                 "image_id", "annotation");
    object.category = as_integer(require(record, "category_id", "annotation"),
                                 "category_id", "annotation");
    object.box = parse_corner_box(require(record, "bbox", "annotation"),
                                  "annotation");
    if (auto it = record.find("iscrowd"); it != record.end()) {
      if (it->is_boolean()) {
        object.crowd = it->get<bool>();
      } else {
        object.crowd = as_integer(*it, "iscrowd", "annotation") != 0;
      }
    }
    if (!table.contains(object.image_id)) {
      throw ValidationError(fmt::format(
          "annotation references unknown image id {}", object.image_id));
    }
    out.objects.push_back(object);
  }
  return out;
}

json ground_truth_to_json(const GroundTruthSet& ground_truth) {
  json images = json::array();
  for (const auto& image : ground_truth.images) {
    images.push_back(
        {{"id", image.image_id}, {"width", image.width}, {"height", image.height}});
  }
  json annotations = json::array();
  std::set<CategoryId> categories;
  std::int64_t next_id = 1;
  for (const auto& object : ground_truth.objects) {
    categories.insert(object.category);
    annotations.push_back({{"id", next_id++},
                           {"image_id", object.image_id},
                           {"category_id", object.category},
                           {"bbox", corner_box_to_json(object.box)},
                           {"area", object.box.w * object.box.h},
                           {"iscrowd", object.crowd ? 1 : 0}});
  }
  json category_list = json::array();
  for (CategoryId id : categories) {
    category_list.push_back({{"id", id}, {"name", std::to_string(id)}});
  }
  return json{{"images", std::move(images)},
              {"annotations", std::move(annotations)},
              {"categories", std::move(category_list)}};
}

std::vector<Detection> parse_detections(const json& document) {
  if (!document.is_array()) {
    throw ValidationError("detections: expected a JSON array of records");
  }
  std::vector<Detection> out;
  out.reserve(document.size());
  for (const auto& record : document) {
    Detection det;
    det.image_id = as_integer(require(record, "image_id", "detection"),
                              "image_id", "detection");
    det.category = as_integer(require(record, "category_id", "detection"),
                              "category_id", "detection");
    det.confidence =
        as_number(require(record, "score", "detection"), "score", "detection");
    if (!(det.confidence >= 0.0 && det.confidence <= 1.0)) {
      throw ValidationError(fmt::format(
          "detection score {} outside [0, 1] (image {})", det.confidence,
          det.image_id));
    }
    det.box = parse_corner_box(require(record, "bbox", "detection"), "detection");
    out.push_back(det);
  }
  return out;
}

json detections_to_json(std::span<const Detection> detections) {
  json out = json::array();
  for (const auto& det : detections) {
    out.push_back({{"image_id", det.image_id},
                   {"category_id", det.category},
                   {"bbox", corner_box_to_json(det.box)},
                   {"score", det.confidence}});
  }
  return out;
}

GroundTruthSet load_ground_truth(const std::filesystem::path& path) {
  return parse_ground_truth(read_json_file(path));
}

std::vector<Detection> load_detections(const std::filesystem::path& path) {
  return parse_detections(read_json_file(path));
}

void check_image_references(std::span<const Detection> detections,
                            std::span<const ImageInfo> images) {
  const ImageTable table = index_images(images);
  for (const auto& det : detections) {
    if (!table.contains(det.image_id)) {
      throw ValidationError(fmt::format(
          "detection references unknown image id {}", det.image_id));
    }
  }
}

Dataset load_dataset(const std::filesystem::path& ground_truth_path,
                     const std::filesystem::path& detections_path) {
  Dataset data;
  data.ground_truth = load_ground_truth(ground_truth_path);
  data.detections = load_detections(detections_path);
  check_image_references(data.detections, data.ground_truth.images);
  return data;
}

Dataset filter_category(const Dataset& data, CategoryId category) {
  Dataset out;
  out.ground_truth.images = data.ground_truth.images;
  for (const auto& det : data.detections) {
    if (det.category == category) out.detections.push_back(det);
  }
  for (const auto& object : data.ground_truth.objects) {
    if (object.category == category) out.ground_truth.objects.push_back(object);
  }
  return out;
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError(fmt::format("cannot open '{}'", path.string()));
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  if (in.bad()) {
    throw IoError(fmt::format("failed reading '{}'", path.string()));
  }
  try {
    return json::parse(buffer.str());
  } catch (const json::parse_error& e) {
    throw ValidationError(
        fmt::format("'{}' is not valid JSON: {}", path.string(), e.what()));
  }
}

void write_file_atomic(const std::filesystem::path& path,
                       const std::string& contents) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) {
      throw IoError(fmt::format("cannot write '{}'", tmp.string()));
    }
    out << contents;
    out.flush();
    if (!out) {
      throw IoError(fmt::format("failed writing '{}'", tmp.string()));
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw IoError(fmt::format("cannot move '{}' into place", path.string()));
  }
}

}  // namespace detcal
