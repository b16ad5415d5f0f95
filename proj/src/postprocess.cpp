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

#include "detcal/postprocess.hpp"

#include <algorithm>
#include <numeric>
#include <unordered_map>

#include <fmt/format.h>

#include "detcal/error.hpp"

namespace detcal {
namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

void validate_stage(const Stage& stage) {
  std::visit(
      Overloaded{
          [](const TopK& s) {
            if (s.k < 1) throw ValidationError("top-k requires k >= 1");
          },
          [](const Nms& s) {
            if (!(s.iou_threshold > 0.0 && s.iou_threshold <= 1.0)) {
              throw ValidationError(fmt::format(
                  "NMS IoU threshold {} outside (0, 1]", s.iou_threshold));
            }
          },
          [](const ConfidenceThreshold& s) {
            if (!(s.threshold >= 0.0 && s.threshold < 1.0)) {
              throw ValidationError(fmt::format(
                  "confidence threshold {} outside [0, 1)", s.threshold));
            }
          },
      },
      stage);
}

// Indices sorted by confidence descending, ties by index ascending.
std::vector<std::size_t> confidence_order(std::span<const Detection> detections) {
  std::vector<std::size_t> order(detections.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) {
                     return detections[a].confidence > detections[b].confidence;
                   });
  return order;
}

std::vector<Detection> apply_stage(std::vector<Detection> image_detections,
                                   const Stage& stage) {
  return std::visit(
      Overloaded{
          [&](const TopK& s) { return top_k(image_detections, s.k); },
          [&](const Nms& s) { return nms(image_detections, s.iou_threshold); },
          [&](const ConfidenceThreshold& s) {
            return confidence_threshold(image_detections, s.threshold);
          },
      },
      stage);
}

}  // namespace

PipelineConfig::PipelineConfig(std::vector<Stage> stages)
    : stages_(std::move(stages)) {
  bool seen[std::variant_size_v<Stage>] = {};
  for (const auto& stage : stages_) {
    validate_stage(stage);
    if (seen[stage.index()]) {
      throw ValidationError(fmt::format(
          "pipeline stage '{}' appears more than once", describe(stage)));
    }
    seen[stage.index()] = true;
  }
}

PipelineConfig PipelineConfig::white_box() {
  return PipelineConfig({TopK{1000}, ConfidenceThreshold{0.3}});
}

PipelineConfig PipelineConfig::black_box(double iou_threshold) {
  return PipelineConfig(
      {TopK{1000}, Nms{iou_threshold}, ConfidenceThreshold{0.3}});
}

std::string describe(const Stage& stage) {
  return std::visit(
      Overloaded{
          [](const TopK& s) { return fmt::format("top_k({})", s.k); },
          [](const Nms& s) { return fmt::format("nms({})", s.iou_threshold); },
          [](const ConfidenceThreshold& s) {
            return fmt::format("threshold({})", s.threshold);
          },
      },
      stage);
}

std::string describe(const PipelineConfig& config) {
  if (config.empty()) return "raw";
  std::string out;
  for (const auto& stage : config.stages()) {
    if (!out.empty()) out += " -> ";
    out += describe(stage);
  }
  return out;
}

nlohmann::json pipeline_to_json(const PipelineConfig& config) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& stage : config.stages()) {
    out.push_back(std::visit(
        Overloaded{
            [](const TopK& s) {
              return nlohmann::json{{"type", "top_k"}, {"k", s.k}};
            },
            [](const Nms& s) {
              return nlohmann::json{{"type", "nms"},
                                    {"iou_threshold", s.iou_threshold}};
            },
            [](const ConfidenceThreshold& s) {
              return nlohmann::json{{"type", "confidence_threshold"},
                                    {"threshold", s.threshold}};
            },
        },
        stage));
  }
  return out;
}

PipelineConfig pipeline_from_json(const nlohmann::json& stages) {
  if (!stages.is_array()) {
    throw ValidationError("pipeline stages must be a JSON array");
  }
  std::vector<Stage> out;
  for (const auto& stage : stages) {
    try {
      const std::string type = stage.at("type").get<std::string>();
      if (type == "top_k") {
        const auto k = stage.at("k").get<std::int64_t>();
        if (k < 1) throw ValidationError("top-k requires k >= 1");
        out.push_back(TopK{static_cast<std::size_t>(k)});
      } else if (type == "nms") {
        out.push_back(Nms{stage.at("iou_threshold").get<double>()});
      } else if (type == "confidence_threshold") {
        out.push_back(ConfidenceThreshold{stage.at("threshold").get<double>()});
      } else {
        throw ValidationError(fmt::format(
            "unknown pipeline stage '{}' (expected top_k, nms or "
            "confidence_threshold)",
            type));
      }
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError(fmt::format("malformed pipeline stage: {}", e.what()));
    }
  }
  return PipelineConfig(std::move(out));
}

std::vector<Detection> nms(std::span<const Detection> detections,
                           double iou_threshold) {
  const std::vector<std::size_t> order = confidence_order(detections);
  std::vector<char> suppressed(detections.size(), 0);
  std::vector<Detection> kept;
  for (std::size_t i = 0; i < order.size(); ++i) {
    const std::size_t current = order[i];
    if (suppressed[current]) continue;
    const Detection& winner = detections[current];
    kept.push_back(winner);
    for (std::size_t j = i + 1; j < order.size(); ++j) {
      const std::size_t other = order[j];
      if (suppressed[other] || detections[other].category != winner.category) {
        continue;
      }
      if (iou(winner.box, detections[other].box) > iou_threshold) {
        suppressed[other] = 1;
      }
    }
  }
  return kept;
}

std::vector<Detection> top_k(std::span<const Detection> detections,
                             std::size_t k) {
  if (k < 1) throw ValidationError("top-k requires k >= 1");
  std::vector<std::size_t> order = confidence_order(detections);
  if (order.size() > k) order.resize(k);
  std::vector<Detection> out;
  out.reserve(order.size());
  for (std::size_t index : order) out.push_back(detections[index]);
  return out;
}

std::vector<Detection> confidence_threshold(
    std::span<const Detection> detections, double threshold) {
  std::vector<Detection> out;
  std::copy_if(detections.begin(), detections.end(), std::back_inserter(out),
               [threshold](const Detection& d) {
                 return d.confidence >= threshold;
               });
  return out;
}

std::vector<Detection> run_pipeline(std::span<const Detection> detections,
                                    const PipelineConfig& config) {
  if (config.empty()) return {detections.begin(), detections.end()};

  std::vector<ImageId> image_order;
  std::unordered_map<ImageId, std::vector<Detection>> per_image;
  for (const auto& det : detections) {
    auto [it, inserted] = per_image.try_emplace(det.image_id);
    if (inserted) image_order.push_back(det.image_id);
    it->second.push_back(det);
  }

  std::vector<Detection> out;
  out.reserve(detections.size());
  for (ImageId image : image_order) {
    std::vector<Detection> current = std::move(per_image[image]);
    for (const auto& stage : config.stages()) {
      current = apply_stage(std::move(current), stage);
    }
    out.insert(out.end(), current.begin(), current.end());
  }
  return out;
}

}  // namespace detcal
