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

#include "detcal/matching.hpp"

#include <algorithm>
#include <numeric>
#include <unordered_map>

#include <fmt/format.h>

#include "detcal/error.hpp"

namespace detcal {

void MatchConfig::validate() const {
  if (!(iou_threshold > 0.0 && iou_threshold < 1.0)) {
    throw ValidationError(
        fmt::format("matching IoU threshold {} outside (0, 1)", iou_threshold));
  }
}

std::vector<MatchedSample> match(std::span<const Detection> detections,
                                 std::span<const GroundTruthObject> ground_truth,
                                 std::span<const ImageInfo> images,
                                 const MatchConfig& config) {
  config.validate();
  const ImageTable table = index_images(images);

  std::unordered_map<ImageId, std::vector<std::size_t>> gt_by_image;
  for (std::size_t g = 0; g < ground_truth.size(); ++g) {
    if (config.exclude_crowd && ground_truth[g].crowd) continue;
    gt_by_image[ground_truth[g].image_id].push_back(g);
  }
  std::vector<ImageId> image_order;
  std::unordered_map<ImageId, std::vector<std::size_t>> det_by_image;
  for (std::size_t d = 0; d < detections.size(); ++d) {
    auto [it, inserted] = det_by_image.try_emplace(detections[d].image_id);
    if (inserted) image_order.push_back(detections[d].image_id);
    it->second.push_back(d);
  }

  std::vector<MatchedSample> samples(detections.size());
  for (ImageId image_id : image_order) {
    auto info = table.find(image_id);
    if (info == table.end()) {
      throw ValidationError(
          fmt::format("no image info for detection image id {}", image_id));
    }
    std::vector<std::size_t>& dets = det_by_image[image_id];
    std::stable_sort(dets.begin(), dets.end(), [&](std::size_t a, std::size_t b) {
      return detections[a].confidence > detections[b].confidence;
    });

    static const std::vector<std::size_t> kNone;
    auto gt_it = gt_by_image.find(image_id);
    const std::vector<std::size_t>& gts =
        gt_it == gt_by_image.end() ? kNone : gt_it->second;
    std::vector<char> claimed(gts.size(), 0);

    for (std::size_t d : dets) {
      const Detection& det = detections[d];
      double best_iou = -1.0;
      std::size_t best = gts.size();
      for (std::size_t k = 0; k < gts.size(); ++k) {
        const GroundTruthObject& gt = ground_truth[gts[k]];
        if (claimed[k] || gt.category != det.category) continue;
        const double overlap = iou(det.box, gt.box);
        if (overlap > best_iou) {
          best_iou = overlap;
          best = k;
        }
      }
      const bool hit = best < gts.size() && best_iou >= config.iou_threshold;
      if (hit) claimed[best] = 1;

      const BoundingBox rel = normalize(det.box, info->second.width,
                                        info->second.height);
      samples[d] = MatchedSample{image_id, det.confidence, rel.cx, rel.cy,
                                 rel.w,    rel.h,          hit};
    }
  }
  return samples;
}

}  // namespace detcal
