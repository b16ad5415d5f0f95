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

#include "detcal/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "detcal/error.hpp"

namespace detcal {

BoundingBox BoundingBox::from_corner(double x_min, double y_min, double width,
                                     double height) {
  BoundingBox box{x_min + 0.5 * width, y_min + 0.5 * height, width, height,
                  Frame::kPixel};
  validate(box);
  return box;
}

void validate(const BoundingBox& box) {
  if (!std::isfinite(box.cx) || !std::isfinite(box.cy) ||
      !std::isfinite(box.w) || !std::isfinite(box.h)) {
    throw ValidationError("bounding box has non-finite coordinates");
  }
  if (!(box.w > 0.0) || !(box.h > 0.0)) {
    throw ValidationError(fmt::format(
        "bounding box has non-positive extent (w={}, h={})", box.w, box.h));
  }
  if (box.frame == Frame::kRelative) {
    const bool center_ok =
        box.cx >= 0.0 && box.cx <= 1.0 && box.cy >= 0.0 && box.cy <= 1.0;
    if (!center_ok || box.w > 1.0 || box.h > 1.0) {
      throw ValidationError(fmt::format(
          "relative bounding box out of range (cx={}, cy={}, w={}, h={})",
          box.cx, box.cy, box.w, box.h));
    }
  }
}

double iou(const BoundingBox& a, const BoundingBox& b) {
  validate(a);
  validate(b);
  if (a.frame != b.frame) {
    throw ValidationError("iou of boxes in different coordinate frames");
  }
  // Areas come from the same corner differences as the intersection so that
  // iou(a, a) is exactly 1.
  const double a_w = a.x_max() - a.x_min();
  const double a_h = a.y_max() - a.y_min();
  const double b_w = b.x_max() - b.x_min();
  const double b_h = b.y_max() - b.y_min();
  const double inter_w =
      std::min(a.x_max(), b.x_max()) - std::max(a.x_min(), b.x_min());
  const double inter_h =
      std::min(a.y_max(), b.y_max()) - std::max(a.y_min(), b.y_min());
  if (inter_w <= 0.0 || inter_h <= 0.0) return 0.0;
  const double inter = inter_w * inter_h;
  const double uni = a_w * a_h + b_w * b_h - inter;
  if (!(uni > 0.0)) return 0.0;
  return std::clamp(inter / uni, 0.0, 1.0);
}

BoundingBox normalize(const BoundingBox& box, double image_width,
                      double image_height) {
  if (!(image_width > 0.0) || !(image_height > 0.0)) {
    throw ValidationError(fmt::format("invalid image dimensions {}x{}",
                                      image_width, image_height));
  }
  validate(box);
  const double smallest = std::numeric_limits<double>::min();
  BoundingBox out;
  out.frame = Frame::kRelative;
  out.cx = std::clamp(box.cx / image_width, 0.0, 1.0);
  out.cy = std::clamp(box.cy / image_height, 0.0, 1.0);
  out.w = std::clamp(box.w / image_width, smallest, 1.0);
  out.h = std::clamp(box.h / image_height, smallest, 1.0);
  return out;
}

}  // namespace detcal
