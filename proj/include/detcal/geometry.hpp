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

namespace detcal {

enum class Frame { kPixel, kRelative };

/// Axis-aligned box in center/size encoding.
///
/// Corner encodings (x_min, y_min, w, h) are converted once at ingestion via
/// from_corner(). Pixel boxes only require positive extent; relative boxes
/// additionally keep the center in [0,1] and the extent in (0,1].
struct BoundingBox {
  double cx = 0.0;
  double cy = 0.0;
  double w = 0.0;
  double h = 0.0;
  Frame frame = Frame::kPixel;

  static BoundingBox from_corner(double x_min, double y_min, double width,
                                 double height);

  double x_min() const { return cx - 0.5 * w; }
  double y_min() const { return cy - 0.5 * h; }
  double x_max() const { return cx + 0.5 * w; }
  double y_max() const { return cy + 0.5 * h; }

  friend bool operator==(const BoundingBox&, const BoundingBox&) = default;
};

// Throws ValidationError when the box violates its frame's invariants.
void validate(const BoundingBox& box);

/// Intersection over union, 0 for disjoint boxes. Both boxes must be valid
/// and share a frame.
double iou(const BoundingBox& a, const BoundingBox& b);

/// Divides each field by the matching image dimension and clamps into the
/// relative ranges. Detectors emit boxes that overshoot the frame by a few
/// pixels, so overshoot is clamped rather than rejected.
BoundingBox normalize(const BoundingBox& box, double image_width,
                      double image_height);

}  // namespace detcal
