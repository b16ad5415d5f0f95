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

#include "detcal/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <string>

#include <fmt/format.h>

#include "detcal/error.hpp"
#include "detcal/random.hpp"

namespace detcal {
namespace {

struct Layout {
  std::size_t cols = 1;
  std::size_t rows = 1;
  double margin_x = 0.0;
  double margin_y = 0.0;
};

std::size_t slots_per_image(const GeneratorConfig& config) {
  return config.gt_per_image + static_cast<std::size_t>(std::ceil(config.fp_rate));
}

double cell_edge(std::size_t index, std::size_t count, int extent) {
  return std::floor(static_cast<double>(index) * extent /
                    static_cast<double>(count));
}

Layout make_layout(const GeneratorConfig& config) {
  const std::size_t slots = slots_per_image(config);
  Layout layout;
  layout.cols = static_cast<std::size_t>(
      std::ceil(std::sqrt(static_cast<double>(slots))));
  layout.rows = (slots + layout.cols - 1) / layout.cols;
  layout.margin_x =
      0.5 * static_cast<double>(config.cluster_size - 1) * config.jitter + 1.0;
  layout.margin_y = 1.0;

  // The narrowest cell decides feasibility.
  double min_w = config.image_width, min_h = config.image_height;
  for (std::size_t c = 0; c < layout.cols; ++c) {
    min_w = std::min(min_w, cell_edge(c + 1, layout.cols, config.image_width) -
                                cell_edge(c, layout.cols, config.image_width));
  }
  for (std::size_t r = 0; r < layout.rows; ++r) {
    min_h = std::min(min_h, cell_edge(r + 1, layout.rows, config.image_height) -
                                cell_edge(r, layout.rows, config.image_height));
  }
  if (min_w - 2.0 * layout.margin_x < config.min_box_size ||
      min_h - 2.0 * layout.margin_y < config.min_box_size) {
    throw ValidationError(fmt::format(
        "infeasible geometry: {} slots per image leave {}x{} px cells, too "
        "small for {} px boxes with cluster spread {} px",
        slots, min_w, min_h, config.min_box_size,
        static_cast<double>(config.cluster_size - 1) * config.jitter));
  }
  return layout;
}

double quarter_pixel(double v) { return std::floor(v * 4.0) / 4.0; }

// Base box placed uniformly inside a cell, sizes and offsets snapped to a
// quarter pixel so corner/center conversions stay exact.
BoundingBox draw_box(Rng& rng, const GeneratorConfig& config,
                     const Layout& layout, std::size_t cell) {
  const std::size_t col = cell % layout.cols;
  const std::size_t row = cell / layout.cols;
  const double x0 = cell_edge(col, layout.cols, config.image_width);
  const double x1 = cell_edge(col + 1, layout.cols, config.image_width);
  const double y0 = cell_edge(row, layout.rows, config.image_height);
  const double y1 = cell_edge(row + 1, layout.rows, config.image_height);
  const double avail_w = (x1 - x0) - 2.0 * layout.margin_x;
  const double avail_h = (y1 - y0) - 2.0 * layout.margin_y;

  const double w = std::max(config.min_box_size,
                            quarter_pixel(rng.uniform(config.min_box_size, avail_w)));
  const double h = std::max(config.min_box_size,
                            quarter_pixel(rng.uniform(config.min_box_size, avail_h)));
  const double x = x0 + layout.margin_x + quarter_pixel(rng.uniform(0.0, avail_w - w));
  const double y = y0 + layout.margin_y + quarter_pixel(rng.uniform(0.0, avail_h - h));
  return BoundingBox::from_corner(x, y, w, h);
}

double reported_confidence(const ConfidenceModel& model, double precision) {
  if (const auto* c = std::get_if<ConstantConfidence>(&model)) return c->value;
  if (const auto* d = std::get_if<DistortedConfidence>(&model)) {
    return distort(precision, d->temperature, d->shift);
  }
  return precision;
}

}  // namespace

void GeneratorConfig::validate() const {
  if (n_images < 1) throw ValidationError("n_images must be >= 1");
  if (cluster_size < 1) throw ValidationError("cluster_size must be >= 1");
  if (!(jitter >= 0.0) || !std::isfinite(jitter)) {
    throw ValidationError("jitter must be a finite value >= 0");
  }
  if (!(fp_rate >= 0.0) || !std::isfinite(fp_rate)) {
    throw ValidationError("fp_rate must be a finite value >= 0");
  }
  if (gt_per_image + static_cast<std::size_t>(std::ceil(fp_rate)) == 0) {
    throw ValidationError("generator would emit no boxes");
  }
  if (fp_confidence && !(*fp_confidence >= 0.0 && *fp_confidence <= 1.0)) {
    throw ValidationError("fp_confidence must lie in [0, 1]");
  }
  if (!(precision_min > 0.0 && precision_min < precision_max &&
        precision_max < 1.0)) {
    throw ValidationError(
        "precision range must satisfy 0 < precision_min < precision_max < 1");
  }
  if (image_width <= 0 || image_height <= 0) {
    throw ValidationError("image dimensions must be positive");
  }
  if (!(min_box_size >= 1.0)) {
    throw ValidationError("min_box_size must be >= 1 pixel");
  }
  if (const auto* c = std::get_if<ConstantConfidence>(&confidence_model)) {
    if (!(c->value >= 0.0 && c->value <= 1.0)) {
      throw ValidationError("constant confidence must lie in [0, 1]");
    }
  }
  if (const auto* d = std::get_if<DistortedConfidence>(&confidence_model)) {
    if (!(d->temperature > 0.0) || !std::isfinite(d->shift)) {
      throw ValidationError("distortion needs temperature > 0 and finite shift");
    }
  }
  make_layout(*this);
}

Dataset SyntheticData::to_dataset() const {
  Dataset data;
  data.detections = detections;
  data.ground_truth.objects = ground_truth;
  data.ground_truth.images = images;
  return data;
}

double distort(double p_true, double temperature, double shift) {
  if (!(p_true > 0.0 && p_true < 1.0)) {
    throw ValidationError(fmt::format("distort needs p in (0, 1), got {}", p_true));
  }
  if (!(temperature > 0.0)) {
    throw ValidationError("distort needs temperature > 0");
  }
  const double logit = std::log(p_true) - std::log1p(-p_true);
  return 1.0 / (1.0 + std::exp(-(logit + shift) / temperature));
}

double cluster_iou_floor(const GeneratorConfig& config) {
  const double spread =
      static_cast<double>(config.cluster_size - 1) * config.jitter;
  const double w = config.min_box_size;
  return std::max(0.0, (w - spread) / (w + spread));
}

SyntheticData generate(const GeneratorConfig& config) {
  config.validate();
  const Layout layout = make_layout(config);
  const bool latent =
      !std::holds_alternative<ConstantConfidence>(config.confidence_model);
  const std::size_t n = config.cluster_size;
  const double whole_fp = std::floor(config.fp_rate);
  const double frac_fp = config.fp_rate - whole_fp;

  Rng rng(splitmix64(config.seed));
  SyntheticData out;
  std::vector<std::size_t> cells(layout.cols * layout.rows);

  for (std::size_t i = 0; i < config.n_images; ++i) {
    const ImageId image_id = static_cast<ImageId>(i + 1);
    out.images.push_back(
        ImageInfo{image_id, config.image_width, config.image_height});
    std::iota(cells.begin(), cells.end(), std::size_t{0});
    rng.shuffle(std::span<std::size_t>(cells));

    for (std::size_t slot = 0; slot < config.gt_per_image; ++slot) {
      const BoundingBox base = draw_box(rng, config, layout, cells[slot]);
      double member_precision = 1.0 / static_cast<double>(n);
      bool hit = true;
      if (latent) {
        const double q = rng.uniform(config.precision_min, config.precision_max);
        hit = rng.bernoulli(q);
        member_precision = q / static_cast<double>(n);
      }
      if (hit) {
        out.ground_truth.push_back(
            GroundTruthObject{image_id, config.category, base, false});
      }
      const double conf =
          reported_confidence(config.confidence_model, member_precision);
      for (std::size_t j = 0; j < n; ++j) {
        BoundingBox member = base;
        member.cx += (static_cast<double>(j) - 0.5 * static_cast<double>(n - 1)) *
                     config.jitter;
        out.detections.push_back(Detection{image_id, config.category, conf, member});
      }
    }

    std::size_t background = static_cast<std::size_t>(whole_fp);
    if (frac_fp > 0.0 && rng.bernoulli(frac_fp)) ++background;
    for (std::size_t b = 0; b < background; ++b) {
      const BoundingBox box =
          draw_box(rng, config, layout, cells[config.gt_per_image + b]);
      double conf;
      if (config.fp_confidence) {
        conf = *config.fp_confidence;
      } else if (latent) {
        conf = reported_confidence(
            config.confidence_model,
            rng.uniform(config.precision_min, config.precision_max));
      } else {
        conf = std::get<ConstantConfidence>(config.confidence_model).value;
      }
      out.detections.push_back(Detection{image_id, config.category, conf, box});
    }
  }
  return out;
}

GeneratorConfig generator_config_from_json(const nlohmann::json& document) {
  static const std::set<std::string> kKnown = {
      "n_images",      "gt_per_image",  "cluster_size", "confidence_model",
      "jitter",        "fp_rate",       "fp_confidence", "precision_min",
      "precision_max", "image_width",   "image_height", "min_box_size",
      "category",      "seed"};
  if (!document.is_object()) {
    throw ValidationError("generator config must be a JSON object");
  }
  for (const auto& [key, value] : document.items()) {
    if (!kKnown.contains(key)) {
      throw ValidationError(fmt::format("unknown generator config key '{}'", key));
    }
  }
  GeneratorConfig config;
  try {
    config.n_images = document.value("n_images", config.n_images);
    config.gt_per_image = document.value("gt_per_image", config.gt_per_image);
    config.cluster_size = document.value("cluster_size", config.cluster_size);
    config.jitter = document.value("jitter", config.jitter);
    config.fp_rate = document.value("fp_rate", config.fp_rate);
    if (document.contains("fp_confidence") && !document["fp_confidence"].is_null()) {
      config.fp_confidence = document["fp_confidence"].get<double>();
    }
    config.precision_min = document.value("precision_min", config.precision_min);
    config.precision_max = document.value("precision_max", config.precision_max);
    config.image_width = document.value("image_width", config.image_width);
    config.image_height = document.value("image_height", config.image_height);
    config.min_box_size = document.value("min_box_size", config.min_box_size);
    config.category = document.value("category", config.category);
    config.seed = document.value("seed", config.seed);
    if (document.contains("confidence_model")) {
      const auto& model = document["confidence_model"];
      const std::string type = model.at("type").get<std::string>();
      if (type == "constant") {
        config.confidence_model = ConstantConfidence{model.at("value").get<double>()};
      } else if (type == "true_precision") {
        config.confidence_model = TruePrecisionConfidence{};
      } else if (type == "distorted") {
        config.confidence_model =
            DistortedConfidence{model.value("temperature", 1.0),
                                model.value("shift", 0.0)};
      } else {
        throw ValidationError(fmt::format(
            "unknown confidence model '{}' (expected constant, true_precision "
            "or distorted)",
            type));
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(fmt::format("malformed generator config: {}", e.what()));
  }
  config.validate();
  return config;
}

nlohmann::json to_json(const GeneratorConfig& config) {
  nlohmann::json model;
  if (const auto* c = std::get_if<ConstantConfidence>(&config.confidence_model)) {
    model = {{"type", "constant"}, {"value", c->value}};
  } else if (const auto* d =
                 std::get_if<DistortedConfidence>(&config.confidence_model)) {
    model = {{"type", "distorted"},
             {"temperature", d->temperature},
             {"shift", d->shift}};
  } else {
    model = {{"type", "true_precision"}};
  }
  nlohmann::json out = {{"n_images", config.n_images},
                        {"gt_per_image", config.gt_per_image},
                        {"cluster_size", config.cluster_size},
                        {"confidence_model", model},
                        {"jitter", config.jitter},
                        {"fp_rate", config.fp_rate},
                        {"precision_min", config.precision_min},
                        {"precision_max", config.precision_max},
                        {"image_width", config.image_width},
                        {"image_height", config.image_height},
                        {"min_box_size", config.min_box_size},
                        {"category", config.category},
                        {"seed", config.seed}};
  out["fp_confidence"] = config.fp_confidence
                             ? nlohmann::json(*config.fp_confidence)
                             : nlohmann::json(nullptr);
  return out;
}

void write_synthetic(const SyntheticData& data,
                     const std::filesystem::path& directory) {
  std::error_code ec;
  std::filesystem::create_directories(directory, ec);
  if (ec) {
    throw IoError(fmt::format("cannot create '{}'", directory.string()));
  }
  GroundTruthSet gt{data.ground_truth, data.images};
  const std::string gt_text = ground_truth_to_json(gt).dump(1) + "\n";
  const std::string det_text = detections_to_json(data.detections).dump(1) + "\n";
  write_file_atomic(directory / kGroundTruthFileName, gt_text);
  write_file_atomic(directory / kDetectionsFileName, det_text);
}

}  // namespace detcal
