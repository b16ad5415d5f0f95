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

#include <algorithm>
#include <random>

#include <gtest/gtest.h>

#include "detcal/error.hpp"
#include "detcal/postprocess.hpp"
#include "oracles.hpp"

namespace detcal {
namespace {

using testing::detection;

std::vector<double> confidences(const std::vector<Detection>& dets) {
  std::vector<double> out;
  for (const auto& d : dets) out.push_back(d.confidence);
  return out;
}

TEST(Nms, CoincidentBoxesKeepOnlyTheBest) {
  const std::vector<Detection> dets{detection(0.8, 0, 0, 10, 10),
                                    detection(0.9, 0, 0, 10, 10),
                                    detection(0.7, 0, 0, 10, 10)};
  EXPECT_EQ(confidences(nms(dets, 0.5)), (std::vector<double>{0.9}));
}

TEST(Nms, StrictlyGreaterSuppression) {
  // Offset of 2.5 on a 10-wide box gives IoU 7.5/12.5 = 0.6.
  const std::vector<Detection> dets{detection(0.9, 0, 0, 10, 10),
                                    detection(0.8, 2.5, 0, 10, 10)};
  ASSERT_NEAR(iou(dets[0].box, dets[1].box), 0.6, 1e-15);
  EXPECT_EQ(nms(dets, 0.5).size(), 1u);
  EXPECT_EQ(nms(dets, 0.75).size(), 2u);
  EXPECT_EQ(nms(dets, iou(dets[0].box, dets[1].box)).size(), 2u);
}

TEST(Nms, SingleDetectionUnchanged) {
  const std::vector<Detection> dets{detection(0.4, 1, 2, 3, 4)};
  EXPECT_EQ(nms(dets, 0.5), dets);
}

TEST(Nms, ClassWise) {
  const std::vector<Detection> dets{detection(0.9, 0, 0, 10, 10, 1, 1),
                                    detection(0.8, 0, 0, 10, 10, 1, 2)};
  EXPECT_EQ(nms(dets, 0.5).size(), 2u);
}

TEST(Nms, MatchesQuadraticReference) {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 50; ++trial) {
    const auto dets = testing::random_detections(rng, 1 + rng() % 120, 1 + trial % 3);
    for (double t : {0.3, 0.5, 0.75}) {
      EXPECT_EQ(nms(dets, t), testing::reference_nms(dets, t));
    }
  }
}

TEST(Nms, SubsetPairwiseBoundedAndIdempotent) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 30; ++trial) {
    const auto dets = testing::random_detections(rng, 80, 2);
    for (double t : {0.2, 0.5, 0.9}) {
      const auto kept = nms(dets, t);
      for (const auto& k : kept) {
        EXPECT_NE(std::find(dets.begin(), dets.end(), k), dets.end());
      }
      for (std::size_t i = 0; i < kept.size(); ++i) {
        for (std::size_t j = i + 1; j < kept.size(); ++j) {
          if (kept[i].category == kept[j].category) {
            EXPECT_LE(iou(kept[i].box, kept[j].box), t);
          }
        }
      }
      EXPECT_EQ(nms(kept, t), kept);
    }
  }
}

TEST(Nms, SurvivorsNonDecreasingInThreshold) {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 30; ++trial) {
    const auto dets = testing::random_detections(rng, 100);
    std::size_t prev = 0;
    for (double t : {0.1, 0.3, 0.5, 0.75, 0.9, 1.0}) {
      const std::size_t n = nms(dets, t).size();
      EXPECT_GE(n, prev);
      prev = n;
    }
  }
}

TEST(TopK, UnderCapacityReturnsAll) {
  std::vector<Detection> dets;
  for (int i = 0; i < 5; ++i) dets.push_back(detection(0.1 * i, i, 0, 1, 1));
  EXPECT_EQ(top_k(dets, 1000).size(), 5u);
}

TEST(TopK, TieBrokenByIndex) {
  const std::vector<Detection> dets{
      detection(0.9, 0, 0, 1, 1), detection(0.5, 1, 0, 1, 1),
      detection(0.5, 2, 0, 1, 1), detection(0.1, 3, 0, 1, 1)};
  const auto kept = top_k(dets, 2);
  ASSERT_EQ(kept.size(), 2u);
  EXPECT_EQ(kept[0], dets[0]);
  EXPECT_EQ(kept[1], dets[1]);
}

TEST(TopK, KOneIsArgmax) {
  const std::vector<Detection> dets{detection(0.2, 0, 0, 1, 1),
                                    detection(0.7, 1, 0, 1, 1),
                                    detection(0.4, 2, 0, 1, 1)};
  EXPECT_EQ(top_k(dets, 1), (std::vector<Detection>{dets[1]}));
}

TEST(ConfidenceThreshold, BoundaryInclusive) {
  const std::vector<Detection> dets{detection(0.29, 0, 0, 1, 1),
                                    detection(0.30, 1, 0, 1, 1),
                                    detection(0.31, 2, 0, 1, 1)};
  EXPECT_EQ(confidences(confidence_threshold(dets, 0.3)),
            (std::vector<double>{0.30, 0.31}));
  EXPECT_EQ(confidence_threshold(dets, 0.0), dets);
  EXPECT_TRUE(confidence_threshold(dets, 0.5).empty());
}

TEST(PipelineConfig, PresetsAndValidation) {
  EXPECT_EQ(describe(PipelineConfig::white_box()), "top_k(1000) -> threshold(0.3)");
  EXPECT_EQ(describe(PipelineConfig::black_box(0.5)),
            "top_k(1000) -> nms(0.5) -> threshold(0.3)");
  EXPECT_EQ(describe(PipelineConfig{}), "raw");
  EXPECT_THROW(PipelineConfig({TopK{0}}), ValidationError);
  EXPECT_THROW(PipelineConfig({Nms{0.0}}), ValidationError);
  EXPECT_THROW(PipelineConfig({ConfidenceThreshold{1.0}}), ValidationError);
  EXPECT_THROW(PipelineConfig({Nms{0.5}, Nms{0.6}}), ValidationError);
}

TEST(PipelineConfig, JsonRoundTrip) {
  const PipelineConfig p({ConfidenceThreshold{0.2}, Nms{0.6}, TopK{50}});
  EXPECT_EQ(pipeline_from_json(pipeline_to_json(p)), p);
  EXPECT_THROW(pipeline_from_json(nlohmann::json::parse(R"([{"type": "soft_nms"}])")),
               ValidationError);
}

TEST(RunPipeline, EmptyPipelineIsIdentity) {
  std::mt19937_64 rng(1);
  const auto dets = testing::random_detections(rng, 40);
  EXPECT_EQ(run_pipeline(dets, PipelineConfig{}), dets);
}

TEST(RunPipeline, WorksPerImageAndIsDeterministic) {
  std::mt19937_64 rng(2);
  std::vector<Detection> dets;
  for (ImageId img : {3, 1, 2}) {
    for (auto d : testing::random_detections(rng, 50)) {
      d.image_id = img;
      dets.push_back(d);
    }
  }
  const PipelineConfig config({TopK{20}, Nms{0.5}, ConfidenceThreshold{0.3}});
  const auto out = run_pipeline(dets, config);
  EXPECT_EQ(out, run_pipeline(dets, config));
  for (ImageId img : {3, 1, 2}) {
    std::vector<Detection> one;
    for (const auto& d : dets) {
      if (d.image_id == img) one.push_back(d);
    }
    const auto expected =
        confidence_threshold(nms(top_k(one, 20), 0.5), 0.3);
    std::vector<Detection> got;
    for (const auto& d : out) {
      if (d.image_id == img) got.push_back(d);
    }
    EXPECT_EQ(got, expected);
  }
}

TEST(RunPipeline, StageOrderMatters) {
  const std::vector<Detection> dets{detection(0.9, 0, 0, 10, 10),
                                    detection(0.8, 0, 0, 10, 10),
                                    detection(0.5, 40, 40, 10, 10)};
  EXPECT_EQ(run_pipeline(dets, PipelineConfig({TopK{2}, Nms{0.5}})).size(), 1u);
  EXPECT_EQ(run_pipeline(dets, PipelineConfig({Nms{0.5}, TopK{2}})).size(), 2u);
}

}  // namespace
}  // namespace detcal
