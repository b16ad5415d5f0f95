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

#include <filesystem>
#include <fstream>

#include <gtest/gtest.h>

#include "detcal/dataset_io.hpp"
#include "detcal/error.hpp"

namespace detcal {
namespace {

using nlohmann::json;

json small_ground_truth() {
  return json::parse(R"({
    "images": [{"id": 1, "width": 640, "height": 480},
               {"id": 2, "width": 320, "height": 240}],
    "annotations": [
      {"id": 1, "image_id": 1, "category_id": 3, "bbox": [10, 20, 30, 40]},
      {"id": 2, "image_id": 2, "category_id": 3, "bbox": [0, 0, 5, 5], "iscrowd": 1}
    ],
    "categories": [{"id": 3, "name": "car"}]
  })");
}

class TempDir : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = std::filesystem::temp_directory_path() /
           ("detcal_io_" + std::to_string(::testing::UnitTest::GetInstance()
                                              ->random_seed()) +
            "_" + ::testing::UnitTest::GetInstance()->current_test_info()->name());
    std::filesystem::remove_all(dir_);
    std::filesystem::create_directories(dir_);
  }
  void TearDown() override { std::filesystem::remove_all(dir_); }
  std::filesystem::path dir_;
};

TEST(ParseGroundTruth, ConvertsCornerBoxes) {
  const GroundTruthSet gt = parse_ground_truth(small_ground_truth());
  ASSERT_EQ(gt.objects.size(), 2u);
  ASSERT_EQ(gt.images.size(), 2u);
  const GroundTruthObject& o = gt.objects[0];
  EXPECT_EQ(o.image_id, 1);
  EXPECT_EQ(o.category, 3);
  EXPECT_DOUBLE_EQ(o.box.cx, 25.0);
  EXPECT_DOUBLE_EQ(o.box.cy, 40.0);
  EXPECT_FALSE(o.crowd);
  EXPECT_TRUE(gt.objects[1].crowd);
  EXPECT_EQ(gt.images[1], (ImageInfo{2, 320, 240}));
}

TEST(ParseGroundTruth, RejectsAnnotationOnUnknownImage) {
  json doc = small_ground_truth();
  doc["annotations"][0]["image_id"] = 99;
  EXPECT_THROW(parse_ground_truth(doc), ValidationError);
}

TEST(ParseGroundTruth, RejectsBadBoxes) {
  json doc = small_ground_truth();
  doc["annotations"][0]["bbox"] = {1, 2, 0, 4};
  EXPECT_THROW(parse_ground_truth(doc), ValidationError);
  doc["annotations"][0]["bbox"] = {1, 2, 3};
  EXPECT_THROW(parse_ground_truth(doc), ValidationError);
}

TEST(ParseDetections, ReadsResultList) {
  const auto dets = parse_detections(json::parse(
      R"([{"image_id": 1, "category_id": 3, "bbox": [10, 20, 30, 40], "score": 0.75}])"));
  ASSERT_EQ(dets.size(), 1u);
  EXPECT_EQ(dets[0].confidence, 0.75);
  EXPECT_DOUBLE_EQ(dets[0].box.cx, 25.0);
}

TEST(ParseDetections, RejectsScoreOutsideUnitInterval) {
  EXPECT_THROW(parse_detections(json::parse(
                   R"([{"image_id": 1, "category_id": 3, "bbox": [1, 2, 3, 4], "score": 1.2}])")),
               ValidationError);
  EXPECT_THROW(parse_detections(json::parse(
                   R"([{"image_id": 1, "category_id": 3, "bbox": [1, 2, 3, 4], "score": -0.1}])")),
               ValidationError);
}

TEST(ParseDetections, RejectsNonArray) {
  EXPECT_THROW(parse_detections(json::object()), ValidationError);
}

TEST(CheckImageReferences, FlagsUnknownImage) {
  const GroundTruthSet gt = parse_ground_truth(small_ground_truth());
  std::vector<Detection> dets{
      Detection{7, 3, 0.5, BoundingBox::from_corner(0, 0, 1, 1)}};
  EXPECT_THROW(check_image_references(dets, gt.images), ValidationError);
}

TEST(FilterCategory, KeepsOrderAndImages) {
  Dataset data;
  data.ground_truth = parse_ground_truth(small_ground_truth());
  data.ground_truth.objects.push_back(
      GroundTruthObject{1, 4, BoundingBox::from_corner(0, 0, 2, 2), false});
  for (int i = 0; i < 6; ++i) {
    data.detections.push_back(Detection{1, i % 2 ? 3 : 4, 0.1 * i,
                                        BoundingBox::from_corner(i, 0, 2, 2)});
  }
  const Dataset cars = filter_category(data, 3);
  ASSERT_EQ(cars.detections.size(), 3u);
  EXPECT_DOUBLE_EQ(cars.detections[0].confidence, 0.1);
  EXPECT_DOUBLE_EQ(cars.detections[2].confidence, 0.5);
  EXPECT_EQ(cars.ground_truth.objects.size(), 2u);
  EXPECT_EQ(cars.ground_truth.images.size(), 2u);
}

TEST_F(TempDir, RoundTripThroughFiles) {
  const GroundTruthSet gt = parse_ground_truth(small_ground_truth());
  std::vector<Detection> dets{
      Detection{1, 3, 0.25, BoundingBox::from_corner(10.5, 20.25, 30, 40)},
      Detection{2, 3, 1.0, BoundingBox::from_corner(0, 0, 5, 5)}};
  write_file_atomic(dir_ / "gt.json", ground_truth_to_json(gt).dump());
  write_file_atomic(dir_ / "det.json", detections_to_json(dets).dump());
  const Dataset back = load_dataset(dir_ / "gt.json", dir_ / "det.json");
  EXPECT_EQ(back.detections, dets);
  EXPECT_EQ(back.ground_truth.objects, gt.objects);
  EXPECT_EQ(back.ground_truth.images, gt.images);
  EXPECT_FALSE(std::filesystem::exists(dir_ / "gt.json.tmp"));
}

TEST_F(TempDir, MissingFileIsIoError) {
  EXPECT_THROW(read_json_file(dir_ / "nope.json"), IoError);
}

TEST_F(TempDir, MalformedJsonIsValidationError) {
  std::ofstream(dir_ / "bad.json") << "{not json";
  EXPECT_THROW(read_json_file(dir_ / "bad.json"), ValidationError);
}

}  // namespace
}  // namespace detcal
