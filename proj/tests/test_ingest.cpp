// Copyright 2026 The cfpose Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "cfpose/errors.hpp"
#include "cfpose/ingest.hpp"
#include "cfpose/simgen.hpp"

namespace cfpose {
namespace {

namespace fs = std::filesystem;

const fs::path kFixtures = CFPOSE_FIXTURE_DIR;

class TempDir {
 public:
  TempDir() {
    path_ = fs::temp_directory_path() /
            ("cfpose_ingest_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) +
             "_" + ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  fs::path operator/(const std::string& name) const { return path_ / name; }

 private:
  fs::path path_;
};

void write_bytes(const fs::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary);
  out << bytes;
}

// Textbook hexcone conversion.
Hsv reference_hsv(int r8, int g8, int b8) {
  const double r = r8 / 255.0, g = g8 / 255.0, b = b8 / 255.0;
  const double mx = std::max({r, g, b}), mn = std::min({r, g, b});
  const double c = mx - mn;
  Hsv out;
  out.v = mx;
  out.s = mx > 0 ? c / mx : 0.0;
  if (c == 0) {
    out.h = 0;
  } else if (mx == r) {
    out.h = 60.0 * std::fmod((g - b) / c + 6.0, 6.0);
  } else if (mx == g) {
    out.h = 60.0 * ((b - r) / c + 2.0);
  } else {
    out.h = 60.0 * ((r - g) / c + 4.0);
  }
  if (out.h >= 360.0) out.h -= 360.0;
  return out;
}

Raster filled(int w, int h, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  Raster img(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) img.set(x, y, r, g, b);
  }
  return img;
}

TEST(LoadImage, SingleWhitePixelPpm) {
  TempDir dir;
  write_bytes(dir / "w.ppm", std::string("P6\n1 1\n255\n") + "\xff\xff\xff");
  const Raster img = load_image(dir / "w.ppm");
  EXPECT_EQ(img.width, 1);
  EXPECT_EQ(img.height, 1);
  EXPECT_EQ(img.rgb, (std::vector<std::uint8_t>{255, 255, 255}));
}

TEST(LoadImage, CheckerRoundTripsThroughPpmAndPng) {
  TempDir dir;
  Raster img(2, 2);
  img.set(0, 0, 0, 0, 0);
  img.set(1, 0, 255, 255, 255);
  img.set(0, 1, 255, 255, 255);
  img.set(1, 1, 0, 0, 0);
  save_ppm(img, dir / "c.ppm");
  save_png(img, dir / "c.png");
  EXPECT_EQ(load_image(dir / "c.ppm").rgb, img.rgb);
  const Raster png = load_image(dir / "c.png");
  EXPECT_EQ(png.width, 2);
  EXPECT_EQ(png.rgb, img.rgb);
}

TEST(LoadImage, AsciiPpmWithCommentsAndWideMaxval) {
  TempDir dir;
  write_bytes(dir / "a.ppm", "P3\n# comment\n2 1 # trailing\n65535\n65535 0 0  0 32768 65535\n");
  const Raster img = load_image(dir / "a.ppm");
  EXPECT_EQ(img.rgb, (std::vector<std::uint8_t>{255, 0, 0, 0, 128, 255}));
}

TEST(LoadImage, FixturesDecodeToKnownDimensions) {
  const auto meta = nlohmann::json::parse(std::ifstream(kFixtures / "fixtures.json"));
  const Raster small = load_image(kFixtures / "small.ppm");
  EXPECT_EQ(small.width, meta["small.ppm"]["width"].get<int>());
  EXPECT_EQ(small.height, meta["small.ppm"]["height"].get<int>());
  EXPECT_EQ(std::vector<std::uint8_t>(small.at(2, 1), small.at(2, 1) + 3),
            (std::vector<std::uint8_t>{128, 64, 32}));
  const Raster wall = load_image(kFixtures / "wall_pattern.png");
  EXPECT_EQ(wall.width, meta["wall_pattern.png"]["width"].get<int>());
  EXPECT_EQ(wall.height, meta["wall_pattern.png"]["height"].get<int>());
}

TEST(LoadImage, Errors) {
  TempDir dir;
  EXPECT_THROW(load_image(dir / "missing.png"), IoError);
  write_bytes(dir / "x.gif", "GIF89a....");
  EXPECT_THROW(load_image(dir / "x.gif"), UnsupportedFormat);
  write_bytes(dir / "t.ppm", std::string("P6\n4 4\n255\n") + "\x01\x02");
  EXPECT_THROW(load_image(dir / "t.ppm"), CorruptFile);
  write_bytes(dir / "h.ppm", "P6\nfour 4\n255\n");
  EXPECT_THROW(load_image(dir / "h.ppm"), CorruptFile);
  write_bytes(dir / "bad.png", std::string("\x89PNG\r\n\x1a\n", 8) + "garbage");
  EXPECT_THROW(load_image(dir / "bad.png"), CorruptFile);
}

TEST(RgbToHsv, PrimariesAndGrays) {
  const Hsv red = rgb_to_hsv(255, 0, 0);
  EXPECT_EQ(red.h, 0.0);
  EXPECT_EQ(red.s, 1.0);
  EXPECT_EQ(red.v, 1.0);
  EXPECT_NEAR(rgb_to_hsv(0, 255, 0).h, 120.0, 1e-12);
  EXPECT_NEAR(rgb_to_hsv(0, 0, 255).h, 240.0, 1e-12);
  EXPECT_NEAR(rgb_to_hsv(255, 255, 0).h, 60.0, 1e-12);
  EXPECT_NEAR(rgb_to_hsv(255, 0, 255).h, 300.0, 1e-12);
  const Hsv gray = rgb_to_hsv(128, 128, 128);
  EXPECT_EQ(gray.s, 0.0);
  EXPECT_NEAR(gray.v, 128.0 / 255.0, 1e-15);
}

TEST(RgbToHsv, MatchesHexconeOnGrid) {
  for (int r = 0; r < 256; r += 15) {
    for (int g = 0; g < 256; g += 15) {
      for (int b = 0; b < 256; b += 15) {
        const Hsv a = rgb_to_hsv(r, g, b), e = reference_hsv(r, g, b);
        EXPECT_NEAR(a.h, e.h, 1e-9) << r << "," << g << "," << b;
        EXPECT_NEAR(a.s, e.s, 1e-12);
        EXPECT_NEAR(a.v, e.v, 1e-12);
      }
    }
  }
}

TEST(HsvThreshold, WrapsThroughZero) {
  const HsvThreshold red = red_threshold();
  EXPECT_TRUE(red.accepts({350.0, 0.9, 0.9}));
  EXPECT_TRUE(red.accepts({10.0, 0.9, 0.9}));
  EXPECT_FALSE(red.accepts({30.0, 0.9, 0.9}));
  EXPECT_FALSE(red.accepts({0.0, 0.4, 0.9}));
  EXPECT_FALSE(red.accepts({0.0, 0.9, 0.2}));
  HsvThreshold green{90.0, 150.0, 0.3, 0.3};
  EXPECT_TRUE(green.accepts({120.0, 0.5, 0.5}));
  EXPECT_FALSE(green.accepts({0.0, 0.5, 0.5}));
  HsvThreshold bad{400.0, 20.0, 0.5, 0.5};
  EXPECT_THROW(bad.validate(), InvalidArgument);
  HsvThreshold bad_s{0.0, 20.0, 1.5, 0.5};
  EXPECT_THROW(bad_s.validate(), InvalidArgument);
}

TEST(Luma, StandardWeights) {
  EXPECT_NEAR(luma(255, 0, 0), 0.299 * 255, 1e-12);
  EXPECT_NEAR(luma(10, 20, 30), 0.299 * 10 + 0.587 * 20 + 0.114 * 30, 1e-12);
}

TEST(SegmentHsv, AllRedSelectsEverything) {
  const Raster img = filled(4, 3, 230, 10, 10);
  const PointSet s = segment_hsv(img, red_threshold(), 100.0);
  ASSERT_EQ(s.size(), 12u);
  EXPECT_EQ(s.dim, 2);
  ASSERT_TRUE(s.gray.has_value());
  // Row-major scan with the principal point at the image center.
  EXPECT_EQ(s.points[0], Vec3(-2.0 / 100.0, -1.5 / 100.0, 1.0));
  EXPECT_EQ(s.points[5], Vec3(-1.0 / 100.0, -0.5 / 100.0, 1.0));
  EXPECT_NEAR((*s.gray)[0], luma(230, 10, 10) / 255.0, 1e-15);
}

TEST(SegmentHsv, ExplicitPrincipalPoint) {
  const Raster img = filled(2, 2, 255, 0, 0);
  const PointSet s = segment_hsv(img, red_threshold(), 2.0, Eigen::Vector2d(0.0, 0.0));
  EXPECT_EQ(s.points[3], Vec3(0.5, 0.5, 1.0));
}

TEST(SegmentHsv, AllBlueIsEmpty) {
  EXPECT_THROW(segment_hsv(filled(5, 5, 0, 0, 255), red_threshold(), 100.0),
               EmptySegmentation);
  EXPECT_THROW(segment_hsv(filled(5, 5, 255, 0, 0), red_threshold(), 0.0), InvalidArgument);
}

TEST(SegmentHsv, WallFixtureMatchesReferenceCount) {
  const auto meta = nlohmann::json::parse(std::ifstream(kFixtures / "fixtures.json"));
  const double reference = meta["wall_pattern.png"]["reference_red_count"].get<double>();
  const PointSet s = segment_hsv(load_image(kFixtures / "wall_pattern.png"), red_threshold(), 800.0);
  EXPECT_NEAR(double(s.size()), reference, 0.02 * reference);
}

TEST(SegmentHsv, Deterministic) {
  const Raster img = load_image(kFixtures / "wall_pattern.png");
  const PointSet a = segment_hsv(img, red_threshold(), 800.0);
  const PointSet b = segment_hsv(img, red_threshold(), 800.0);
  EXPECT_EQ(a.points, b.points);
  EXPECT_EQ(*a.gray, *b.gray);
}

TEST(CameraIntrinsics, ToPixel) {
  const CameraIntrinsics cam{500.0, Eigen::Vector2d(320, 240)};
  const Eigen::Vector2d px = cam.to_pixel(Vec3(0.2, -0.1, 2.0));
  EXPECT_NEAR(px.x(), 320 + 500 * 0.1, 1e-12);
  EXPECT_NEAR(px.y(), 240 - 500 * 0.05, 1e-12);
}

struct SyntheticPair {
  Scene scene;
  Raster p_image, q_image;
  CameraIntrinsics camera;
};

SyntheticPair synthetic_pair() {
  SceneConfig config = default_scene_config(ModelKind::kHomography2D2D);
  config.seed = 257;
  SyntheticPair out;
  out.scene = gen_scene(config);
  out.camera = CameraIntrinsics{config.focal_length, Eigen::Vector2d(640, 640)};
  out.p_image = filled(1280, 1280, 235, 235, 235);
  out.q_image = out.p_image;
  rasterize_points(out.p_image, out.scene.p, out.camera, 220, 20, 20, 1);
  rasterize_points(out.q_image, out.scene.q, out.camera, 220, 20, 20, 1);
  return out;
}

TEST(Registration, SameImageIdentityIsZero) {
  const SyntheticPair pair = synthetic_pair();
  const PointSet p = segment_hsv(pair.p_image, red_threshold(), pair.camera.focal_length);
  const RegistrationReport r = register_sets(p, p, pair.scene.model, PoseParams{}, pair.camera);
  EXPECT_LT(r.mean_px, 1e-9);
  EXPECT_EQ(r.dropped, 0u);
}

TEST(Registration, SyntheticPairAtTruthAndPerturbed) {
  const SyntheticPair pair = synthetic_pair();
  const PointSet p = segment_hsv(pair.p_image, red_threshold(), pair.camera.focal_length);
  const PointSet q = segment_hsv(pair.q_image, red_threshold(), pair.camera.focal_length);
  std::vector<Eigen::Vector2d> reproj;
  const RegistrationReport at_truth =
      register_sets(p, q, pair.scene.model, pair.scene.theta_star, pair.camera, &reproj);
  EXPECT_LT(at_truth.p95_px, 2.0);
  EXPECT_EQ(reproj.size(), p.size() - at_truth.dropped);
  PoseParams off = pair.scene.theta_star;
  off.angles.yaw += 0.1;
  off.translation.x() += 0.3;
  const RegistrationReport perturbed =
      register_sets(p, q, pair.scene.model, off, pair.camera);
  EXPECT_GT(perturbed.mean_px, at_truth.mean_px);
  EXPECT_GT(perturbed.p95_px, at_truth.p95_px);
}

TEST(Registration, RejectsEpipolar) {
  const PointSet s = PointSet::from_image_points({{0.1, 0.1}, {0.2, 0.2}});
  PoseParams theta;
  theta.translation = Vec3::UnitX();
  EXPECT_THROW(register_sets(s, s, CorrespondenceModel::epipolar(), theta, CameraIntrinsics{}),
               InvalidArgument);
}

}  // namespace
}  // namespace cfpose
