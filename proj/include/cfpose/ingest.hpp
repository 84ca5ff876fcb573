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

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "cfpose/geometry.hpp"

namespace cfpose {

// 8-bit RGB image, row-major, 3 bytes per pixel.
struct Raster {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> rgb;

  Raster() = default;
  Raster(int w, int h);

  std::uint8_t* at(int x, int y) { return &rgb[3 * (static_cast<std::size_t>(y) * width + x)]; }
  const std::uint8_t* at(int x, int y) const {
    return &rgb[3 * (static_cast<std::size_t>(y) * width + x)];
  }
  void set(int x, int y, std::uint8_t r, std::uint8_t g, std::uint8_t b);
};

// PNG (any bit depth / color type, converted to RGB8) or binary/ASCII PPM.
Raster load_image(const std::filesystem::path& path);
void save_png(const Raster& image, const std::filesystem::path& path);
void save_ppm(const Raster& image, const std::filesystem::path& path);

struct Hsv {
  double h = 0.0;  // degrees in [0, 360)
  double s = 0.0;  // [0, 1]
  double v = 0.0;  // [0, 1]
};

// Hexcone conversion.
Hsv rgb_to_hsv(std::uint8_t r, std::uint8_t g, std::uint8_t b);

struct HsvThreshold {
  // Hue band in degrees; h_lo > h_hi wraps through 0.
  double h_lo = 340.0;
  double h_hi = 20.0;
  double s_min = 0.5;
  double v_min = 0.3;

  void validate() const;
  bool accepts(const Hsv& c) const;
};

// Standard saturated-red band.
HsvThreshold red_threshold();

double luma(std::uint8_t r, std::uint8_t g, std::uint8_t b);

// Every pixel passing the threshold becomes ((x - cx)/f, (y - cy)/f, 1) with
// gray = luma / 255, in row-major scan order. The principal point defaults
// to (W/2, H/2).
PointSet segment_hsv(const Raster& image, const HsvThreshold& threshold,
                     double focal_length,
                     std::optional<Eigen::Vector2d> principal_point = std::nullopt);

struct CameraIntrinsics {
  double focal_length = 800.0;
  Eigen::Vector2d principal_point = Eigen::Vector2d::Zero();

  Eigen::Vector2d to_pixel(const Vec3& direction) const;
};

// Paints each 2D point of `set` (normalized image coordinates) as a square
// of `radius` pixels. Points off the canvas are skipped.
void rasterize_points(Raster& canvas, const PointSet& set,
                      const CameraIntrinsics& camera, std::uint8_t r,
                      std::uint8_t g, std::uint8_t b, int radius = 0);

struct RegistrationReport {
  std::size_t p_points = 0;
  std::size_t q_points = 0;
  // Points of P that mapped behind the second camera or degenerate.
  std::size_t dropped = 0;
  double mean_px = 0.0;
  double p95_px = 0.0;
  double max_px = 0.0;
};

// Reprojects P through the model at theta into the second image and
// measures the pixel distance of each reprojected point to the nearest Q
// point. The epipolar model has no point-to-point transfer and is rejected.
RegistrationReport register_sets(const PointSet& p, const PointSet& q,
                                 const CorrespondenceModel& model,
                                 const PoseParams& theta,
                                 const CameraIntrinsics& camera,
                                 std::vector<Eigen::Vector2d>* reprojected = nullptr);

}  // namespace cfpose
