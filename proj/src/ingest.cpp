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

#include "cfpose/ingest.hpp"

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>

#include "cfpose/errors.hpp"
#include "cfpose/robust.hpp"

namespace cfpose {

Raster::Raster(int w, int h) : width(w), height(h) {
  if (w <= 0 || h <= 0) throw InvalidArgument("raster dimensions must be positive");
  rgb.assign(3 * static_cast<std::size_t>(w) * static_cast<std::size_t>(h), 0);
}

void Raster::set(int x, int y, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  std::uint8_t* px = at(x, y);
  px[0] = r;
  px[1] = g;
  px[2] = b;
}

namespace {

std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<std::uint8_t> data((std::istreambuf_iterator<char>(in)),
                                 std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("read failed for " + path.string());
  return data;
}

bool is_png(const std::vector<std::uint8_t>& d) {
  static const std::uint8_t sig[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
  return d.size() >= 8 && std::equal(sig, sig + 8, d.begin());
}

Raster decode_png(const std::vector<std::uint8_t>& data, const std::string& name) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&image, data.data(), data.size())) {
    throw CorruptFile(name + ": " + image.message);
  }
  image.format = PNG_FORMAT_RGB;
  if (image.width == 0 || image.height == 0 || image.width > (1u << 15) ||
      image.height > (1u << 15)) {
    png_image_free(&image);
    throw CorruptFile(name + ": unsupported PNG dimensions");
  }
  Raster out(static_cast<int>(image.width), static_cast<int>(image.height));
  if (!png_image_finish_read(&image, nullptr, out.rgb.data(), 0, nullptr)) {
    const std::string msg = image.message;
    png_image_free(&image);
    throw CorruptFile(name + ": " + msg);
  }
  return out;
}

// Tokenizer for the PPM header: whitespace separated, '#' starts a comment.
class PpmReader {
 public:
  PpmReader(const std::vector<std::uint8_t>& d, std::string name)
      : d_(d), name_(std::move(name)) {}

  std::string token() {
    skip_space();
    std::string t;
    while (pos_ < d_.size() && !std::isspace(d_[pos_]) && d_[pos_] != '#') {
      t.push_back(static_cast<char>(d_[pos_++]));
    }
    if (t.empty()) throw CorruptFile(name_ + ": truncated PPM header");
    return t;
  }

  long number() {
    const std::string t = token();
    if (!std::all_of(t.begin(), t.end(), [](char c) { return std::isdigit(c); }) ||
        t.size() > 9) {
      throw CorruptFile(name_ + ": bad PPM number '" + t + "'");
    }
    return std::stol(t);
  }

  // The single whitespace byte that ends a binary header.
  void end_header() {
    if (pos_ >= d_.size() || !std::isspace(d_[pos_])) {
      throw CorruptFile(name_ + ": malformed PPM header");
    }
    ++pos_;
  }

  std::size_t pos() const { return pos_; }

 private:
  void skip_space() {
    while (pos_ < d_.size()) {
      if (std::isspace(d_[pos_])) {
        ++pos_;
      } else if (d_[pos_] == '#') {
        while (pos_ < d_.size() && d_[pos_] != '\n') ++pos_;
      } else {
        break;
      }
    }
  }

  const std::vector<std::uint8_t>& d_;
  std::string name_;
  std::size_t pos_ = 0;
};

Raster decode_ppm(const std::vector<std::uint8_t>& data, const std::string& name) {
  PpmReader reader(data, name);
  const std::string magic = reader.token();
  const long w = reader.number();
  const long h = reader.number();
  const long maxval = reader.number();
  if (w <= 0 || h <= 0 || w > (1 << 15) || h > (1 << 15)) {
    throw CorruptFile(name + ": unsupported PPM dimensions");
  }
  if (maxval <= 0 || maxval > 65535) throw CorruptFile(name + ": bad PPM maxval");
  Raster out(static_cast<int>(w), static_cast<int>(h));
  const std::size_t samples = out.rgb.size();
  auto scale = [maxval](long v) {
    return static_cast<std::uint8_t>(std::lround(255.0 * static_cast<double>(v) / maxval));
  };
  if (magic == "P6") {
    reader.end_header();
    const std::size_t bytes = maxval < 256 ? 1 : 2;
    if (data.size() < reader.pos() + samples * bytes) {
      throw CorruptFile(name + ": truncated PPM pixel data");
    }
    const std::uint8_t* src = data.data() + reader.pos();
    for (std::size_t i = 0; i < samples; ++i) {
      long v = bytes == 1 ? src[i] : (src[2 * i] << 8) | src[2 * i + 1];
      if (v > maxval) throw CorruptFile(name + ": PPM sample exceeds maxval");
      out.rgb[i] = scale(v);
    }
  } else if (magic == "P3") {
    for (std::size_t i = 0; i < samples; ++i) {
      const long v = reader.number();
      if (v > maxval) throw CorruptFile(name + ": PPM sample exceeds maxval");
      out.rgb[i] = scale(v);
    }
  } else {
    throw UnsupportedFormat(name + ": unsupported PNM variant " + magic);
  }
  return out;
}

void write_bytes(const std::filesystem::path& path, const void* data, std::size_t n) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(static_cast<const char*>(data), static_cast<std::streamsize>(n));
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace

Raster load_image(const std::filesystem::path& path) {
  const auto data = read_bytes(path);
  const std::string name = path.string();
  if (is_png(data)) return decode_png(data, name);
  if (data.size() >= 2 && data[0] == 'P' && (data[1] == '6' || data[1] == '3')) {
    return decode_ppm(data, name);
  }
  throw UnsupportedFormat(name + ": not a PNG or PPM file");
}

void save_png(const Raster& image, const std::filesystem::path& path) {
  png_image png{};
  png.version = PNG_IMAGE_VERSION;
  png.width = static_cast<png_uint_32>(image.width);
  png.height = static_cast<png_uint_32>(image.height);
  png.format = PNG_FORMAT_RGB;
  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&png, nullptr, &size, 0, image.rgb.data(), 0, nullptr)) {
    throw IoError("PNG encoding failed: " + std::string(png.message));
  }
  std::vector<std::uint8_t> buffer(size);
  if (!png_image_write_to_memory(&png, buffer.data(), &size, 0, image.rgb.data(), 0,
                                 nullptr)) {
    throw IoError("PNG encoding failed: " + std::string(png.message));
  }
  write_bytes(path, buffer.data(), size);
}

void save_ppm(const Raster& image, const std::filesystem::path& path) {
  std::string header = "P6\n" + std::to_string(image.width) + " " +
                       std::to_string(image.height) + "\n255\n";
  std::vector<std::uint8_t> bytes(header.begin(), header.end());
  bytes.insert(bytes.end(), image.rgb.begin(), image.rgb.end());
  write_bytes(path, bytes.data(), bytes.size());
}

Hsv rgb_to_hsv(std::uint8_t r8, std::uint8_t g8, std::uint8_t b8) {
  const double r = r8 / 255.0, g = g8 / 255.0, b = b8 / 255.0;
  const double mx = std::max({r, g, b});
  const double mn = std::min({r, g, b});
  const double delta = mx - mn;
  Hsv out;
  out.v = mx;
  out.s = mx > 0.0 ? delta / mx : 0.0;
  if (delta > 0.0) {
    double h;
    if (mx == r) {
      h = std::fmod((g - b) / delta, 6.0);
    } else if (mx == g) {
      h = (b - r) / delta + 2.0;
    } else {
      h = (r - g) / delta + 4.0;
    }
    h *= 60.0;
    if (h < 0.0) h += 360.0;
    out.h = h >= 360.0 ? h - 360.0 : h;
  }
  return out;
}

void HsvThreshold::validate() const {
  auto in_hue = [](double h) { return h >= 0.0 && h < 360.0; };
  if (!in_hue(h_lo) || !in_hue(h_hi)) {
    throw InvalidArgument("hue bounds must lie in [0, 360)");
  }
  if (!(s_min >= 0.0 && s_min <= 1.0) || !(v_min >= 0.0 && v_min <= 1.0)) {
    throw InvalidArgument("saturation and value minima must lie in [0, 1]");
  }
}

bool HsvThreshold::accepts(const Hsv& c) const {
  if (c.s < s_min || c.v < v_min) return false;
  if (h_lo <= h_hi) return c.h >= h_lo && c.h <= h_hi;
  return c.h >= h_lo || c.h <= h_hi;
}

HsvThreshold red_threshold() { return {}; }

double luma(std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  return 0.299 * r + 0.587 * g + 0.114 * b;
}

PointSet segment_hsv(const Raster& image, const HsvThreshold& threshold,
                     double focal_length, std::optional<Eigen::Vector2d> principal_point) {
  threshold.validate();
  if (!(focal_length > 0.0) || !std::isfinite(focal_length)) {
    throw InvalidArgument("focal length must be positive");
  }
  const Eigen::Vector2d c =
      principal_point.value_or(Eigen::Vector2d(image.width / 2.0, image.height / 2.0));
  PointSet out;
  out.dim = 2;
  std::vector<double> gray;
  for (int y = 0; y < image.height; ++y) {
    for (int x = 0; x < image.width; ++x) {
      const std::uint8_t* px = image.at(x, y);
      if (!threshold.accepts(rgb_to_hsv(px[0], px[1], px[2]))) continue;
      out.points.emplace_back((x - c.x()) / focal_length, (y - c.y()) / focal_length, 1.0);
      gray.push_back(luma(px[0], px[1], px[2]) / 255.0);
    }
  }
  if (out.points.empty()) throw EmptySegmentation("no pixel passes the HSV threshold");
  out.gray = std::move(gray);
  return out;
}

Eigen::Vector2d CameraIntrinsics::to_pixel(const Vec3& d) const {
  return Eigen::Vector2d(d.x() / d.z(), d.y() / d.z()) * focal_length + principal_point;
}

void rasterize_points(Raster& canvas, const PointSet& set, const CameraIntrinsics& camera,
                      std::uint8_t r, std::uint8_t g, std::uint8_t b, int radius) {
  for (const auto& p : set.points) {
    if (!(p.z() > 0.0)) continue;
    const Eigen::Vector2d px = camera.to_pixel(p);
    const long cx = std::lround(px.x()), cy = std::lround(px.y());
    for (long y = cy - radius; y <= cy + radius; ++y) {
      for (long x = cx - radius; x <= cx + radius; ++x) {
        if (x < 0 || y < 0 || x >= canvas.width || y >= canvas.height) continue;
        canvas.set(static_cast<int>(x), static_cast<int>(y), r, g, b);
      }
    }
  }
}

RegistrationReport register_sets(const PointSet& p, const PointSet& q,
                                 const CorrespondenceModel& model, const PoseParams& theta,
                                 const CameraIntrinsics& camera,
                                 std::vector<Eigen::Vector2d>* reprojected) {
  if (model.kind == ModelKind::kEpipolar2D2D || model.kind == ModelKind::kRigid3D) {
    throw InvalidArgument("registration needs a point-transfer image model "
                          "(bearing or homography)");
  }
  p.validate();
  q.validate();
  if (q.dim != 2) throw InvalidArgument("registration target must be a 2D point set");
  std::vector<Vec3> targets;
  targets.reserve(q.size());
  for (const auto& v : q.points) {
    const Eigen::Vector2d px = camera.to_pixel(v);
    targets.emplace_back(px.x(), px.y(), 0.0);
  }
  const NearestNeighborIndex index(std::move(targets));
  const PoseMapping mapping(model, theta.to_vector(model.kind));

  RegistrationReport report;
  report.p_points = p.size();
  report.q_points = q.size();
  std::vector<double> dist;
  dist.reserve(p.size());
  if (reprojected) reprojected->clear();
  for (const auto& v : p.points) {
    Vec3 d;
    if (!mapping.map_p(v, &d, nullptr) || !(d.z() > kDegenerateNorm)) {
      ++report.dropped;
      continue;
    }
    const Eigen::Vector2d px = camera.to_pixel(d);
    if (reprojected) reprojected->push_back(px);
    dist.push_back(index.distance(Vec3(px.x(), px.y(), 0.0)));
  }
  if (dist.empty()) throw InvalidArgument("no point of P reprojects into the image");
  double sum = 0.0;
  for (double x : dist) sum += x;
  report.mean_px = sum / static_cast<double>(dist.size());
  std::sort(dist.begin(), dist.end());
  const auto rank = static_cast<std::size_t>(
      std::ceil(0.95 * static_cast<double>(dist.size()))) - 1;
  report.p95_px = dist[std::min(rank, dist.size() - 1)];
  report.max_px = dist.back();
  return report;
}

}  // namespace cfpose
