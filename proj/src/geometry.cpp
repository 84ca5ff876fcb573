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

#include "cfpose/geometry.hpp"

#include <algorithm>
#include <cmath>

#include "cfpose/errors.hpp"

namespace cfpose {

std::string_view model_name(ModelKind kind) {
  switch (kind) {
    case ModelKind::kRigid3D:
      return "rigid3d";
    case ModelKind::kBearing3D2D:
      return "bearing";
    case ModelKind::kEpipolar2D2D:
      return "epipolar";
    case ModelKind::kHomography2D2D:
      return "homography";
  }
  return "unknown";
}

ModelKind model_from_name(std::string_view name) {
  if (name == "rigid3d" || name == "rigid") return ModelKind::kRigid3D;
  if (name == "bearing" || name == "3d2d") return ModelKind::kBearing3D2D;
  if (name == "epipolar") return ModelKind::kEpipolar2D2D;
  if (name == "homography" || name == "plane") {
    return ModelKind::kHomography2D2D;
  }
  throw InvalidArgument("unknown model '" + std::string(name) + "'");
}

int parameter_count(ModelKind kind) {
  return kind == ModelKind::kEpipolar2D2D ? 5 : 6;
}

int p_dimension(ModelKind kind) {
  return (kind == ModelKind::kEpipolar2D2D ||
          kind == ModelKind::kHomography2D2D)
             ? 2
             : 3;
}

int q_dimension(ModelKind kind) {
  return kind == ModelKind::kRigid3D ? 3 : 2;
}

CorrespondenceModel CorrespondenceModel::homography(const Vec3& normal,
                                                    double offset) {
  CorrespondenceModel m{ModelKind::kHomography2D2D};
  m.plane_normal = normal;
  m.plane_offset = offset;
  m.validate();
  return m;
}

void CorrespondenceModel::validate() const {
  if (kind != ModelKind::kHomography2D2D) return;
  if (!plane_normal.allFinite() ||
      std::abs(plane_normal.norm() - 1.0) > 1e-9) {
    throw InvalidArgument("homography plane normal must be a unit vector");
  }
  if (!std::isfinite(plane_offset) || plane_offset == 0.0) {
    throw InvalidArgument("homography plane offset must be finite and nonzero");
  }
}

ParamVector PoseParams::to_vector(ModelKind kind) const {
  ParamVector x(parameter_count(kind));
  x[0] = angles.yaw;
  x[1] = angles.pitch;
  x[2] = angles.roll;
  if (kind == ModelKind::kEpipolar2D2D) {
    const double n = translation.norm();
    if (!(n > kDegenerateNorm)) {
      throw InvalidArgument("epipolar translation must be nonzero");
    }
    const Vec3 t = translation / n;
    x[3] = std::atan2(t.y(), t.x());
    x[4] = std::asin(std::clamp(t.z(), -1.0, 1.0));
  } else {
    x.tail<3>() = translation;
  }
  return x;
}

PoseParams PoseParams::from_vector(ModelKind kind, const ParamVector& x) {
  if (x.size() != parameter_count(kind)) {
    throw InvalidArgument("parameter vector has " + std::to_string(x.size()) +
                          " entries, model needs " +
                          std::to_string(parameter_count(kind)));
  }
  PoseParams p;
  p.angles = {x[0], x[1], x[2]};
  if (kind == ModelKind::kEpipolar2D2D) {
    p.translation = direction_from_spherical(x[3], x[4]);
  } else {
    p.translation = x.tail<3>();
  }
  return p;
}

Eigen::Matrix<double, 6, 1> PoseParams::as_vector6() const {
  Eigen::Matrix<double, 6, 1> v;
  v << angles.yaw, angles.pitch, angles.roll, translation;
  return v;
}

PoseParams PoseParams::from_vector6(const Eigen::Matrix<double, 6, 1>& v) {
  PoseParams p;
  p.angles = {v[0], v[1], v[2]};
  p.translation = v.tail<3>();
  return p;
}

double pose_distance(const PoseParams& a, const PoseParams& b) {
  return (a.as_vector6() - b.as_vector6()).norm();
}

namespace {

Mat3 rot_z(double a) {
  const double c = std::cos(a), s = std::sin(a);
  Mat3 r;
  r << c, -s, 0, s, c, 0, 0, 0, 1;
  return r;
}

Mat3 rot_y(double a) {
  const double c = std::cos(a), s = std::sin(a);
  Mat3 r;
  r << c, 0, s, 0, 1, 0, -s, 0, c;
  return r;
}

Mat3 rot_x(double a) {
  const double c = std::cos(a), s = std::sin(a);
  Mat3 r;
  r << 1, 0, 0, 0, c, -s, 0, s, c;
  return r;
}

Mat3 d_rot_z(double a) {
  const double c = std::cos(a), s = std::sin(a);
  Mat3 r;
  r << -s, -c, 0, c, -s, 0, 0, 0, 0;
  return r;
}

Mat3 d_rot_y(double a) {
  const double c = std::cos(a), s = std::sin(a);
  Mat3 r;
  r << -s, 0, c, 0, 0, 0, -c, 0, -s;
  return r;
}

Mat3 d_rot_x(double a) {
  const double c = std::cos(a), s = std::sin(a);
  Mat3 r;
  r << 0, 0, 0, 0, -s, -c, 0, c, -s;
  return r;
}

}  // namespace

Mat3 rotation_from_euler(const EulerAngles& a) {
  return rot_z(a.yaw) * rot_y(a.pitch) * rot_x(a.roll);
}

EulerAngles euler_from_rotation(const Mat3& r) {
  EulerAngles a;
  a.pitch = std::asin(std::clamp(-r(2, 0), -1.0, 1.0));
  a.roll = std::atan2(r(2, 1), r(2, 2));
  a.yaw = std::atan2(r(1, 0), r(0, 0));
  return a;
}

std::array<Mat3, 3> rotation_derivatives(const EulerAngles& a) {
  const Mat3 z = rot_z(a.yaw), y = rot_y(a.pitch), x = rot_x(a.roll);
  return {d_rot_z(a.yaw) * y * x, z * d_rot_y(a.pitch) * x,
          z * y * d_rot_x(a.roll)};
}

Mat3 skew(const Vec3& v) {
  Mat3 s;
  s << 0, -v.z(), v.y(), v.z(), 0, -v.x(), -v.y(), v.x(), 0;
  return s;
}

Vec3 direction_from_spherical(double azimuth, double elevation) {
  const double ce = std::cos(elevation);
  return {ce * std::cos(azimuth), ce * std::sin(azimuth), std::sin(elevation)};
}

void PointSet::validate() const {
  if (dim != 2 && dim != 3) {
    throw InvalidArgument("point set dimension must be 2 or 3");
  }
  if (points.empty()) throw InvalidArgument("point set is empty");
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (!points[i].allFinite()) {
      throw InvalidArgument("point " + std::to_string(i) + " is not finite");
    }
    if (dim == 2 && points[i].z() != 1.0) {
      throw InvalidArgument("2D point " + std::to_string(i) +
                            " is not homogeneous [u v 1]");
    }
  }
  if (gray && gray->size() != points.size()) {
    throw InvalidArgument("gray list length differs from point count");
  }
}

PointSet PointSet::from_image_points(const std::vector<Eigen::Vector2d>& uv) {
  PointSet s;
  s.dim = 2;
  s.points.reserve(uv.size());
  for (const auto& p : uv) s.points.emplace_back(p.x(), p.y(), 1.0);
  return s;
}

PointSet PointSet::select(const std::vector<std::size_t>& indices) const {
  PointSet s;
  s.dim = dim;
  s.points.reserve(indices.size());
  for (auto i : indices) s.points.push_back(points.at(i));
  if (gray) {
    std::vector<double> g;
    g.reserve(indices.size());
    for (auto i : indices) g.push_back(gray->at(i));
    s.gray = std::move(g);
  }
  return s;
}

Vec3 apply_model(const CorrespondenceModel& model, const Vec3& p,
                 const PoseParams& theta) {
  const PoseMapping mapping(model, theta.to_vector(model.kind));
  Vec3 out;
  if (!mapping.map_p(p, &out, nullptr)) {
    throw DegenerateDirection("h(p, theta) has no direction", 0);
  }
  return out;
}

Vec3 apply_q_model(const CorrespondenceModel& model, const Vec3& q,
                   const PoseParams& theta) {
  if (model.kind != ModelKind::kEpipolar2D2D) return q;
  const PoseMapping mapping(model, theta.to_vector(model.kind));
  Vec3 out;
  if (!mapping.map_q(q, &out, nullptr)) {
    throw DegenerateDirection("g(q, theta) has no direction", 0);
  }
  return out;
}

PoseMapping::PoseMapping(const CorrespondenceModel& model, const ParamVector& x)
    : model_(model), params_(cfpose::parameter_count(model.kind)) {
  model_.validate();
  const PoseParams pose = PoseParams::from_vector(model.kind, x);
  rotation_ = rotation_from_euler(pose.angles);
  rotation_partials_ = rotation_derivatives(pose.angles);
  translation_ = pose.translation;
  translation_partials_.setIdentity();
  if (model.kind == ModelKind::kEpipolar2D2D) {
    const double az = x[3], el = x[4];
    translation_partials_.col(0) =
        Vec3(-std::cos(el) * std::sin(az), std::cos(el) * std::cos(az), 0.0);
    translation_partials_.col(1) =
        Vec3(-std::sin(el) * std::cos(az), -std::sin(el) * std::sin(az),
             std::cos(el));
    translation_partials_.col(2).setZero();
  } else if (model.kind == ModelKind::kHomography2D2D) {
    // Scaled later by n^T m / d per point.
  }
}

namespace {

// y = u / ||u|| with dy = (I - y y^T) du / ||u||.
bool normalize_with_jacobian(const Vec3& u, int params, Vec3* out,
                             PointJacobian* jac) {
  const double n = u.norm();
  if (!(n >= kDegenerateNorm)) return false;
  *out = u / n;
  if (jac) {
    const Mat3 proj = (Mat3::Identity() - *out * out->transpose()) / n;
    jac->leftCols(params) = proj * jac->leftCols(params);
  }
  return true;
}

}  // namespace

bool PoseMapping::map_p(const Vec3& p, Vec3* out, PointJacobian* jac) const {
  const Vec3 rp = rotation_ * p;
  if (jac) jac->setZero();
  switch (model_.kind) {
    case ModelKind::kRigid3D: {
      *out = rp + translation_;
      if (jac) {
        for (int j = 0; j < 3; ++j) jac->col(j) = rotation_partials_[j] * p;
        jac->middleCols<3>(3) = Mat3::Identity();
      }
      return true;
    }
    case ModelKind::kBearing3D2D: {
      const Vec3 u = rp + translation_;
      if (jac) {
        for (int j = 0; j < 3; ++j) jac->col(j) = rotation_partials_[j] * p;
        jac->middleCols<3>(3) = Mat3::Identity();
      }
      return normalize_with_jacobian(u, params_, out, jac);
    }
    case ModelKind::kHomography2D2D: {
      const double scale = model_.plane_normal.dot(p) / model_.plane_offset;
      const Vec3 u = rp + scale * translation_;
      if (jac) {
        for (int j = 0; j < 3; ++j) jac->col(j) = rotation_partials_[j] * p;
        jac->middleCols<3>(3) = scale * Mat3::Identity();
      }
      return normalize_with_jacobian(u, params_, out, jac);
    }
    case ModelKind::kEpipolar2D2D: {
      // u = T x (R m)
      const Vec3 u = translation_.cross(rp);
      if (jac) {
        for (int j = 0; j < 3; ++j) {
          jac->col(j) = translation_.cross(rotation_partials_[j] * p);
        }
        // d(T x v)/dT = -[v]x
        jac->middleCols<2>(3) = -skew(rp) * translation_partials_.leftCols<2>();
      }
      return normalize_with_jacobian(u, params_, out, jac);
    }
  }
  return false;
}

bool PoseMapping::map_q(const Vec3& q, Vec3* out, PointJacobian* jac) const {
  if (jac) jac->setZero();
  if (model_.kind != ModelKind::kEpipolar2D2D) {
    *out = q;
    return true;
  }
  const Vec3 u = translation_.cross(q);
  if (jac) {
    jac->middleCols<2>(3) = -skew(q) * translation_partials_.leftCols<2>();
  }
  return normalize_with_jacobian(u, params_, out, jac);
}

}  // namespace cfpose
