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

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace cfpose {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

// Pose parameter vectors have at most six entries.
inline constexpr int kMaxParams = 6;
using ParamVector = Eigen::VectorXd;
// Derivative of a mapped 3-vector with respect to the pose parameters. Only
// the first parameter_count() columns are meaningful.
using PointJacobian = Eigen::Matrix<double, 3, kMaxParams>;

// Pre-normalization norms below this are treated as directionless.
inline constexpr double kDegenerateNorm = 1e-12;

// Intrinsic Z-Y-X Euler angles in radians: R = Rz(yaw) * Ry(pitch) * Rx(roll).
struct EulerAngles {
  double yaw = 0.0;
  double pitch = 0.0;
  double roll = 0.0;
};

enum class ModelKind { kRigid3D, kBearing3D2D, kEpipolar2D2D, kHomography2D2D };

std::string_view model_name(ModelKind kind);
ModelKind model_from_name(std::string_view name);

// Number of free pose parameters for a model kind: six, except the epipolar
// model whose translation is a unit direction (azimuth, elevation).
int parameter_count(ModelKind kind);

// Whether the model consumes 2D (homogeneous image) points on the P side.
int p_dimension(ModelKind kind);
int q_dimension(ModelKind kind);

struct CorrespondenceModel {
  ModelKind kind = ModelKind::kBearing3D2D;
  // Plane n^T M = d in the first camera frame; Homography2D2D only.
  Vec3 plane_normal = Vec3::UnitZ();
  double plane_offset = 1.0;

  static CorrespondenceModel rigid() { return {ModelKind::kRigid3D}; }
  static CorrespondenceModel bearing() { return {ModelKind::kBearing3D2D}; }
  static CorrespondenceModel epipolar() { return {ModelKind::kEpipolar2D2D}; }
  static CorrespondenceModel homography(const Vec3& normal, double offset);

  // Throws InvalidArgument unless ||n|| = 1 and d != 0 for homographies.
  void validate() const;
};

// Rotation plus translation. The meaning of `translation` depends on the
// model: scene units (Rigid3D), depth-scaled T/lambda (Bearing3D2D), T/d
// scaled by the plane (Homography2D2D), or a unit direction (Epipolar2D2D).
struct PoseParams {
  EulerAngles angles;
  Vec3 translation = Vec3::Zero();

  // Packs into the solver's decision vector. The epipolar model stores the
  // translation as (azimuth, elevation) of its direction.
  ParamVector to_vector(ModelKind kind) const;
  static PoseParams from_vector(ModelKind kind, const ParamVector& x);

  // [yaw pitch roll tx ty tz]; the space trial errors are measured in.
  Eigen::Matrix<double, 6, 1> as_vector6() const;
  static PoseParams from_vector6(const Eigen::Matrix<double, 6, 1>& v);
};

// Distance ||a - b|| over [angles; translation].
double pose_distance(const PoseParams& a, const PoseParams& b);

Mat3 rotation_from_euler(const EulerAngles& angles);
// Inverse of rotation_from_euler away from pitch = +-pi/2.
EulerAngles euler_from_rotation(const Mat3& rotation);
// dR/dyaw, dR/dpitch, dR/droll.
std::array<Mat3, 3> rotation_derivatives(const EulerAngles& angles);

Mat3 skew(const Vec3& v);

// Unit direction for spherical angles and its partials.
Vec3 direction_from_spherical(double azimuth, double elevation);

// Ordered point list. 2D points are carried as homogeneous [u v 1] in
// normalized image coordinates. Order carries no meaning.
struct PointSet {
  int dim = 3;
  std::vector<Vec3> points;
  std::optional<std::vector<double>> gray;

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }

  // Throws InvalidArgument on an empty set, non-finite coordinates, a bad
  // dimension, a 2D point whose third coordinate is not 1, or a gray list of
  // the wrong length.
  void validate() const;

  static PointSet from_image_points(const std::vector<Eigen::Vector2d>& uv);
  // Subset in the given index order; gray values follow.
  PointSet select(const std::vector<std::size_t>& indices) const;
};

// h(p, theta). Rigid3D returns R p + T; the other kinds return unit vectors.
// Throws DegenerateDirection (index 0) when the pre-normalization vector is
// shorter than kDegenerateNorm.
Vec3 apply_model(const CorrespondenceModel& model, const Vec3& p,
                 const PoseParams& theta);
// g(q, theta): [T]x q / ||[T]x q|| for Epipolar2D2D, q unchanged otherwise.
Vec3 apply_q_model(const CorrespondenceModel& model, const Vec3& q,
                   const PoseParams& theta);

// h and g with pose derivatives, precomputed for one parameter vector. This
// is what the aggregation kernels evaluate per point.
class PoseMapping {
 public:
  PoseMapping(const CorrespondenceModel& model, const ParamVector& x);

  int parameter_count() const { return params_; }
  bool q_depends_on_theta() const {
    return model_.kind == ModelKind::kEpipolar2D2D;
  }

  // Return false on a degenerate direction. `jac` may be null.
  bool map_p(const Vec3& p, Vec3* out, PointJacobian* jac) const;
  bool map_q(const Vec3& q, Vec3* out, PointJacobian* jac) const;

  const Mat3& rotation() const { return rotation_; }
  const Vec3& translation() const { return translation_; }

 private:
  CorrespondenceModel model_;
  int params_;
  Mat3 rotation_;
  std::array<Mat3, 3> rotation_partials_;
  Vec3 translation_;
  // dT/d(translation params): identity for 3-vectors, 3x2 for the sphere.
  Eigen::Matrix<double, 3, 3> translation_partials_;
};

}  // namespace cfpose
