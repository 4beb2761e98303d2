// Copyright 2026 The humsim Authors.
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

#ifndef HUMSIM_GEOMETRY_H_
#define HUMSIM_GEOMETRY_H_

#include <limits>
#include <optional>
#include <utility>
#include <variant>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace humsim {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Quat = Eigen::Quaterniond;
using Transform = Eigen::Isometry3d;

// Rigid pose: position in meters plus a unit quaternion stored (w, x, y, z)
// in canonical form (w >= 0).
struct Pose {
  Vec3 position = Vec3::Zero();
  Quat orientation = Quat::Identity();

  static Pose Identity() { return Pose{}; }
  static Pose FromTransform(const Transform& t);
  Transform ToTransform() const;
};

// Flips the sign of q if needed so that w >= 0, and normalizes it.
Quat CanonicalQuat(Quat q);

// URDF convention: R = Rz(yaw) * Ry(pitch) * Rx(roll).
Mat3 RpyToMatrix(const Vec3& rpy);
Vec3 MatrixToRpy(const Mat3& r);

// Log map of a rotation matrix: unit axis times angle in [0, pi].
Vec3 RotationVector(const Mat3& r);

struct Sphere {
  double radius = 0.0;
};

// Capsule whose core segment runs along the local z axis from -half_length
// to +half_length.
struct Capsule {
  double radius = 0.0;
  double half_length = 0.0;
};

struct Box {
  Vec3 half_extents = Vec3::Zero();
};

using Shape = std::variant<Sphere, Capsule, Box>;

// A collision primitive placed in its parent (link or object) frame.
struct Primitive {
  Shape shape;
  Transform local = Transform::Identity();
};

bool ShapeDimensionsValid(const Shape& shape);
double SurfaceArea(const Shape& shape);

struct Aabb {
  Vec3 min = Vec3::Constant(std::numeric_limits<double>::infinity());
  Vec3 max = Vec3::Constant(-std::numeric_limits<double>::infinity());

  bool Empty() const { return (min.array() > max.array()).any(); }
  void Extend(const Aabb& other);
  void Extend(const Vec3& p);
  Aabb Inflated(double margin) const;
  bool Overlaps(const Aabb& other) const;
};

Aabb ComputeAabb(const Shape& shape, const Transform& pose);

// Signed distance from a point (world frame) to the posed shape; negative
// inside.
double SignedDistance(const Shape& shape, const Transform& pose,
                      const Vec3& point);

// Outward surface normal at the surface point nearest to `point`.
Vec3 OutwardNormal(const Shape& shape, const Transform& pose,
                   const Vec3& point);

// Distance along a unit direction to the first intersection with the posed
// shape, if it lies in [0, max_distance]. Origins inside the shape hit at 0.
std::optional<double> RayCast(const Shape& shape, const Transform& pose,
                              const Vec3& origin, const Vec3& direction,
                              double max_distance);

// Contact between two posed shapes. `normal` points from shape a to shape b
// and `depth` is the penetration (0 when exactly touching).
struct ContactGeometry {
  Vec3 point = Vec3::Zero();
  Vec3 normal = Vec3::UnitZ();
  double depth = 0.0;
};

std::optional<ContactGeometry> Collide(const Shape& a, const Transform& pose_a,
                                       const Shape& b, const Transform& pose_b);

// Closest points between segments [p0, p1] and [q0, q1]; returns the
// parameters (s, t) in [0, 1].
std::pair<double, double> ClosestSegmentParameters(const Vec3& p0,
                                                   const Vec3& p1,
                                                   const Vec3& q0,
                                                   const Vec3& q1);

}  // namespace humsim

#endif  // HUMSIM_GEOMETRY_H_
