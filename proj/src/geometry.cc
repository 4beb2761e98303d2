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

#include "humsim/geometry.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

namespace humsim {
namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kTiny = 1e-300;

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

Vec3 SegmentEnd(const Capsule& c, const Transform& pose, double sign) {
  return pose * Vec3(0, 0, sign * c.half_length);
}

Vec3 ClosestOnSegment(const Vec3& a, const Vec3& b, const Vec3& p) {
  const Vec3 ab = b - a;
  const double len2 = ab.squaredNorm();
  if (len2 < kTiny) return a;
  const double t = std::clamp((p - a).dot(ab) / len2, 0.0, 1.0);
  return a + t * ab;
}

// Any unit vector perpendicular to v (v need not be normalized).
Vec3 AnyPerpendicular(const Vec3& v) {
  Vec3 axis = std::abs(v.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
  return v.cross(axis).normalized();
}

Vec3 SafeNormalized(const Vec3& v, const Vec3& fallback) {
  const double n = v.norm();
  if (n < 1e-15) return fallback;
  return v / n;
}

double BoxSignedDistanceLocal(const Vec3& h, const Vec3& p) {
  const Vec3 q = p.cwiseAbs() - h;
  const double outside = q.cwiseMax(0.0).norm();
  const double inside = std::min(q.maxCoeff(), 0.0);
  return outside + inside;
}

// Gradient of the box signed distance in the box frame.
Vec3 BoxNormalLocal(const Vec3& h, const Vec3& p) {
  const Vec3 q = p.cwiseAbs() - h;
  if ((q.array() > 0.0).any()) {
    const Vec3 clamped = p.cwiseMax(-h).cwiseMin(h);
    return SafeNormalized(p - clamped, Vec3::UnitZ());
  }
  int axis = 0;
  q.maxCoeff(&axis);
  Vec3 n = Vec3::Zero();
  n[axis] = p[axis] >= 0.0 ? 1.0 : -1.0;
  return n;
}

std::optional<double> RaySphere(const Vec3& center, double radius,
                                const Vec3& origin, const Vec3& dir) {
  const Vec3 m = origin - center;
  const double c = m.squaredNorm() - radius * radius;
  if (c <= 0.0) return 0.0;
  const double b = m.dot(dir);
  if (b > 0.0) return std::nullopt;
  const double disc = b * b - c;
  if (disc < 0.0) return std::nullopt;
  return std::max(0.0, -b - std::sqrt(disc));
}

std::optional<double> RayCapsuleLocal(const Capsule& cap, const Vec3& o,
                                      const Vec3& d) {
  const double r = cap.radius;
  const double h = cap.half_length;
  const Vec3 top(0, 0, h);
  const Vec3 bottom(0, 0, -h);
  if ((o - ClosestOnSegment(bottom, top, o)).squaredNorm() <= r * r) {
    return 0.0;
  }
  std::optional<double> best;
  auto consider = [&best](std::optional<double> t) {
    if (t && (!best || *t < *best)) best = t;
  };
  // Cylinder side.
  const double a = d.x() * d.x() + d.y() * d.y();
  if (a > kTiny) {
    const double b = o.x() * d.x() + o.y() * d.y();
    const double c = o.x() * o.x() + o.y() * o.y() - r * r;
    const double disc = b * b - a * c;
    if (disc >= 0.0) {
      const double t = (-b - std::sqrt(disc)) / a;
      if (t >= 0.0 && std::abs(o.z() + t * d.z()) <= h) consider(t);
    }
  }
  consider(RaySphere(top, r, o, d));
  consider(RaySphere(bottom, r, o, d));
  return best;
}

std::optional<double> RayBoxLocal(const Vec3& h, const Vec3& o,
                                  const Vec3& d) {
  if ((o.cwiseAbs().array() <= h.array()).all()) return 0.0;
  double tmin = -std::numeric_limits<double>::infinity();
  double tmax = std::numeric_limits<double>::infinity();
  for (int i = 0; i < 3; ++i) {
    if (std::abs(d[i]) < kTiny) {
      if (std::abs(o[i]) > h[i]) return std::nullopt;
      continue;
    }
    double t1 = (-h[i] - o[i]) / d[i];
    double t2 = (h[i] - o[i]) / d[i];
    if (t1 > t2) std::swap(t1, t2);
    tmin = std::max(tmin, t1);
    tmax = std::min(tmax, t2);
    if (tmin > tmax) return std::nullopt;
  }
  if (tmax < 0.0 || tmin < 0.0) return std::nullopt;
  return tmin;
}

std::optional<ContactGeometry> SphereSphere(const Vec3& ca, double ra,
                                            const Vec3& cb, double rb) {
  const Vec3 delta = cb - ca;
  const double dist = delta.norm();
  if (dist > ra + rb) return std::nullopt;
  ContactGeometry c;
  c.normal = SafeNormalized(delta, Vec3::UnitZ());
  c.depth = ra + rb - dist;
  c.point = ca + c.normal * (ra - 0.5 * c.depth);
  return c;
}

std::optional<ContactGeometry> SphereBox(const Vec3& center, double r,
                                         const Box& box,
                                         const Transform& pose) {
  const Vec3 local = pose.inverse() * center;
  const Vec3& h = box.half_extents;
  const double sd = BoxSignedDistanceLocal(h, local);
  if (sd > r) return std::nullopt;
  // Outward box normal at the nearest surface point; contact normal points
  // from the sphere into the box.
  const Vec3 outward = pose.linear() * BoxNormalLocal(h, local);
  ContactGeometry c;
  c.normal = -outward;
  c.depth = r - sd;
  c.point = center - outward * sd;
  return c;
}

std::optional<ContactGeometry> SegmentSphere(const Vec3& a, const Vec3& b,
                                             double ra, const Vec3& center,
                                             double rb) {
  return SphereSphere(ClosestOnSegment(a, b, center), ra, center, rb);
}

// Signed distance from the box to the segment point at parameter t is convex
// in t, so golden-section search finds the global minimizer.
double MinimizeConvexOnUnit(const auto& f) {
  constexpr double kInvPhi = 0.6180339887498949;
  double lo = 0.0;
  double hi = 1.0;
  double x1 = hi - kInvPhi * (hi - lo);
  double x2 = lo + kInvPhi * (hi - lo);
  double f1 = f(x1);
  double f2 = f(x2);
  for (int i = 0; i < 90; ++i) {
    if (f1 <= f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - kInvPhi * (hi - lo);
      f1 = f(x1);
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + kInvPhi * (hi - lo);
      f2 = f(x2);
    }
  }
  double best = 0.5 * (lo + hi);
  double fbest = f(best);
  for (double end : {0.0, 1.0}) {
    const double fe = f(end);
    if (fe < fbest) {
      fbest = fe;
      best = end;
    }
  }
  return best;
}

std::optional<ContactGeometry> CapsuleBox(const Capsule& cap,
                                          const Transform& cap_pose,
                                          const Box& box,
                                          const Transform& box_pose) {
  const Transform inv = box_pose.inverse();
  const Vec3 a = inv * SegmentEnd(cap, cap_pose, -1.0);
  const Vec3 b = inv * SegmentEnd(cap, cap_pose, 1.0);
  const Vec3& h = box.half_extents;
  auto sd = [&](double t) {
    return BoxSignedDistanceLocal(h, a + t * (b - a));
  };
  const double t = MinimizeConvexOnUnit(sd);
  const Vec3 p_local = a + t * (b - a);
  const double dist = sd(t);
  if (dist > cap.radius) return std::nullopt;
  const Vec3 outward = box_pose.linear() * BoxNormalLocal(h, p_local);
  const Vec3 p = box_pose * p_local;
  ContactGeometry c;
  c.normal = -outward;
  c.depth = cap.radius - dist;
  c.point = p - outward * dist;
  return c;
}

std::optional<ContactGeometry> BoxBox(const Box& ba, const Transform& pa,
                                      const Box& bb, const Transform& pb) {
  const Mat3 ra = pa.linear();
  const Mat3 rb = pb.linear();
  const Vec3 delta = pb.translation() - pa.translation();
  std::array<Vec3, 15> axes;
  int count = 0;
  for (int i = 0; i < 3; ++i) axes[count++] = ra.col(i);
  for (int i = 0; i < 3; ++i) axes[count++] = rb.col(i);
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      const Vec3 c = ra.col(i).cross(rb.col(j));
      if (c.norm() > 1e-9) axes[count++] = c.normalized();
    }
  }
  double best_overlap = std::numeric_limits<double>::infinity();
  Vec3 best_axis = Vec3::UnitZ();
  for (int k = 0; k < count; ++k) {
    const Vec3& axis = axes[k];
    double proj_a = 0.0;
    double proj_b = 0.0;
    for (int i = 0; i < 3; ++i) {
      proj_a += ba.half_extents[i] * std::abs(ra.col(i).dot(axis));
      proj_b += bb.half_extents[i] * std::abs(rb.col(i).dot(axis));
    }
    const double overlap = proj_a + proj_b - std::abs(delta.dot(axis));
    if (overlap < 0.0) return std::nullopt;
    if (overlap < best_overlap) {
      best_overlap = overlap;
      best_axis = delta.dot(axis) >= 0.0 ? axis : Vec3(-axis);
    }
  }
  // Deepest vertex of b along -normal, moved back to the midplane.
  Vec3 support = pb.translation();
  for (int i = 0; i < 3; ++i) {
    const double s = rb.col(i).dot(best_axis) > 0.0 ? -1.0 : 1.0;
    support += s * bb.half_extents[i] * rb.col(i);
  }
  ContactGeometry c;
  c.normal = best_axis;
  c.depth = best_overlap;
  c.point = support + 0.5 * best_overlap * best_axis;
  return c;
}

ContactGeometry Flip(ContactGeometry c) {
  c.normal = -c.normal;
  return c;
}

std::optional<ContactGeometry> Flip(std::optional<ContactGeometry> c) {
  if (c) return Flip(*c);
  return c;
}

}  // namespace

Pose Pose::FromTransform(const Transform& t) {
  Pose p;
  p.position = t.translation();
  p.orientation = CanonicalQuat(Quat(t.linear()));
  return p;
}

Transform Pose::ToTransform() const {
  Transform t = Transform::Identity();
  t.linear() = orientation.normalized().toRotationMatrix();
  t.translation() = position;
  return t;
}

Quat CanonicalQuat(Quat q) {
  q.normalize();
  if (q.w() < 0.0) q.coeffs() = -q.coeffs();
  return q;
}

Mat3 RpyToMatrix(const Vec3& rpy) {
  return (Eigen::AngleAxisd(rpy.z(), Vec3::UnitZ()) *
          Eigen::AngleAxisd(rpy.y(), Vec3::UnitY()) *
          Eigen::AngleAxisd(rpy.x(), Vec3::UnitX()))
      .toRotationMatrix();
}

Vec3 MatrixToRpy(const Mat3& r) {
  const double pitch = std::asin(std::clamp(-r(2, 0), -1.0, 1.0));
  double roll;
  double yaw;
  if (std::abs(r(2, 0)) < 1.0 - 1e-12) {
    roll = std::atan2(r(2, 1), r(2, 2));
    yaw = std::atan2(r(1, 0), r(0, 0));
  } else {
    // Gimbal lock: fold everything into yaw.
    roll = 0.0;
    yaw = std::atan2(-r(0, 1), r(1, 1));
  }
  return Vec3(roll, pitch, yaw);
}

Vec3 RotationVector(const Mat3& r) {
  const double cos_angle = std::clamp((r.trace() - 1.0) * 0.5, -1.0, 1.0);
  const double angle = std::acos(cos_angle);
  const Vec3 skew(r(2, 1) - r(1, 2), r(0, 2) - r(2, 0), r(1, 0) - r(0, 1));
  if (angle < 1e-6) {
    // First-order expansion around identity.
    return 0.5 * skew;
  }
  if (kPi - angle < 1e-6) {
    // Near pi the skew part vanishes; recover the axis from the symmetric part.
    const Mat3 b = 0.5 * (r + Mat3::Identity());
    int col = 0;
    b.diagonal().maxCoeff(&col);
    Vec3 axis = b.col(col) / std::sqrt(std::max(b(col, col), kTiny));
    if (axis.dot(skew) < 0.0) axis = -axis;
    return axis.normalized() * angle;
  }
  return skew * (angle / (2.0 * std::sin(angle)));
}

bool ShapeDimensionsValid(const Shape& shape) {
  return std::visit(
      Overloaded{
          [](const Sphere& s) { return s.radius > 0.0; },
          [](const Capsule& c) {
            return c.radius > 0.0 && c.half_length > 0.0;
          },
          [](const Box& b) { return (b.half_extents.array() > 0.0).all(); },
      },
      shape);
}

double SurfaceArea(const Shape& shape) {
  return std::visit(
      Overloaded{
          [](const Sphere& s) { return 4.0 * kPi * s.radius * s.radius; },
          [](const Capsule& c) {
            return 4.0 * kPi * c.radius * c.radius +
                   4.0 * kPi * c.radius * c.half_length;
          },
          [](const Box& b) {
            const Vec3& h = b.half_extents;
            return 8.0 * (h.x() * h.y() + h.y() * h.z() + h.x() * h.z());
          },
      },
      shape);
}

void Aabb::Extend(const Aabb& other) {
  min = min.cwiseMin(other.min);
  max = max.cwiseMax(other.max);
}

void Aabb::Extend(const Vec3& p) {
  min = min.cwiseMin(p);
  max = max.cwiseMax(p);
}

Aabb Aabb::Inflated(double margin) const {
  Aabb out = *this;
  out.min.array() -= margin;
  out.max.array() += margin;
  return out;
}

bool Aabb::Overlaps(const Aabb& other) const {
  return (min.array() <= other.max.array()).all() &&
         (other.min.array() <= max.array()).all();
}

Aabb ComputeAabb(const Shape& shape, const Transform& pose) {
  return std::visit(
      Overloaded{
          [&](const Sphere& s) {
            Aabb box;
            box.min = pose.translation().array() - s.radius;
            box.max = pose.translation().array() + s.radius;
            return box;
          },
          [&](const Capsule& c) {
            Aabb box;
            box.Extend(SegmentEnd(c, pose, -1.0));
            box.Extend(SegmentEnd(c, pose, 1.0));
            return box.Inflated(c.radius);
          },
          [&](const Box& b) {
            const Vec3 extent = pose.linear().cwiseAbs() * b.half_extents;
            Aabb box;
            box.min = pose.translation() - extent;
            box.max = pose.translation() + extent;
            return box;
          },
      },
      shape);
}

double SignedDistance(const Shape& shape, const Transform& pose,
                      const Vec3& point) {
  return std::visit(
      Overloaded{
          [&](const Sphere& s) {
            return (point - pose.translation()).norm() - s.radius;
          },
          [&](const Capsule& c) {
            const Vec3 a = SegmentEnd(c, pose, -1.0);
            const Vec3 b = SegmentEnd(c, pose, 1.0);
            return (point - ClosestOnSegment(a, b, point)).norm() - c.radius;
          },
          [&](const Box& b) {
            return BoxSignedDistanceLocal(b.half_extents,
                                          pose.inverse() * point);
          },
      },
      shape);
}

Vec3 OutwardNormal(const Shape& shape, const Transform& pose,
                   const Vec3& point) {
  return std::visit(
      Overloaded{
          [&](const Sphere&) {
            return SafeNormalized(point - pose.translation(),
                                  pose.linear().col(2));
          },
          [&](const Capsule& c) {
            const Vec3 a = SegmentEnd(c, pose, -1.0);
            const Vec3 b = SegmentEnd(c, pose, 1.0);
            const Vec3 axis_dir = pose.linear().col(2);
            return SafeNormalized(point - ClosestOnSegment(a, b, point),
                                  AnyPerpendicular(axis_dir));
          },
          [&](const Box& b) {
            return Vec3(pose.linear() *
                        BoxNormalLocal(b.half_extents, pose.inverse() * point));
          },
      },
      shape);
}

std::optional<double> RayCast(const Shape& shape, const Transform& pose,
                              const Vec3& origin, const Vec3& direction,
                              double max_distance) {
  std::optional<double> hit = std::visit(
      Overloaded{
          [&](const Sphere& s) {
            return RaySphere(pose.translation(), s.radius, origin, direction);
          },
          [&](const Capsule& c) {
            const Mat3 rt = pose.linear().transpose();
            return RayCapsuleLocal(c, rt * (origin - pose.translation()),
                                   rt * direction);
          },
          [&](const Box& b) {
            const Mat3 rt = pose.linear().transpose();
            return RayBoxLocal(b.half_extents,
                               rt * (origin - pose.translation()),
                               rt * direction);
          },
      },
      shape);
  if (hit && *hit > max_distance) return std::nullopt;
  return hit;
}

std::pair<double, double> ClosestSegmentParameters(const Vec3& p0,
                                                   const Vec3& p1,
                                                   const Vec3& q0,
                                                   const Vec3& q1) {
  const Vec3 d1 = p1 - p0;
  const Vec3 d2 = q1 - q0;
  const Vec3 r = p0 - q0;
  const double a = d1.squaredNorm();
  const double e = d2.squaredNorm();
  const double f = d2.dot(r);
  if (a < kTiny && e < kTiny) return {0.0, 0.0};
  if (a < kTiny) return {0.0, std::clamp(f / e, 0.0, 1.0)};
  const double c = d1.dot(r);
  if (e < kTiny) return {std::clamp(-c / a, 0.0, 1.0), 0.0};
  const double b = d1.dot(d2);
  const double denom = a * e - b * b;
  double s = denom > 1e-14 * a * e ? std::clamp((b * f - c * e) / denom, 0.0, 1.0)
                                   : 0.0;
  double t = (b * s + f) / e;
  if (t < 0.0) {
    t = 0.0;
    s = std::clamp(-c / a, 0.0, 1.0);
  } else if (t > 1.0) {
    t = 1.0;
    s = std::clamp((b - c) / a, 0.0, 1.0);
  }
  return {s, t};
}

std::optional<ContactGeometry> Collide(const Shape& a, const Transform& pose_a,
                                       const Shape& b,
                                       const Transform& pose_b) {
  return std::visit(
      Overloaded{
          [&](const Sphere& sa, const Sphere& sb) {
            return SphereSphere(pose_a.translation(), sa.radius,
                                pose_b.translation(), sb.radius);
          },
          [&](const Sphere& sa, const Capsule& cb) {
            return Flip(SegmentSphere(SegmentEnd(cb, pose_b, -1.0),
                                      SegmentEnd(cb, pose_b, 1.0), cb.radius,
                                      pose_a.translation(), sa.radius));
          },
          [&](const Capsule& ca, const Sphere& sb) {
            return SegmentSphere(SegmentEnd(ca, pose_a, -1.0),
                                 SegmentEnd(ca, pose_a, 1.0), ca.radius,
                                 pose_b.translation(), sb.radius);
          },
          [&](const Sphere& sa, const Box& bb) {
            return SphereBox(pose_a.translation(), sa.radius, bb, pose_b);
          },
          [&](const Box& ba, const Sphere& sb) {
            return Flip(SphereBox(pose_b.translation(), sb.radius, ba, pose_a));
          },
          [&](const Capsule& ca, const Capsule& cb) {
            const Vec3 p0 = SegmentEnd(ca, pose_a, -1.0);
            const Vec3 p1 = SegmentEnd(ca, pose_a, 1.0);
            const Vec3 q0 = SegmentEnd(cb, pose_b, -1.0);
            const Vec3 q1 = SegmentEnd(cb, pose_b, 1.0);
            const auto [s, t] = ClosestSegmentParameters(p0, p1, q0, q1);
            return SphereSphere(p0 + s * (p1 - p0), ca.radius,
                                q0 + t * (q1 - q0), cb.radius);
          },
          [&](const Capsule& ca, const Box& bb) {
            return CapsuleBox(ca, pose_a, bb, pose_b);
          },
          [&](const Box& ba, const Capsule& cb) {
            return Flip(CapsuleBox(cb, pose_b, ba, pose_a));
          },
          [&](const Box& ba, const Box& bb) {
            return BoxBox(ba, pose_a, bb, pose_b);
          },
      },
      a, b);
}

}  // namespace humsim
