#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <cmath>
#include <limits>
#include <vector>

#include "landmarks/error.hpp"

namespace landmarks {

/// A location in the robot base frame (z up), meters.
using Point3 = Eigen::Vector3d;

inline bool is_finite(const Point3& p) {
  return std::isfinite(p.x()) && std::isfinite(p.y()) && std::isfinite(p.z());
}

/// Unordered set of points. Storage order is only used as a stable id.
struct PointCloud {
  std::vector<Point3> points;

  PointCloud() = default;
  explicit PointCloud(std::vector<Point3> pts) : points(std::move(pts)) {}

  std::size_t size() const noexcept { return points.size(); }
  bool empty() const noexcept { return points.empty(); }
  const Point3& operator[](std::size_t i) const { return points[i]; }

  auto begin() const { return points.begin(); }
  auto end() const { return points.end(); }

  friend bool operator==(const PointCloud& a, const PointCloud& b) { return a.points == b.points; }
};

/// Rigid motion x -> R x + t. The rotation is kept as a unit quaternion and
/// renormalized on every composition so it never drifts off SO(3).
class RigidTransform {
 public:
  RigidTransform() : rotation_(Eigen::Quaterniond::Identity()), translation_(Point3::Zero()) {}

  RigidTransform(const Eigen::Quaterniond& rotation, const Point3& translation)
      : rotation_(rotation), translation_(translation) {
    const double n2 = rotation.squaredNorm();
    if (!std::isfinite(n2) || n2 < 1e-24)
      throw ValidationError("rotation", "quaternion must be finite and non-zero");
    if (!is_finite(translation)) throw ValidationError("translation", "must be finite");
    // Already-unit quaternions are kept bit-for-bit so serialization round trips exactly.
    if (std::abs(n2 - 1.0) > 4.0 * std::numeric_limits<double>::epsilon()) rotation_.normalize();
  }

  /// Rotation matrix is projected back onto SO(3) through the quaternion.
  RigidTransform(const Eigen::Matrix3d& rotation, const Point3& translation)
      : RigidTransform(Eigen::Quaterniond(rotation), translation) {}

  static RigidTransform identity() { return {}; }

  static RigidTransform from_translation(const Point3& t) {
    return {Eigen::Quaterniond::Identity(), t};
  }

  static RigidTransform from_axis_angle(const Point3& axis, double angle,
                                        const Point3& t = Point3::Zero()) {
    return {Eigen::Quaterniond(Eigen::AngleAxisd(angle, axis.normalized())), t};
  }

  const Eigen::Quaterniond& quaternion() const noexcept { return rotation_; }
  Eigen::Matrix3d rotation() const { return rotation_.toRotationMatrix(); }
  const Point3& translation() const noexcept { return translation_; }

  Eigen::Isometry3d isometry() const {
    Eigen::Isometry3d iso = Eigen::Isometry3d::Identity();
    iso.linear() = rotation();
    iso.translation() = translation_;
    return iso;
  }

  Point3 operator()(const Point3& p) const { return rotation_ * p + translation_; }

  RigidTransform inverse() const {
    const Eigen::Quaterniond inv = rotation_.conjugate();
    return {inv, -(inv * translation_)};
  }

  /// Rotation angle in radians, in [0, pi].
  double angle() const {
    const double w = std::min(1.0, std::abs(rotation_.w()));
    return 2.0 * std::acos(w);
  }

 private:
  Eigen::Quaterniond rotation_;
  Point3 translation_;
};

inline Point3 transform_point(const Point3& p, const RigidTransform& T) { return T(p); }

/// Applies `second` first, then `first`.
inline RigidTransform compose(const RigidTransform& first, const RigidTransform& second) {
  return {first.quaternion() * second.quaternion(), first(second.translation())};
}

inline PointCloud transform_cloud(const PointCloud& cloud, const RigidTransform& T) {
  PointCloud out;
  out.points.reserve(cloud.size());
  for (const auto& p : cloud) out.points.push_back(T(p));
  return out;
}

/// Box with a 6-DOF pose (box frame -> world) and full extents along its own axes.
struct OrientedBox {
  RigidTransform pose;
  Point3 size = Point3::Ones();

  OrientedBox() = default;
  OrientedBox(RigidTransform p, Point3 s) : pose(std::move(p)), size(std::move(s)) {
    if (!is_finite(size) || size.minCoeff() <= 0.0)
      throw ValidationError("box.size", "box extent must be positive");
  }

  static OrientedBox axis_aligned(const Point3& center, const Point3& size) {
    return {RigidTransform::from_translation(center), size};
  }

  const Point3& center() const noexcept { return pose.translation(); }
};

inline OrientedBox transform_box(const OrientedBox& box, const RigidTransform& T) {
  return {compose(T, box.pose), box.size};
}

/// Closed containment: points on a face are inside.
inline bool box_contains(const OrientedBox& box, const Point3& p) {
  const Point3 local = box.pose.quaternion().conjugate() * (p - box.pose.translation());
  const Point3 half = 0.5 * box.size;
  return std::abs(local.x()) <= half.x() && std::abs(local.y()) <= half.y() &&
         std::abs(local.z()) <= half.z();
}

inline PointCloud crop_to_box(const PointCloud& cloud, const OrientedBox& box) {
  PointCloud out;
  for (const auto& p : cloud)
    if (box_contains(box, p)) out.points.push_back(p);
  return out;
}

inline Point3 centroid(const PointCloud& cloud) {
  if (cloud.empty()) throw Error("empty cloud has no centroid");
  Point3 sum = Point3::Zero();
  for (const auto& p : cloud) sum += p;
  return sum / static_cast<double>(cloud.size());
}

/// Closed axis-aligned region, used for the workspace crop.
struct AxisAlignedRegion {
  Point3 min = Point3::Constant(-std::numeric_limits<double>::infinity());
  Point3 max = Point3::Constant(std::numeric_limits<double>::infinity());

  AxisAlignedRegion() = default;
  AxisAlignedRegion(Point3 lo, Point3 hi) : min(std::move(lo)), max(std::move(hi)) {
    if ((min.array() > max.array()).any())
      throw ValidationError("workspace", "region min must not exceed max on any axis");
  }

  static AxisAlignedRegion unbounded() { return {}; }

  bool contains(const Point3& p) const {
    return (p.array() >= min.array()).all() && (p.array() <= max.array()).all();
  }
};

}  // namespace landmarks
