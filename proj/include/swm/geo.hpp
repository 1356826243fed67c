#pragma once

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <numbers>
#include <optional>
#include <vector>

#include "swm/core.hpp"

namespace swm {

/// Mean Earth radius of the spherical model used for GPS <-> local metric
/// conversion (meters).
inline constexpr double kEarthRadius = 6371008.8;

/// Pinhole intrinsics in pixels. Pixel (u, v) covers [u, u+1) x [v, v+1)
/// with its center at (u + 0.5, v + 0.5).
struct CameraIntrinsics {
  double fx = 0, fy = 0;
  double cx = 0, cy = 0;
  int width = 0, height = 0;

  void validate() const {
    if (!(fx > 0) || !(fy > 0)) throw ValidationError("intrinsics: fx, fy must be > 0");
    if (!(cx > 0 && cx < width)) throw ValidationError("intrinsics: cx out of raster");
    if (!(cy > 0 && cy < height)) throw ValidationError("intrinsics: cy out of raster");
  }

  /// Camera-frame ray through the center of pixel (u, v), z normalized to 1.
  Eigen::Vector3d pixel_ray(double u, double v) const {
    return {(u + 0.5 - cx) / fx, (v + 0.5 - cy) / fy, 1.0};
  }

  /// Continuous image coordinates of a camera-frame point (z > 0 assumed).
  Eigen::Vector2d project(const Eigen::Vector3d& p) const {
    return {fx * p.x() / p.z() + cx, fy * p.y() / p.z() + cy};
  }

  bool operator==(const CameraIntrinsics&) const = default;
};

/// Symmetric pinhole intrinsics from a horizontal field of view.
inline CameraIntrinsics intrinsics_from_fov(double fov_h, int width, int height) {
  if (!(fov_h > 0 && fov_h < kPi)) throw ValidationError("fov_h must be in (0, pi)");
  CameraIntrinsics k;
  k.width = width;
  k.height = height;
  k.fx = (width / 2.0) / std::tan(fov_h / 2.0);
  k.fy = k.fx;
  k.cx = width / 2.0;
  k.cy = height / 2.0;
  return k;
}

/// Camera-to-world pose. Camera axes are Right-Down-Forward; the world frame
/// is local ENU meters (x east, y north, z up).
struct CameraPose {
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();

  static CameraPose identity() { return {}; }

  void validate(double tol = 1e-9) const {
    const Eigen::Matrix3d err = rotation.transpose() * rotation - Eigen::Matrix3d::Identity();
    if (err.cwiseAbs().maxCoeff() > tol)
      throw ValidationError("pose: rotation not orthonormal");
    if (std::abs(rotation.determinant() - 1.0) > tol)
      throw ValidationError("pose: rotation determinant != +1");
  }

  Eigen::Vector3d right() const { return rotation.col(0); }
  Eigen::Vector3d down() const { return rotation.col(1); }
  Eigen::Vector3d forward() const { return rotation.col(2); }

  /// World point of a camera-frame point.
  Eigen::Vector3d to_world(const Eigen::Vector3d& p_cam) const {
    return rotation * p_cam + translation;
  }
  /// Camera-frame point of a world point.
  Eigen::Vector3d to_camera(const Eigen::Vector3d& p_world) const {
    return rotation.transpose() * (p_world - translation);
  }

  Eigen::Matrix4d matrix() const {
    Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
    m.block<3, 3>(0, 0) = rotation;
    m.block<3, 1>(0, 3) = translation;
    return m;
  }
};

/// Rigid map taking reference-camera-frame points into the target camera
/// frame (the c_ref->t of geometric referencing).
struct RigidTransform {
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();

  Eigen::Vector3d apply(const Eigen::Vector3d& p) const { return rotation * p + translation; }

  RigidTransform compose(const RigidTransform& inner) const {
    return {rotation * inner.rotation, rotation * inner.translation + translation};
  }
  RigidTransform inverse() const {
    return {rotation.transpose(), -(rotation.transpose() * translation)};
  }
};

inline RigidTransform relative_pose(const CameraPose& reference, const CameraPose& target) {
  reference.validate();
  target.validate();
  const Eigen::Matrix3d rt = target.rotation.transpose();
  return {rt * reference.rotation, rt * (reference.translation - target.translation)};
}

/// Camera-to-world rotation for a level-capture camera: heading is the
/// compass angle of the forward axis (0 = north/+y, pi/2 = east/+x),
/// pitch tilts the forward axis up, roll spins about it.
inline Eigen::Matrix3d heading_rotation(double heading, double pitch = 0, double roll = 0) {
  // Level camera facing north: right = east, down = -up, forward = north.
  Eigen::Matrix3d base;
  base.col(0) = Eigen::Vector3d(1, 0, 0);
  base.col(1) = Eigen::Vector3d(0, 0, -1);
  base.col(2) = Eigen::Vector3d(0, 1, 0);
  const Eigen::Matrix3d yaw = Eigen::AngleAxisd(-heading, Eigen::Vector3d::UnitZ()).toRotationMatrix();
  const Eigen::Matrix3d tilt = Eigen::AngleAxisd(pitch, Eigen::Vector3d::UnitX()).toRotationMatrix();
  const Eigen::Matrix3d spin = Eigen::AngleAxisd(roll, Eigen::Vector3d::UnitZ()).toRotationMatrix();
  return yaw * base * tilt * spin;
}

/// Compass heading of a pose's forward axis projected to the horizontal.
inline double pose_heading(const CameraPose& pose) {
  const Eigen::Vector3d f = pose.forward();
  return std::atan2(f.x(), f.y());
}

/// WGS-84 geographic coordinate. Altitude is optional (street-view altitude
/// metadata is unreliable) and defaults to 0 in local conversions.
struct GeoPoint {
  double latitude = 0;
  double longitude = 0;
  std::optional<double> altitude;

  void validate() const {
    if (std::abs(latitude) > 90.0) throw ValidationError("geo: |latitude| > 90");
    if (std::abs(longitude) > 180.0) throw ValidationError("geo: |longitude| > 180");
  }

  Eigen::Vector3d unit_vector() const {
    const double lat = deg_to_rad(latitude), lon = deg_to_rad(longitude);
    return {std::cos(lat) * std::cos(lon), std::cos(lat) * std::sin(lon), std::sin(lat)};
  }
};

namespace detail {
struct EnuBasis {
  Eigen::Vector3d origin, east, north;
};
inline EnuBasis enu_basis(const GeoPoint& origin) {
  origin.validate();
  const Eigen::Vector3d o = origin.unit_vector();
  Eigen::Vector3d east = Eigen::Vector3d::UnitZ().cross(o);
  const double n = east.norm();
  if (n < 1e-12) throw ValidationError("geo: ENU origin at a pole");
  east /= n;
  return {o, east, o.cross(east)};
}
}  // namespace detail

/// Azimuthal-equidistant local frame: east/north/up meters about `origin`.
/// Distance from the origin is exact on the sphere; pairwise distortion is
/// O((d/R)^2) and stays below 0.1% within the 100 km validity radius.
inline Eigen::Vector3d geo_to_local(const GeoPoint& point, const GeoPoint& origin) {
  point.validate();
  const auto basis = detail::enu_basis(origin);
  const Eigen::Vector3d p = point.unit_vector();
  const double c = std::clamp(basis.origin.dot(p), -1.0, 1.0);
  const double d = kEarthRadius * std::atan2(basis.origin.cross(p).norm(), c);
  if (d > 100000.0) throw ValidationError("geo: point beyond 100 km of local origin");
  const double up = point.altitude.value_or(0.0) - origin.altitude.value_or(0.0);
  if (d < 1e-9) return {0.0, 0.0, up};
  Eigen::Vector3d dir = p - c * basis.origin;
  dir /= dir.norm();
  return {d * dir.dot(basis.east), d * dir.dot(basis.north), up};
}

inline std::vector<Eigen::Vector3d> geo_to_local(const std::vector<GeoPoint>& points,
                                                 const GeoPoint& origin) {
  std::vector<Eigen::Vector3d> out;
  out.reserve(points.size());
  for (const auto& g : points) out.push_back(geo_to_local(g, origin));
  return out;
}

/// Inverse of geo_to_local on the same spherical model.
inline GeoPoint geo_from_local(const Eigen::Vector3d& local, const GeoPoint& origin) {
  const auto basis = detail::enu_basis(origin);
  const double d = std::hypot(local.x(), local.y());
  GeoPoint g;
  if (d < 1e-12) {
    g = origin;
  } else {
    const Eigen::Vector3d dir = (local.x() * basis.east + local.y() * basis.north) / d;
    const double a = d / kEarthRadius;
    const Eigen::Vector3d p = std::cos(a) * basis.origin + std::sin(a) * dir;
    g.latitude = rad_to_deg(std::asin(std::clamp(p.z(), -1.0, 1.0)));
    g.longitude = rad_to_deg(std::atan2(p.y(), p.x()));
  }
  g.altitude = local.z() + origin.altitude.value_or(0.0);
  return g;
}

/// 6-channel per-pixel ray map: world direction (unit) and moment
/// (camera origin x direction), the raw input of the camera encoder.
struct PluckerMap {
  int width = 0, height = 0;
  std::vector<std::array<float, 6>> data;

  const std::array<float, 6>& at(int u, int v) const { return data[std::size_t(v) * width + u]; }
};

inline PluckerMap plucker_map(const CameraPose& pose, const CameraIntrinsics& intrinsics) {
  intrinsics.validate();
  pose.validate();
  PluckerMap map;
  map.width = intrinsics.width;
  map.height = intrinsics.height;
  map.data.resize(std::size_t(map.width) * map.height);
  const Eigen::Vector3d& o = pose.translation;
  for (int v = 0; v < map.height; ++v) {
    for (int u = 0; u < map.width; ++u) {
      Eigen::Vector3d d = pose.rotation * intrinsics.pixel_ray(u, v);
      d /= d.norm();
      const Eigen::Vector3d m = o.cross(d);
      map.data[std::size_t(v) * map.width + u] = {
          float(d.x()), float(d.y()), float(d.z()), float(m.x()), float(m.y()), float(m.z())};
    }
  }
  return map;
}

/// Geodesic distance on SO(3) in radians: arccos((trace(R1^T R2) - 1)/2),
/// clamped to [0, pi]. Small angles go through the Frobenius-norm identity
/// ||R1 - R2||_F = 2*sqrt(2)*sin(theta/2); arccos alone loses half the
/// significant digits near 0.
inline double geodesic_rotation_distance(const Eigen::Matrix3d& r1, const Eigen::Matrix3d& r2) {
  const double t = ((r1.transpose() * r2).trace() - 1.0) / 2.0;
  if (t > 0.5) {
    const double s = (r1 - r2).norm() / (2.0 * std::numbers::sqrt2);
    return 2.0 * std::asin(std::min(1.0, s));
  }
  return std::acos(std::clamp(t, -1.0, 1.0));
}

}  // namespace swm
