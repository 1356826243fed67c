#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "swm/index_types.hpp"
#include "swm/pano.hpp"

namespace swm {

/// Depth-lifted reference pixels in world coordinates.
struct PointCloud {
  std::vector<Eigen::Vector3d> positions;
  std::vector<std::array<std::uint8_t, 3>> colors;

  std::size_t size() const { return positions.size(); }
};

/// Result of forward-splatting a cloud into a target view. Pixels never
/// written by any splat are invalid; their color stays black and their
/// depth NaN.
struct WarpedFrame {
  ImageU8 image;
  BoolMask validity;
  DepthMap depth;
  std::string source_ref_id;
};

/// Lifts every valid-depth pixel to a world point (Unproj of the warping
/// equation). Depth is the camera-frame z of the surface.
inline PointCloud unproject(const PinholeView& view) {
  if (!view.image || !view.depth)
    throw ValidationError("unproject: view " + view.id() + " has no rasters");
  view.validate_rasters();
  const auto& img = *view.image;
  const auto& dep = *view.depth;
  PointCloud cloud;
  cloud.positions.reserve(dep.values.size());
  cloud.colors.reserve(dep.values.size());
  for (int v = 0; v < dep.height; ++v) {
    for (int u = 0; u < dep.width; ++u) {
      const float z = dep.at(u, v);
      if (!std::isfinite(z) || z <= 0) continue;
      const Eigen::Vector3d p_cam = view.intrinsics.pixel_ray(u, v) * double(z);
      cloud.positions.push_back(view.pose.to_world(p_cam));
      cloud.colors.push_back(img.at(u, v));
    }
  }
  return cloud;
}

/// Projects the cloud into the target view (Render of the warping
/// equation): single-pixel footprint, z-buffered, behind-camera culled.
inline WarpedFrame splat(const PointCloud& cloud, const CameraPose& target_pose,
                         const CameraIntrinsics& target_intrinsics) {
  target_intrinsics.validate();
  target_pose.validate();
  WarpedFrame out;
  out.image = ImageU8::filled(target_intrinsics.width, target_intrinsics.height);
  out.validity = BoolMask::filled(target_intrinsics.width, target_intrinsics.height, false);
  out.depth = DepthMap::filled(target_intrinsics.width, target_intrinsics.height,
                               std::numeric_limits<float>::quiet_NaN());
  const Eigen::Matrix3d rt = target_pose.rotation.transpose();
  const Eigen::Vector3d t = target_pose.translation;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const Eigen::Vector3d p = rt * (cloud.positions[i] - t);
    if (p.z() <= 1e-6) continue;
    const Eigen::Vector2d uv = target_intrinsics.project(p);
    const int x = int(std::floor(uv.x()));
    const int y = int(std::floor(uv.y()));
    if (x < 0 || y < 0 || x >= out.image.width || y >= out.image.height) continue;
    float& zbuf = out.depth.at(x, y);
    if (!std::isfinite(zbuf) || p.z() < zbuf) {
      zbuf = float(p.z());
      out.image.at(x, y) = cloud.colors[i];
      out.validity.set(x, y, true);
    }
  }
  return out;
}

/// Warps one frame per trajectory pose from its single spatially nearest
/// reference (distance ties broken toward the lower view id). Empty
/// references produce all-invalid frames, the warp-dropout signal.
inline std::vector<WarpedFrame> warp_chunk(const std::vector<CameraPose>& trajectory,
                                           const RetrievalResult& refs,
                                           const RasterProvider* provider = nullptr,
                                           const CameraIntrinsics* target_intrinsics = nullptr) {
  std::vector<WarpedFrame> frames(trajectory.size());
  if (refs.entries.empty()) {
    CameraIntrinsics k = target_intrinsics ? *target_intrinsics
                                           : intrinsics_from_fov(kPi / 2.0, 160, 96);
    for (std::size_t i = 0; i < trajectory.size(); ++i) {
      frames[i].image = ImageU8::filled(k.width, k.height);
      frames[i].validity = BoolMask::filled(k.width, k.height, false);
      frames[i].depth = DepthMap::filled(k.width, k.height, std::numeric_limits<float>::quiet_NaN());
    }
    return frames;
  }
  std::vector<PinholeView> views;
  views.reserve(refs.entries.size());
  for (const auto& e : refs.entries) {
    views.push_back(e.view);
    materialize_view(views.back(), provider);
  }
  std::vector<PointCloud> clouds(views.size());
  std::vector<bool> lifted(views.size(), false);

  std::vector<std::size_t> nearest(trajectory.size());
  for (std::size_t f = 0; f < trajectory.size(); ++f) {
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t r = 0; r < views.size(); ++r) {
      const double d = (views[r].pose.translation - trajectory[f].translation).norm();
      if (d < best_d || (d == best_d && views[r].id() < views[best].id())) {
        best_d = d;
        best = r;
      }
    }
    nearest[f] = best;
    if (!lifted[best]) {
      clouds[best] = unproject(views[best]);
      lifted[best] = true;
    }
  }
  parallel_for(trajectory.size(), [&](std::size_t f) {
    const std::size_t r = nearest[f];
    const CameraIntrinsics& k = target_intrinsics ? *target_intrinsics : views[r].intrinsics;
    frames[f] = splat(clouds[r], trajectory[f], k);
    frames[f].source_ref_id = views[r].id();
  });
  return frames;
}

/// Full 360x180 capture stored as a 2:1 equirectangular raster. Pixel
/// center (x+0.5, y+0.5) maps to longitude 2*pi*(x+0.5)/W - pi (measured
/// from the panorama's forward axis) and latitude pi/2 - pi*(y+0.5)/H.
struct Panorama {
  ImageU8 image;
  double heading = 0;

  void validate() const {
    if (image.width != 2 * image.height || image.height <= 0)
      throw ValidationError("panorama: width must equal 2 x height");
  }
};

namespace detail {

inline std::array<std::uint8_t, 3> sample_equirect(const ImageU8& img, double lon, double lat) {
  const int w = img.width, h = img.height;
  double xc = (lon / (2 * kPi) + 0.5) * w - 0.5;
  double yc = (0.5 - lat / kPi) * h - 0.5;
  xc -= std::floor(xc / w) * w;  // wrap longitude
  yc = std::clamp(yc, 0.0, double(h - 1));
  const int x0 = int(std::floor(xc));
  const int y0 = int(std::floor(yc));
  const double fx = xc - x0, fy = yc - y0;
  const int x1 = (x0 + 1) % w;
  const int y1 = std::min(y0 + 1, h - 1);
  std::array<std::uint8_t, 3> out;
  for (int c = 0; c < 3; ++c) {
    const double v = (1 - fx) * (1 - fy) * img.at(x0 % w, y0)[c] +
                     fx * (1 - fy) * img.at(x1, y0)[c] +
                     (1 - fx) * fy * img.at(x0 % w, y1)[c] + fx * fy * img.at(x1, y1)[c];
    out[c] = std::uint8_t(std::lround(std::clamp(v, 0.0, 255.0)));
  }
  return out;
}

/// Rotation from camera frame into the panorama frame for a view at
/// (yaw, pitch, roll). Yaw turns toward increasing longitude, pitch up.
inline Eigen::Matrix3d pano_view_rotation(double yaw, double pitch, double roll) {
  const Eigen::Matrix3d ry = Eigen::AngleAxisd(yaw, Eigen::Vector3d::UnitY()).toRotationMatrix();
  const Eigen::Matrix3d rx = Eigen::AngleAxisd(pitch, Eigen::Vector3d::UnitX()).toRotationMatrix();
  const Eigen::Matrix3d rz = Eigen::AngleAxisd(roll, Eigen::Vector3d::UnitZ()).toRotationMatrix();
  return ry * rx * rz;
}

}  // namespace detail

/// Longitude/latitude of a direction in the panorama frame
/// (x toward +90 degrees, y down, z forward).
inline std::pair<double, double> pano_lonlat(const Eigen::Vector3d& dir) {
  const Eigen::Vector3d d = dir.normalized();
  return {std::atan2(d.x(), d.z()), std::asin(std::clamp(-d.y(), -1.0, 1.0))};
}

/// Renders a pinhole view out of an equirectangular panorama with bilinear
/// sampling, longitude wraparound and pole clamping. fx/fy of `out` are
/// rederived from fov_h; width/height/principal point are taken as given.
inline ImageU8 render_pinhole(const Panorama& pano, double yaw, double pitch, double roll,
                              double fov_h, CameraIntrinsics out) {
  pano.validate();
  if (!(fov_h > 0 && fov_h < kPi)) throw ValidationError("render_pinhole: fov_h out of (0, pi)");
  out.fx = (out.width / 2.0) / std::tan(fov_h / 2.0);
  out.fy = out.fx;
  out.validate();
  const Eigen::Matrix3d rot = detail::pano_view_rotation(yaw, pitch, roll);
  ImageU8 img = ImageU8::filled(out.width, out.height);
  parallel_for(std::size_t(out.height), [&](std::size_t row) {
    const int v = int(row);
    for (int u = 0; u < out.width; ++u) {
      const auto [lon, lat] = pano_lonlat(rot * out.pixel_ray(u, v));
      img.at(u, v) = detail::sample_equirect(pano.image, lon, lat);
    }
  });
  return img;
}

}  // namespace swm
