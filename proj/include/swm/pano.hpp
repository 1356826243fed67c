#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "swm/geo.hpp"
#include "swm/raster.hpp"

namespace swm {

/// One pinhole rendering of a panorama: the unit of geometric computation.
/// Rasters may be unset until materialized through a RasterProvider
/// (databases hold hundreds of thousands of views; only retrieved ones
/// ever need pixels).
struct PinholeView {
  std::string parent_id;
  int yaw_index = 0;  // 0..7, 45 degree spacing
  CameraIntrinsics intrinsics;
  CameraPose pose;
  std::string image_path;  // relative to the dataset root; empty if in-memory
  std::string depth_path;
  std::shared_ptr<const ImageU8> image;
  std::shared_ptr<const DepthMap> depth;

  void validate_rasters() const {
    if (image && depth && (image->width != depth->width || image->height != depth->height))
      throw ValidationError("view " + id() + ": image and depth dimensions differ");
    if (image && (image->width != intrinsics.width || image->height != intrinsics.height))
      throw ValidationError("view " + id() + ": raster does not match intrinsics");
  }
  std::string id() const { return parent_id + ":" + std::to_string(yaw_index); }
};

/// One geo-located, timestamped panorama with its 8 equi-angular pinhole
/// renderings; the unit of the retrieval database.
struct PanoramaRecord {
  std::string id;
  GeoPoint geo;
  Eigen::Vector3d local_position = Eigen::Vector3d::Zero();
  double timestamp = 0;  // seconds since epoch
  std::string session_id;
  double heading = 0;  // compass radians of the vehicle forward direction
  std::vector<PinholeView> views;

  void validate() const {
    if (id.empty()) throw ValidationError("record: empty id");
    if (!(timestamp > 0)) throw ValidationError("record " + id + ": timestamp must be > 0");
    if (views.size() != 8) throw ValidationError("record " + id + ": expected exactly 8 views");
    for (int k = 0; k < 8; ++k) {
      const auto& v = views[k];
      if (v.yaw_index != k) throw ValidationError("record " + id + ": view yaw_index out of order");
      if ((v.pose.translation - local_position).norm() > 0.5)
        throw ValidationError("record " + id + ": view position deviates > 0.5 m");
      const double want = heading + k * (kPi / 4.0);
      if (std::abs(wrap_angle(pose_heading(v.pose) - want)) > 1e-6)
        throw ValidationError("record " + id + ": view yaw off the 45 degree raster");
    }
  }
};

/// Fills in the pixel rasters of a view on demand.
class RasterProvider {
 public:
  virtual ~RasterProvider() = default;
  virtual void materialize(PinholeView& view) const = 0;
};

inline void materialize_view(PinholeView& view, const RasterProvider* provider) {
  if (view.image && view.depth) return;
  if (!provider)
    throw ValidationError("view " + view.id() + ": rasters not materialized and no provider");
  provider->materialize(view);
  view.validate_rasters();
}

/// Loads rasters from image_path / depth_path relative to a dataset root.
class FileRasterProvider : public RasterProvider {
 public:
  explicit FileRasterProvider(std::filesystem::path root) : root_(std::move(root)) {}

  void materialize(PinholeView& view) const override {
    if (!view.image) {
      if (view.image_path.empty())
        throw ValidationError("view " + view.id() + ": no image path");
      view.image = cached_image(root_ / view.image_path);
    }
    if (!view.depth) {
      if (view.depth_path.empty())
        throw ValidationError("view " + view.id() + ": no depth path");
      view.depth = cached_depth(root_ / view.depth_path);
    }
  }

  const std::filesystem::path& root() const { return root_; }

 private:
  std::shared_ptr<const ImageU8> cached_image(const std::filesystem::path& p) const {
    std::lock_guard lock(mutex_);
    auto& slot = images_[p.string()];
    if (!slot) slot = std::make_shared<ImageU8>(read_png(p));
    return slot;
  }
  std::shared_ptr<const DepthMap> cached_depth(const std::filesystem::path& p) const {
    std::lock_guard lock(mutex_);
    auto& slot = depths_[p.string()];
    if (!slot) slot = std::make_shared<DepthMap>(read_depth(p));
    return slot;
  }

  std::filesystem::path root_;
  mutable std::mutex mutex_;
  mutable std::map<std::string, std::shared_ptr<const ImageU8>> images_;
  mutable std::map<std::string, std::shared_ptr<const DepthMap>> depths_;
};

}  // namespace swm
