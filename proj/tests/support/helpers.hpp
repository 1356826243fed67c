#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <random>
#include <string>

#include "swm/geo.hpp"
#include "swm/pano.hpp"

namespace helpers {

inline Eigen::Matrix3d random_rotation(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0, 1);
  Eigen::Quaterniond q(n(rng), n(rng), n(rng), n(rng));
  q.normalize();
  return q.toRotationMatrix();
}

inline swm::CameraPose random_pose(std::mt19937_64& rng, double span = 50.0) {
  std::uniform_real_distribution<double> u(-span, span);
  swm::CameraPose p;
  p.rotation = random_rotation(rng);
  p.translation = {u(rng), u(rng), u(rng)};
  return p;
}

/// Unique temp directory, removed on destruction.
struct TempDir {
  std::filesystem::path path;
  explicit TempDir(const std::string& tag) {
    path = std::filesystem::temp_directory_path() /
           ("swm_test_" + tag + "_" + std::to_string(std::random_device{}()));
    std::filesystem::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
};

/// In-memory raster provider for hand-built views.
class MapProvider : public swm::RasterProvider {
 public:
  void put(const std::string& view_id, swm::ImageU8 img, swm::DepthMap dep) {
    images_[view_id] = std::make_shared<swm::ImageU8>(std::move(img));
    depths_[view_id] = std::make_shared<swm::DepthMap>(std::move(dep));
  }
  void materialize(swm::PinholeView& v) const override {
    v.image = images_.at(v.id());
    v.depth = depths_.at(v.id());
  }

 private:
  std::map<std::string, std::shared_ptr<const swm::ImageU8>> images_;
  std::map<std::string, std::shared_ptr<const swm::DepthMap>> depths_;
};

}  // namespace helpers
