#include <catch2/catch_amalgamated.hpp>
#include <cmath>

#include "support/helpers.hpp"
#include "support/oracles.hpp"
#include "support/warpcheck.hpp"
#include "swm/synthcity.hpp"
#include "swm/warp.hpp"

using namespace swm;

namespace {

PinholeView make_view(const CameraPose& pose, const CameraIntrinsics& k, ImageU8 img,
                      DepthMap dep, const std::string& id = "v") {
  PinholeView v;
  v.parent_id = id;
  v.intrinsics = k;
  v.pose = pose;
  v.image = std::make_shared<ImageU8>(std::move(img));
  v.depth = std::make_shared<DepthMap>(std::move(dep));
  return v;
}

}  // namespace

TEST_CASE("unproject principal-point pixel") {
  CameraIntrinsics k{100, 100, 2.5, 1.5, 5, 3};
  DepthMap dep = DepthMap::filled(5, 3, std::numeric_limits<float>::quiet_NaN());
  dep.at(2, 1) = 5.0f;
  const auto cloud = unproject(make_view(CameraPose{}, k, ImageU8::filled(5, 3), dep));
  REQUIRE(cloud.size() == 1);
  CHECK(cloud.positions[0].isApprox(Eigen::Vector3d(0, 0, 5), 1e-12));
}

TEST_CASE("unproject with all-NaN depth yields an empty cloud") {
  CameraIntrinsics k = intrinsics_from_fov(kPi / 2, 8, 6);
  const DepthMap dep = DepthMap::filled(8, 6, std::numeric_limits<float>::quiet_NaN());
  CHECK(unproject(make_view(CameraPose{}, k, ImageU8::filled(8, 6), dep)).size() == 0);
}

TEST_CASE("unproject/project round trip recovers pixel centers") {
  auto rng = make_rng(31);
  const CameraIntrinsics k = intrinsics_from_fov(deg_to_rad(80), 128, 96);
  const CameraPose pose = helpers::random_pose(rng);
  DepthMap dep = DepthMap::filled(k.width, k.height, 0.f);
  std::uniform_real_distribution<float> z(0.5f, 80.f);
  for (auto& v : dep.values) v = z(rng);
  const auto cloud = unproject(make_view(pose, k, ImageU8::filled(k.width, k.height), dep));
  REQUIRE(cloud.size() == std::size_t(k.width) * k.height);
  std::size_t i = 0;
  for (int v = 0; v < k.height; ++v) {
    for (int u = 0; u < k.width; ++u, ++i) {
      const Eigen::Vector2d uv = k.project(pose.to_camera(cloud.positions[i]));
      CHECK(std::abs(uv.x() - (u + 0.5)) < 1e-4);
      CHECK(std::abs(uv.y() - (v + 0.5)) < 1e-4);
    }
  }
}

TEST_CASE("unprojected synthcity points lie on analytic surfaces") {
  const CityModel city = generate_city(11, 150);
  const CameraIntrinsics k = intrinsics_from_fov(kPi / 2, 96, 64);
  CameraPose pose;
  pose.rotation = heading_rotation(kPi / 2);
  pose.translation = {10, city.roads[0].a.y(), 2.0};
  const auto r = render_analytic(city, pose, k, 0);
  const auto cloud = unproject(make_view(pose, k, r.image, r.depth));
  REQUIRE(cloud.size() > 1000);
  for (std::size_t i = 0; i < cloud.size(); i += 17)
    CHECK(oracle::distance_to_city_surface(city, 0, cloud.positions[i]) < 1e-3);
}

TEST_CASE("splat into the source view reproduces it exactly") {
  const CityModel city = generate_city(12, 150);
  const CameraIntrinsics k = intrinsics_from_fov(kPi / 2, 96, 64);
  CameraPose pose;
  pose.rotation = heading_rotation(0);
  pose.translation = {city.extent / 2, 20, 2.0};
  const auto r = render_analytic(city, pose, k, 0);
  const auto frame = splat(unproject(make_view(pose, k, r.image, r.depth)), pose, k);
  for (int v = 0; v < k.height; ++v) {
    for (int u = 0; u < k.width; ++u) {
      CHECK(frame.validity.at(u, v) == std::isfinite(r.depth.at(u, v)));
      if (frame.validity.at(u, v)) CHECK(frame.image.at(u, v) == r.image.at(u, v));
    }
  }
}

TEST_CASE("splat z-buffer keeps the nearest point") {
  PointCloud cloud;
  cloud.positions = {{0, 0, 7}, {0, 0, 3}};
  cloud.colors = {{10, 10, 10}, {200, 200, 200}};
  const CameraIntrinsics k{50, 50, 4.5, 3.5, 9, 7};
  const auto frame = splat(cloud, CameraPose{}, k);
  CHECK(frame.image.at(4, 3) == std::array<std::uint8_t, 3>{200, 200, 200});
  CHECK(frame.depth.at(4, 3) == 3.0f);
}

TEST_CASE("splat culls points behind the camera") {
  PointCloud cloud;
  cloud.positions = {{0, 0, -4}};
  cloud.colors = {{255, 0, 0}};
  const auto frame = splat(cloud, CameraPose{}, CameraIntrinsics{50, 50, 4.5, 3.5, 9, 7});
  CHECK(frame.validity.count() == 0);
}

TEST_CASE("splat records the minimum depth per pixel") {
  auto rng = make_rng(32);
  const CameraIntrinsics k = intrinsics_from_fov(kPi / 2, 32, 24);
  PointCloud cloud;
  std::uniform_real_distribution<double> xy(-6, 6), zd(0.5, 20);
  for (int i = 0; i < 4000; ++i) {
    cloud.positions.push_back({xy(rng), xy(rng), zd(rng)});
    cloud.colors.push_back({std::uint8_t(i & 0xff), 0, 0});
  }
  const auto frame = splat(cloud, CameraPose{}, k);
  std::vector<float> best(std::size_t(k.width) * k.height,
                          std::numeric_limits<float>::infinity());
  for (const auto& p : cloud.positions) {
    const Eigen::Vector2d uv = k.project(p);
    const int x = int(std::floor(uv.x())), y = int(std::floor(uv.y()));
    if (x < 0 || y < 0 || x >= k.width || y >= k.height) continue;
    best[std::size_t(y) * k.width + x] = std::min(best[std::size_t(y) * k.width + x], float(p.z()));
  }
  for (int y = 0; y < k.height; ++y)
    for (int x = 0; x < k.width; ++x)
      if (frame.validity.at(x, y)) CHECK(frame.depth.at(x, y) == best[std::size_t(y) * k.width + x]);
}

TEST_CASE("synthcity warp matches analytic render on mutually visible pixels") {
  const CityModel city = generate_city(13);
  auto rng = make_rng(33);
  const CameraIntrinsics k = intrinsics_from_fov(kPi / 2, 160, 96);
  int checked = 0;
  for (int trial = 0; trial < 6; ++trial) {
    const auto [ref, tgt] = warpcheck::random_road_pose_pair(city, rng);
    const auto fid = warpcheck::check_pair(city, 0, ref, tgt, k);
    if (fid.compared < 500) continue;
    CHECK(fid.match_fraction() >= 0.95);
    ++checked;
  }
  CHECK(checked >= 3);
}

TEST_CASE("warp_chunk uses the single nearest reference per frame") {
  const CityModel city = generate_city(14, 150);
  const CameraIntrinsics k = intrinsics_from_fov(kPi / 2, 48, 32);
  auto make_ref = [&](const std::string& id, double x) {
    CameraPose pose;
    pose.rotation = heading_rotation(kPi / 2);
    pose.translation = {x, city.roads[0].a.y(), 2.0};
    const auto r = render_analytic(city, pose, k, 0);
    RetrievalEntry e;
    e.view = make_view(pose, k, r.image, r.depth, id);
    e.view.yaw_index = 0;
    return e;
  };

  SECTION("single reference sources every frame") {
    RetrievalResult refs;
    refs.entries.push_back(make_ref("a", 10));
    std::vector<CameraPose> traj(5);
    for (int i = 0; i < 5; ++i) {
      traj[std::size_t(i)].rotation = heading_rotation(kPi / 2);
      traj[std::size_t(i)].translation = {10.0 + i, city.roads[0].a.y(), 2.0};
    }
    const auto frames = warp_chunk(traj, refs);
    REQUIRE(frames.size() == 5);
    for (const auto& f : frames) CHECK(f.source_ref_id == "a:0");
  }

  SECTION("two references switch exactly once at the midpoint, ties to lower id") {
    RetrievalResult refs;
    refs.entries.push_back(make_ref("a", 10));
    refs.entries.push_back(make_ref("b", 20));
    std::vector<CameraPose> traj(11);
    for (int i = 0; i <= 10; ++i) {
      traj[std::size_t(i)].rotation = heading_rotation(kPi / 2);
      traj[std::size_t(i)].translation = {10.0 + i, city.roads[0].a.y(), 2.0};
    }
    const auto frames = warp_chunk(traj, refs);
    int switches = 0;
    for (std::size_t i = 1; i < frames.size(); ++i)
      if (frames[i].source_ref_id != frames[i - 1].source_ref_id) ++switches;
    CHECK(switches == 1);
    CHECK(frames[5].source_ref_id == "a:0");  // equidistant -> lower id
    CHECK(frames[4].source_ref_id == "a:0");
    CHECK(frames[6].source_ref_id == "b:0");
  }

  SECTION("per-frame assignment equals a brute-force nearest scan") {
    RetrievalResult refs;
    refs.entries.push_back(make_ref("a", 12));
    refs.entries.push_back(make_ref("b", 31));
    refs.entries.push_back(make_ref("c", 57));
    auto rng = make_rng(34);
    std::uniform_real_distribution<double> x(5, 70);
    std::vector<CameraPose> traj(77);
    for (auto& p : traj) {
      p.rotation = heading_rotation(kPi / 2);
      p.translation = {x(rng), city.roads[0].a.y(), 2.0};
    }
    const auto frames = warp_chunk(traj, refs);
    REQUIRE(frames.size() == traj.size());
    for (std::size_t i = 0; i < traj.size(); ++i) {
      std::string best;
      double best_d = 1e300;
      for (const auto& e : refs.entries) {
        const double d = (e.view.pose.translation - traj[i].translation).norm();
        if (d < best_d) {
          best_d = d;
          best = e.view.id();
        }
      }
      CHECK(frames[i].source_ref_id == best);
    }
  }
}

TEST_CASE("warp_chunk with no references yields all-invalid frames") {
  std::vector<CameraPose> traj(4);
  const auto frames = warp_chunk(traj, RetrievalResult{});
  REQUIRE(frames.size() == 4);
  for (const auto& f : frames) CHECK(f.validity.count() == 0);
}

TEST_CASE("render_pinhole constant panorama") {
  Panorama pano;
  pano.image = ImageU8::filled(64, 32, {40, 90, 140});
  const auto img = render_pinhole(pano, 0.3, -0.1, 0.05, kPi / 2,
                                  CameraIntrinsics{1, 1, 16, 12, 32, 24});
  for (const auto& p : img.pixels) CHECK(p == std::array<std::uint8_t, 3>{40, 90, 140});
}

TEST_CASE("render_pinhole maps a longitude-90 stripe to the image center") {
  Panorama pano;
  pano.image = ImageU8::filled(720, 360, {0, 0, 0});
  // Stripe at longitude 90 deg: pixel centers x+0.5 with lon = 2*pi*(x+0.5)/W - pi.
  const int stripe_x = int(std::lround(0.75 * 720 - 0.5));
  for (int y = 0; y < 360; ++y) pano.image.at(stripe_x, y) = {255, 255, 255};
  // Output finer than the panorama so the 1-px stripe cannot fall between
  // bilinear taps.
  const auto img = render_pinhole(pano, kPi / 2, 0, 0, kPi / 2,
                                  CameraIntrinsics{1, 1, 128, 96, 256, 192});
  int best_x = -1;
  int best_val = -1;
  for (int x = 0; x < 256; ++x)
    if (int(img.at(x, 96)[0]) > best_val) {
      best_val = img.at(x, 96)[0];
      best_x = x;
    }
  CHECK(best_val > 0);
  CHECK(std::abs(best_x - 128) <= 1);
}

TEST_CASE("render_pinhole is yaw/column-shift equivariant") {
  auto rng = make_rng(35);
  Panorama pano;
  pano.image = ImageU8::filled(256, 128);
  for (auto& p : pano.image.pixels)
    p = {std::uint8_t(rng() & 0xff), std::uint8_t(rng() & 0xff), std::uint8_t(rng() & 0xff)};
  const int shift = 13;
  const double delta = 2 * kPi * shift / 256.0;
  Panorama shifted;
  shifted.image = ImageU8::filled(256, 128);
  for (int y = 0; y < 128; ++y)
    for (int x = 0; x < 256; ++x) shifted.image.at(x, y) = pano.image.at((x + shift) % 256, y);
  const CameraIntrinsics k{1, 1, 24, 16, 48, 32};
  const auto a = render_pinhole(pano, 0.4 + delta, 0.1, 0, kPi / 2, k);
  const auto b = render_pinhole(shifted, 0.4, 0.1, 0, kPi / 2, k);
  for (std::size_t i = 0; i < a.pixels.size(); ++i)
    for (int c = 0; c < 3; ++c)
      CHECK(std::abs(int(a.pixels[i][c]) - int(b.pixels[i][c])) <= 1);  // u8 rounding
}

TEST_CASE("eight views resample the panorama within 3/255 away from poles") {
  // Smooth pattern so bilinear resampling error stays small.
  Panorama pano;
  pano.image = ImageU8::filled(512, 256);
  for (int y = 0; y < 256; ++y) {
    for (int x = 0; x < 512; ++x) {
      const double lon = 2 * kPi * (x + 0.5) / 512.0 - kPi;
      const double lat = kPi / 2 - kPi * (y + 0.5) / 256.0;
      pano.image.at(x, y) = {std::uint8_t(127.5 + 110 * std::sin(lon)),
                             std::uint8_t(127.5 + 110 * std::cos(2 * lon)),
                             std::uint8_t(127.5 + 110 * std::sin(lat * 2))};
    }
  }
  const CameraIntrinsics k{1, 1, 80, 60, 160, 120};
  std::vector<ImageU8> views;
  for (int v = 0; v < 8; ++v)
    views.push_back(render_pinhole(pano, v * kPi / 4, 0, 0, kPi / 2, k));
  const CameraIntrinsics kf = [&] {
    CameraIntrinsics kk = k;
    kk.fx = kk.fy = (k.width / 2.0) / std::tan(kPi / 4);
    return kk;
  }();

  double err_sum = 0;
  long count = 0;
  for (int y = 64; y < 192; ++y) {  // |latitude| < 45 deg
    for (int x = 0; x < 512; ++x) {
      const double lon = 2 * kPi * (x + 0.5) / 512.0 - kPi;
      const double lat = kPi / 2 - kPi * (y + 0.5) / 256.0;
      const Eigen::Vector3d dir(std::cos(lat) * std::sin(lon), -std::sin(lat),
                                std::cos(lat) * std::cos(lon));
      int best_view = 0;
      double best_dot = -2;
      for (int v = 0; v < 8; ++v) {
        const double yaw = v * kPi / 4;
        const double dot = dir.x() * std::sin(yaw) + dir.z() * std::cos(yaw);
        if (dot > best_dot) {
          best_dot = dot;
          best_view = v;
        }
      }
      const Eigen::Matrix3d rot = detail::pano_view_rotation(best_view * kPi / 4, 0, 0);
      const Eigen::Vector3d cam = rot.transpose() * dir;
      if (cam.z() <= 0.1) continue;
      const Eigen::Vector2d uv = kf.project(cam);
      const int ux = int(std::floor(uv.x())), uy = int(std::floor(uv.y()));
      if (ux < 0 || uy < 0 || ux >= k.width || uy >= k.height) continue;
      for (int c = 0; c < 3; ++c)
        err_sum += std::abs(int(views[std::size_t(best_view)].at(ux, uy)[c]) -
                            int(pano.image.at(x, y)[c]));
      count += 3;
    }
  }
  REQUIRE(count > 100000);
  CHECK(err_sum / double(count) <= 3.0);
}
