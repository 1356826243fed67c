#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <mutex>
#include <string>
#include <unordered_map>
#include <vector>

#include "swm/pano.hpp"

namespace swm {

/// Axis-aligned box with a stable object id. `session_mask` bit s set means
/// the box exists in session s; buildings use ~0 (all sessions).
struct BoxObject {
  Eigen::Vector3d lo = Eigen::Vector3d::Zero();
  Eigen::Vector3d hi = Eigen::Vector3d::Zero();
  std::uint32_t id = 0;
  std::uint32_t session_mask = ~0u;
};

/// Axis-aligned road centerline segment.
struct RoadSegment {
  Eigen::Vector2d a = Eigen::Vector2d::Zero();
  Eigen::Vector2d b = Eigen::Vector2d::Zero();
  double width = 8.0;

  double length() const { return (b - a).norm(); }
};

/// Procedural test city: road grid, building boxes, per-session transient
/// boxes (parked vehicles), flat ground at z = 0. All geometry is analytic,
/// so renders, depths and visibility are exact.
struct CityModel {
  std::uint64_t seed = 0;
  double extent = 0;
  std::vector<RoadSegment> roads;
  std::vector<BoxObject> buildings;
  std::vector<BoxObject> transients;
};

inline constexpr double kDefaultCityExtent = 240.0;
inline constexpr double kRoadWidth = 8.0;

inline CityModel generate_city(std::uint64_t seed, double extent = kDefaultCityExtent) {
  if (!(extent > 0)) throw ValidationError("city extent must be > 0");
  CityModel city;
  city.seed = seed;
  city.extent = extent;
  auto rng = make_rng(seed);
  auto uniform = [&rng](double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
  };

  const double margin = 3.0;
  std::uint32_t next_id = 0;
  if (extent < 40.0) {
    // Too small for a grid: one straight road through the middle.
    const double w = std::min(kRoadWidth, extent / 2.0);
    city.roads.push_back({{0.0, extent / 2.0}, {extent, extent / 2.0}, w});
  } else {
    const int lines = std::max(2, int(std::lround(extent / 70.0)) + 1);
    std::vector<double> coords(lines);
    for (int i = 0; i < lines; ++i) coords[i] = extent * i / (lines - 1);
    for (double y : coords) city.roads.push_back({{0.0, y}, {extent, y}, kRoadWidth});
    for (double x : coords) city.roads.push_back({{x, 0.0}, {x, extent}, kRoadWidth});

    // Buildings fill the blocks between roads, inset so they can never
    // touch the road rectangles.
    for (int bi = 0; bi + 1 < lines; ++bi) {
      for (int bj = 0; bj + 1 < lines; ++bj) {
        const double x0 = coords[bi] + kRoadWidth / 2 + margin;
        const double x1 = coords[bi + 1] - kRoadWidth / 2 - margin;
        const double y0 = coords[bj] + kRoadWidth / 2 + margin;
        const double y1 = coords[bj + 1] - kRoadWidth / 2 - margin;
        if (x1 - x0 < 10.0 || y1 - y0 < 10.0) continue;
        const int count = 2 + int(rng() % 2);
        for (int n = 0; n < count; ++n) {
          const double sx = uniform(8.0, std::min(20.0, x1 - x0));
          const double sy = uniform(8.0, std::min(20.0, y1 - y0));
          const double px = uniform(x0, x1 - sx);
          const double py = uniform(y0, y1 - sy);
          const double h = uniform(6.0, 30.0);
          city.buildings.push_back({{px, py, 0.0}, {px + sx, py + sy, h}, next_id++, ~0u});
        }
      }
    }
  }

  // Parked boxes on the road shoulders, toggled per session.
  double total_road = 0;
  for (const auto& r : city.roads) total_road += r.length();
  const int transient_count = int(total_road / 40.0);
  for (int n = 0; n < transient_count; ++n) {
    const auto& road = city.roads[rng() % city.roads.size()];
    const double t = uniform(0.05, 0.95) * road.length();
    const Eigen::Vector2d dir = (road.b - road.a).normalized();
    const Eigen::Vector2d side(-dir.y(), dir.x());
    const double lateral = (rng() % 2 ? 1.0 : -1.0) * (road.width / 2 - 1.2);
    const Eigen::Vector2d c = road.a + t * dir + lateral * side;
    // Roads are axis-aligned, so the long axis follows |dir|.
    const double lx = std::abs(dir.x()) > 0.5 ? 2.1 : 0.9;
    const double ly = std::abs(dir.x()) > 0.5 ? 0.9 : 2.1;
    const std::uint32_t mask = std::uint32_t(rng());
    city.transients.push_back(
        {{c.x() - lx, c.y() - ly, 0.0}, {c.x() + lx, c.y() + ly, 1.6}, 100000 + next_id++, mask});
  }
  return city;
}

namespace detail {

/// Slab intersection against a ray whose direction is unnormalized with
/// camera-frame z = 1, so the hit parameter IS the z-depth. Returns the
/// entry parameter and face index (axis*2 + (0 if entering from lo side)).
inline bool ray_box(const Eigen::Vector3d& origin, const Eigen::Vector3d& dir,
                    const BoxObject& box, double& t_hit, int& face) {
  double t0 = 1e-9, t1 = std::numeric_limits<double>::infinity();
  int axis = -1;
  bool from_lo = true;
  for (int a = 0; a < 3; ++a) {
    const double d = dir[a];
    if (std::abs(d) < 1e-15) {
      if (origin[a] < box.lo[a] || origin[a] > box.hi[a]) return false;
      continue;
    }
    double tn = (box.lo[a] - origin[a]) / d;
    double tf = (box.hi[a] - origin[a]) / d;
    bool lo_side = true;
    if (tn > tf) {
      std::swap(tn, tf);
      lo_side = false;
    }
    if (tn > t0) {
      t0 = tn;
      axis = a;
      from_lo = lo_side;
    }
    t1 = std::min(t1, tf);
    if (t0 > t1) return false;
  }
  if (axis < 0) return false;  // origin inside the box
  t_hit = t0;
  face = axis * 2 + (from_lo ? 0 : 1);
  return true;
}

/// Distinct mid-range face colors so warp mismatches are unambiguous while
/// keeping squared errors of single-pixel misses moderate.
inline std::array<std::uint8_t, 3> face_color(std::uint32_t object_id, int face) {
  std::uint64_t h = fnv1a64(std::to_string(object_id) + "/" + std::to_string(face));
  auto channel = [&h]() {
    const auto v = std::uint8_t(40 + (h & 0xff) % 176);
    h >>= 8;
    return v;
  };
  return {channel(), channel(), channel()};
}

inline constexpr std::array<std::uint8_t, 3> kGroundColor = {92, 96, 88};
inline constexpr std::array<std::uint8_t, 3> kSkyColor = {134, 160, 190};

}  // namespace detail

struct AnalyticRender {
  ImageU8 image;
  DepthMap depth;  // z-depth in meters; NaN where the ray escapes to sky
};

/// Exact per-pixel ray cast of the city for one session. Colors encode
/// face identity; depth is exact to float precision.
inline AnalyticRender render_analytic(const CityModel& city, const CameraPose& pose,
                                      const CameraIntrinsics& intrinsics, int session) {
  intrinsics.validate();
  pose.validate();
  AnalyticRender out;
  out.image = ImageU8::filled(intrinsics.width, intrinsics.height, detail::kSkyColor);
  out.depth = DepthMap::filled(intrinsics.width, intrinsics.height,
                               std::numeric_limits<float>::quiet_NaN());
  const Eigen::Vector3d origin = pose.translation;
  const std::uint32_t session_bit = 1u << (session & 31);

  parallel_for(std::size_t(intrinsics.height), [&](std::size_t row) {
    const int v = int(row);
    for (int u = 0; u < intrinsics.width; ++u) {
      const Eigen::Vector3d dir = pose.rotation * intrinsics.pixel_ray(u, v);
      double best = std::numeric_limits<double>::infinity();
      std::array<std::uint8_t, 3> color = detail::kSkyColor;
      double t;
      int face;
      for (const auto& b : city.buildings) {
        if (detail::ray_box(origin, dir, b, t, face) && t < best) {
          best = t;
          color = detail::face_color(b.id, face);
        }
      }
      for (const auto& b : city.transients) {
        if ((b.session_mask & session_bit) && detail::ray_box(origin, dir, b, t, face) &&
            t < best) {
          best = t;
          color = detail::face_color(b.id, face);
        }
      }
      if (dir.z() < -1e-15) {
        const double tg = -origin.z() / dir.z();
        if (tg > 1e-9 && tg < best) {
          best = tg;
          color = detail::kGroundColor;
        }
      }
      if (std::isfinite(best)) {
        out.image.at(u, v) = color;
        out.depth.at(u, v) = float(best);
      }
    }
  });
  return out;
}

/// Exact z-depth along the center ray of pixel (u, v); NaN for sky.
/// Cheap single-ray variant of render_analytic used by coverage probes.
inline double analytic_depth(const CityModel& city, const CameraPose& pose,
                             const CameraIntrinsics& intrinsics, int session, int u, int v) {
  const Eigen::Vector3d origin = pose.translation;
  const Eigen::Vector3d dir = pose.rotation * intrinsics.pixel_ray(u, v);
  const std::uint32_t session_bit = 1u << (session & 31);
  double best = std::numeric_limits<double>::infinity();
  double t;
  int face;
  for (const auto& b : city.buildings)
    if (detail::ray_box(origin, dir, b, t, face)) best = std::min(best, t);
  for (const auto& b : city.transients)
    if ((b.session_mask & session_bit) && detail::ray_box(origin, dir, b, t, face))
      best = std::min(best, t);
  if (dir.z() < -1e-15) {
    const double tg = -origin.z() / dir.z();
    if (tg > 1e-9) best = std::min(best, tg);
  }
  return std::isfinite(best) ? best : std::numeric_limits<double>::quiet_NaN();
}

struct StreetViewConfig {
  double interval = 10.0;       // meters between locations along each road
  double jitter = 0.0;          // max +/- perturbation of the interval
  int sessions = 2;
  double session_time_gap = 86400.0;  // seconds between session capture times
  double base_timestamp = 1.7e9;
  double camera_height = 2.0;
  CameraIntrinsics intrinsics = intrinsics_from_fov(kPi / 2.0, 160, 96);
  GeoPoint origin{37.5665, 126.9780, 0.0};  // maps local meters back to GPS
  std::uint64_t seed = 0;
};

struct StreetViewDb {
  std::vector<PanoramaRecord> records;
  /// Ordered panorama ids per (session, road), usable as benchmark routes.
  std::vector<std::vector<std::string>> routes;
};

/// Samples a panorama database along every road: one location every
/// `interval` +/- jitter meters, 8 equi-angular views per location, one
/// full pass per session with cross-temporal timestamps.
inline StreetViewDb sample_streetview_db(const CityModel& city, const StreetViewConfig& cfg = {}) {
  if (city.roads.empty()) throw ValidationError("city has no roads");
  StreetViewDb db;
  auto rng = make_rng(cfg.seed ^ 0x5741444253ull);
  for (int s = 0; s < cfg.sessions; ++s) {
    int loc_in_session = 0;
    for (std::size_t r = 0; r < city.roads.size(); ++r) {
      const auto& road = city.roads[r];
      const double len = road.length();
      const Eigen::Vector2d dir = (road.b - road.a) / len;
      const double heading = std::atan2(dir.x(), dir.y());
      std::vector<std::string> route;
      int loc = 0;
      double pos = 0;
      while (pos <= len + 1e-9) {
        PanoramaRecord rec;
        char buf[64];
        std::snprintf(buf, sizeof buf, "s%d_r%02zu_l%03d", s, r, loc);
        rec.id = buf;
        rec.session_id = "session-" + std::to_string(s);
        const Eigen::Vector2d xy = road.a + std::min(pos, len) * dir;
        rec.local_position = {xy.x(), xy.y(), cfg.camera_height};
        rec.heading = heading;
        rec.timestamp = cfg.base_timestamp + s * cfg.session_time_gap + loc_in_session * 0.5;
        rec.geo = geo_from_local(rec.local_position, cfg.origin);
        rec.views.resize(8);
        for (int k = 0; k < 8; ++k) {
          auto& view = rec.views[k];
          view.parent_id = rec.id;
          view.yaw_index = k;
          view.intrinsics = cfg.intrinsics;
          view.pose.rotation = heading_rotation(heading + k * (kPi / 4.0));
          view.pose.translation = rec.local_position;
        }
        route.push_back(rec.id);
        db.records.push_back(std::move(rec));
        ++loc;
        ++loc_in_session;
        if (cfg.jitter > 0)
          pos += cfg.interval + std::uniform_real_distribution<double>(-cfg.jitter, cfg.jitter)(rng);
        else
          pos += cfg.interval;
      }
      db.routes.push_back(std::move(route));
    }
  }
  return db;
}

/// Renders view rasters straight from the analytic city model.
class SynthRasterProvider : public RasterProvider {
 public:
  SynthRasterProvider(CityModel city, const std::vector<PanoramaRecord>& records)
      : city_(std::move(city)) {
    for (const auto& r : records) session_of_[r.id] = session_of_record(r);
  }

  void materialize(PinholeView& view) const override {
    const auto it = session_of_.find(view.parent_id);
    if (it == session_of_.end())
      throw ValidationError("synth provider: unknown panorama " + view.parent_id);
    std::lock_guard lock(mutex_);
    auto& slot = cache_[view.id()];
    if (!slot.first) {
      AnalyticRender r = render_analytic(city_, view.pose, view.intrinsics, it->second);
      slot.first = std::make_shared<ImageU8>(std::move(r.image));
      slot.second = std::make_shared<DepthMap>(std::move(r.depth));
    }
    view.image = slot.first;
    view.depth = slot.second;
  }

  const CityModel& city() const { return city_; }
  int session_of(const std::string& pano_id) const { return session_of_.at(pano_id); }

  /// Session index baked into the synthetic ids ("s<k>_...").
  static int session_of_record(const PanoramaRecord& r) {
    if (r.id.size() > 1 && r.id[0] == 's') {
      const std::size_t us = r.id.find('_');
      if (us != std::string::npos) return std::stoi(r.id.substr(1, us - 1));
    }
    return 0;
  }

 private:
  CityModel city_;
  std::unordered_map<std::string, int> session_of_;
  mutable std::mutex mutex_;
  mutable std::unordered_map<std::string,
                             std::pair<std::shared_ptr<const ImageU8>,
                                       std::shared_ptr<const DepthMap>>>
      cache_;
};

}  // namespace swm
