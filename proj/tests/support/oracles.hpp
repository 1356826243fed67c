// Independent test oracles. Everything here re-derives expected values
// through a different route than the library implementation it checks:
// homogeneous-matrix algebra instead of composed rotations, textbook
// haversine instead of unit-vector projection, dense per-pixel scans
// instead of strided grids, exhaustive filters instead of indexed queries.
#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <string>
#include <unordered_set>
#include <vector>

#include "swm/dataset.hpp"
#include "swm/index.hpp"
#include "swm/synthcity.hpp"

namespace oracle {

// 4x4 homogeneous inverse-product: T = inv(T_target) * T_reference.
inline Eigen::Matrix4d relative_pose_matrix(const swm::CameraPose& reference,
                                            const swm::CameraPose& target) {
  return target.matrix().inverse() * reference.matrix();
}

// Classic haversine great-circle distance on the same spherical radius.
inline double haversine_m(const swm::GeoPoint& a, const swm::GeoPoint& b) {
  const double la1 = swm::deg_to_rad(a.latitude), la2 = swm::deg_to_rad(b.latitude);
  const double dla = la2 - la1;
  const double dlo = swm::deg_to_rad(b.longitude - a.longitude);
  const double h = std::sin(dla / 2) * std::sin(dla / 2) +
                   std::cos(la1) * std::cos(la2) * std::sin(dlo / 2) * std::sin(dlo / 2);
  return 2.0 * swm::kEarthRadius * std::asin(std::min(1.0, std::sqrt(h)));
}

// Rotation about a unit axis by theta, built from the Rodrigues formula.
inline Eigen::Matrix3d axis_angle(const Eigen::Vector3d& axis, double theta) {
  const Eigen::Vector3d u = axis.normalized();
  Eigen::Matrix3d k;
  k << 0, -u.z(), u.y(), u.z(), 0, -u.x(), -u.y(), u.x(), 0;
  return Eigen::Matrix3d::Identity() + std::sin(theta) * k + (1 - std::cos(theta)) * k * k;
}

// Brute-force k-nearest over records with (distance, id) ordering.
inline std::vector<std::string> knn_scan(const std::vector<swm::PanoramaRecord>& records,
                                         const Eigen::Vector3d& query, std::size_t k,
                                         const std::unordered_set<std::string>& exclusion = {}) {
  std::vector<std::pair<double, std::string>> all;
  for (const auto& r : records) {
    if (exclusion.count(r.id)) continue;
    const double dx = r.local_position.x() - query.x();
    const double dy = r.local_position.y() - query.y();
    const double dz = r.local_position.z() - query.z();
    all.emplace_back(std::sqrt(dx * dx + dy * dy + dz * dz), r.id);
  }
  std::sort(all.begin(), all.end());
  if (all.size() > k) all.resize(k);
  std::vector<std::string> ids;
  for (auto& [d, id] : all) ids.push_back(id);
  return ids;
}

inline std::vector<std::string> radius_scan(const std::vector<swm::PanoramaRecord>& records,
                                            const Eigen::Vector3d& query, double radius,
                                            const std::unordered_set<std::string>& exclusion = {}) {
  std::vector<std::pair<double, std::string>> all;
  for (const auto& r : records) {
    if (exclusion.count(r.id)) continue;
    const double d = (r.local_position - query).norm();
    if (d <= radius) all.emplace_back(d, r.id);
  }
  std::sort(all.begin(), all.end());
  std::vector<std::string> ids;
  for (auto& [d, id] : all) ids.push_back(id);
  return ids;
}

// Dense (stride 1) reprojection coverage, written independently of the
// library's strided version.
inline double dense_coverage(const swm::PinholeView& ref, const swm::CameraPose& target,
                             const swm::CameraIntrinsics& target_k) {
  const auto& dep = *ref.depth;
  long hits = 0, total = 0;
  for (int v = 0; v < dep.height; ++v) {
    for (int u = 0; u < dep.width; ++u) {
      ++total;
      const float z = dep.at(u, v);
      if (!std::isfinite(z) || z <= 0) continue;
      const Eigen::Vector3d ray{(u + 0.5 - ref.intrinsics.cx) / ref.intrinsics.fx,
                                (v + 0.5 - ref.intrinsics.cy) / ref.intrinsics.fy, 1.0};
      const Eigen::Vector3d world = ref.pose.rotation * (ray * double(z)) + ref.pose.translation;
      const Eigen::Vector3d cam = target.rotation.transpose() * (world - target.translation);
      if (cam.z() <= 0) continue;
      const double uu = target_k.fx * cam.x() / cam.z() + target_k.cx;
      const double vv = target_k.fy * cam.y() / cam.z() + target_k.cy;
      if (uu >= 0 && uu < target_k.width && vv >= 0 && vv < target_k.height) ++hits;
    }
  }
  return double(hits) / double(total);
}

// Unsigned distance from a point to the surface of the city geometry
// (boxes of the given session plus the ground plane).
inline double distance_to_city_surface(const swm::CityModel& city, int session,
                                       const Eigen::Vector3d& p) {
  auto box_surface = [&p](const swm::BoxObject& b) {
    // Distance to the box boundary: outside -> distance to box,
    // inside -> depth to the nearest face.
    Eigen::Vector3d d = Eigen::Vector3d::Zero();
    double inside = -1e300;
    for (int a = 0; a < 3; ++a) {
      d[a] = std::max({b.lo[a] - p[a], 0.0, p[a] - b.hi[a]});
      inside = std::max(inside, std::max(b.lo[a] - p[a], p[a] - b.hi[a]));
    }
    const double outside = d.norm();
    return outside > 0 ? outside : -inside;
  };
  double best = std::abs(p.z());  // ground plane z = 0
  for (const auto& b : city.buildings) best = std::min(best, box_surface(b));
  for (const auto& b : city.transients)
    if (b.session_mask & (1u << (session & 31))) best = std::min(best, box_surface(b));
  return best;
}

// Exhaustive cross-temporal pairing: filter every record, sort, truncate.
inline std::vector<std::string> pairing_scan(const std::vector<swm::PanoramaRecord>& records,
                                             const std::vector<const swm::PanoramaRecord*>& targets,
                                             int k, double radius, double min_gap) {
  std::unordered_set<std::string> sessions;
  for (const auto* t : targets) sessions.insert(t->session_id);
  std::vector<std::pair<double, std::string>> eligible;
  for (const auto& r : records) {
    if (sessions.count(r.session_id)) continue;
    double dist = 1e300, gap = 1e300;
    for (const auto* t : targets) {
      dist = std::min(dist, (r.local_position - t->local_position).norm());
      gap = std::min(gap, std::abs(r.timestamp - t->timestamp));
    }
    if (dist > radius || gap < min_gap) continue;
    eligible.emplace_back(dist, r.id);
  }
  std::sort(eligible.begin(), eligible.end());
  if (int(eligible.size()) > k) eligible.resize(std::size_t(k));
  std::vector<std::string> ids;
  for (auto& [d, id] : eligible) ids.push_back(id);
  return ids;
}

// Causal/uniform latent grouping enumerated directly: group g covers
// which pixel frames, independent of swm::latent_frame_range.
inline std::vector<std::pair<int, int>> enumerate_groups(bool causal, int latents) {
  std::vector<std::pair<int, int>> groups;
  int frame = 0;
  for (int g = 0; g < latents; ++g) {
    const int size = (causal && g == 0) ? 1 : 4;
    groups.emplace_back(frame, frame + size);
    frame += size;
  }
  return groups;
}

// Eq. 1 and the reference-position formula re-derived term by term.
struct RopeOracle {
  std::vector<long> history, target, references;
  long sink = 0;
};

inline RopeOracle rope_positions(int H, int L, int K, int G, int dref, int dvl) {
  RopeOracle o;
  for (int i = 1; i <= H; ++i) o.history.push_back(i);
  for (int i = H + 1; i <= H + L; ++i) o.target.push_back(i);
  o.sink = H + L + dvl;
  for (int k = 0; k < K; ++k) o.references.push_back(H + L + G + k * dref);
  return o;
}

// Brute-force causal attention mask over sequence slots.
inline std::vector<std::vector<bool>> causal_mask(std::size_t n) {
  std::vector<std::vector<bool>> m(n, std::vector<bool>(n, false));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j <= i; ++j) m[i][j] = true;
  return m;
}

}  // namespace oracle
