#pragma once

#include <algorithm>
#include <cstring>
#include <fstream>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "swm/index_types.hpp"

namespace swm {

/// Exact spatial index over panorama records: a uniform XY grid accelerates
/// k-nearest and radius queries whose results are identical to a linear
/// scan (ties broken by id). Immutable after build; concurrent reads are
/// safe.
class SpatialIndex {
 public:
  SpatialIndex() = default;

  static SpatialIndex build(std::vector<PanoramaRecord> records,
                            std::shared_ptr<const RasterProvider> provider = nullptr,
                            double cell_size = 25.0) {
    SpatialIndex idx;
    idx.records_ = std::move(records);
    idx.provider_ = std::move(provider);
    idx.cell_ = cell_size;
    for (std::size_t i = 0; i < idx.records_.size(); ++i) {
      const auto& r = idx.records_[i];
      if (!idx.by_id_.emplace(r.id, i).second)
        throw ValidationError("index: duplicate panorama id " + r.id);
      idx.grid_[idx.cell_of(r.local_position)].push_back(i);
    }
    return idx;
  }

  std::size_t size() const { return records_.size(); }
  bool empty() const { return records_.empty(); }
  const std::vector<PanoramaRecord>& records() const { return records_; }

  const PanoramaRecord* find(const std::string& id) const {
    const auto it = by_id_.find(id);
    return it == by_id_.end() ? nullptr : &records_[it->second];
  }

  const RasterProvider* provider() const { return provider_.get(); }
  void set_provider(std::shared_ptr<const RasterProvider> p) { provider_ = std::move(p); }

  using Hit = std::pair<const PanoramaRecord*, double>;

  std::vector<Hit> k_nearest(const Eigen::Vector3d& query, std::size_t k,
                             const std::unordered_set<std::string>& exclusion = {}) const {
    std::vector<Hit> hits;
    if (records_.empty() || k == 0) return hits;
    const auto [cqx, cqy] = cell_of(query);
    std::vector<std::pair<double, std::size_t>> cand;
    long ring = 0;
    const long max_ring = max_ring_from(cqx, cqy);
    while (ring <= max_ring) {
      visit_ring(cqx, cqy, ring, [&](std::size_t i) {
        const auto& r = records_[i];
        if (exclusion.count(r.id)) return;
        cand.emplace_back((r.local_position - query).norm(), i);
      });
      if (cand.size() >= k) {
        std::nth_element(cand.begin(), cand.begin() + long(k) - 1, cand.end(),
                         [this](const auto& a, const auto& b) { return less(a, b); });
        const double kth = cand[k - 1].first;
        // Ring rho can still contain points at distance >= (rho-1)*cell.
        if (double(ring) * cell_ > kth) break;
      }
      ++ring;
    }
    std::sort(cand.begin(), cand.end(),
              [this](const auto& a, const auto& b) { return less(a, b); });
    if (cand.size() > k) cand.resize(k);
    hits.reserve(cand.size());
    for (const auto& [d, i] : cand) hits.emplace_back(&records_[i], d);
    return hits;
  }

  std::vector<Hit> within_radius(const Eigen::Vector3d& query, double radius,
                                 const std::unordered_set<std::string>& exclusion = {}) const {
    std::vector<Hit> hits;
    if (records_.empty() || radius < 0) return hits;
    std::vector<std::pair<double, std::size_t>> cand;
    const long x0 = long(std::floor((query.x() - radius) / cell_));
    const long x1 = long(std::floor((query.x() + radius) / cell_));
    const long y0 = long(std::floor((query.y() - radius) / cell_));
    const long y1 = long(std::floor((query.y() + radius) / cell_));
    for (long cx = x0; cx <= x1; ++cx) {
      for (long cy = y0; cy <= y1; ++cy) {
        const auto it = grid_.find({cx, cy});
        if (it == grid_.end()) continue;
        for (std::size_t i : it->second) {
          const auto& r = records_[i];
          if (exclusion.count(r.id)) continue;
          const double d = (r.local_position - query).norm();
          if (d <= radius) cand.emplace_back(d, i);
        }
      }
    }
    std::sort(cand.begin(), cand.end(),
              [this](const auto& a, const auto& b) { return less(a, b); });
    hits.reserve(cand.size());
    for (const auto& [d, i] : cand) hits.emplace_back(&records_[i], d);
    return hits;
  }

  void save(const std::filesystem::path& path) const;
  static SpatialIndex load(const std::filesystem::path& path,
                           std::shared_ptr<const RasterProvider> provider = nullptr);

 private:
  bool less(const std::pair<double, std::size_t>& a,
            const std::pair<double, std::size_t>& b) const {
    if (a.first != b.first) return a.first < b.first;
    return records_[a.second].id < records_[b.second].id;
  }

  std::pair<long, long> cell_of(const Eigen::Vector3d& p) const {
    return {long(std::floor(p.x() / cell_)), long(std::floor(p.y() / cell_))};
  }

  long max_ring_from(long cx, long cy) const {
    long m = 0;
    for (const auto& [cell, v] : grid_)
      m = std::max(m, std::max(std::abs(cell.first - cx), std::abs(cell.second - cy)));
    return m;
  }

  template <typename Fn>
  void visit_cell(long cx, long cy, const Fn& fn) const {
    const auto it = grid_.find({cx, cy});
    if (it == grid_.end()) return;
    for (std::size_t i : it->second) fn(i);
  }

  template <typename Fn>
  void visit_ring(long cx, long cy, long ring, const Fn& fn) const {
    if (ring == 0) {
      visit_cell(cx, cy, fn);
      return;
    }
    for (long dx = -ring; dx <= ring; ++dx) {
      visit_cell(cx + dx, cy - ring, fn);
      visit_cell(cx + dx, cy + ring, fn);
    }
    for (long dy = -ring + 1; dy <= ring - 1; ++dy) {
      visit_cell(cx - ring, cy + dy, fn);
      visit_cell(cx + ring, cy + dy, fn);
    }
  }

  std::vector<PanoramaRecord> records_;
  std::unordered_map<std::string, std::size_t> by_id_;
  std::map<std::pair<long, long>, std::vector<std::size_t>> grid_;
  std::shared_ptr<const RasterProvider> provider_;
  double cell_ = 25.0;
};

/// Index of the view whose yaw best matches a viewing direction given as a
/// compass heading; ties go to the lower yaw index.
inline int best_yaw_view(const PanoramaRecord& record, double target_heading) {
  int best = 0;
  double best_err = std::numeric_limits<double>::infinity();
  for (int k = 0; k < int(record.views.size()); ++k) {
    const double err = std::abs(wrap_angle(pose_heading(record.views[k].pose) - target_heading));
    if (err < best_err - 1e-12) {
      best_err = err;
      best = k;
    }
  }
  return best;
}

/// Fraction of a stride-subsampled reference pixel grid that lifts through
/// the reference depth and lands inside the target view's image bounds
/// with positive target-frame depth.
inline double reprojection_coverage(const PinholeView& ref, const CameraPose& target_pose,
                                    const CameraIntrinsics& target_intrinsics, int stride) {
  if (!ref.depth) throw ValidationError("coverage: reference depth not materialized");
  if (stride < 1) throw ValidationError("coverage: stride must be >= 1");
  const auto& dep = *ref.depth;
  long samples = 0, hits = 0;
  for (int v = 0; v < dep.height; v += stride) {
    for (int u = 0; u < dep.width; u += stride) {
      ++samples;
      const float z = dep.at(u, v);
      if (!std::isfinite(z) || z <= 0) continue;
      const Eigen::Vector3d p_world = ref.pose.to_world(ref.intrinsics.pixel_ray(u, v) * double(z));
      const Eigen::Vector3d p_t = target_pose.to_camera(p_world);
      if (p_t.z() <= 0) continue;
      const Eigen::Vector2d uv = target_intrinsics.project(p_t);
      if (uv.x() >= 0 && uv.x() < target_intrinsics.width && uv.y() >= 0 &&
          uv.y() < target_intrinsics.height)
        ++hits;
    }
  }
  return samples == 0 ? 0.0 : double(hits) / double(samples);
}

/// Two-stage reference retrieval: (1) candidate panoramas within
/// cfg.radius of any trajectory pose, (2) per candidate, the view whose
/// yaw best matches the nearest trajectory pose is kept if its
/// reprojection coverage into that pose reaches the threshold. The target
/// view shares the reference's intrinsics. Excluded ids never appear.
/// An empty result is not an error: callers fall back to reference
/// dropout.
inline RetrievalResult retrieve_references(const SpatialIndex& index,
                                           const std::vector<CameraPose>& trajectory,
                                           const RetrievalConfig& cfg,
                                           const std::unordered_set<std::string>& exclusion = {}) {
  if (trajectory.empty()) throw ValidationError("retrieve: empty trajectory");
  if (cfg.k < 1) throw ValidationError("retrieve: K must be >= 1");
  if (!(cfg.coverage_threshold >= 0 && cfg.coverage_threshold <= 1))
    throw ValidationError("retrieve: coverage threshold must be in [0, 1]");

  std::unordered_set<std::string> seen;
  std::vector<const PanoramaRecord*> candidates;
  for (const auto& pose : trajectory) {
    for (const auto& [rec, dist] : index.within_radius(pose.translation, cfg.radius, exclusion)) {
      if (seen.insert(rec->id).second) candidates.push_back(rec);
    }
  }

  RetrievalResult result;
  for (const PanoramaRecord* rec : candidates) {
    std::size_t nearest = 0;
    double nearest_d = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < trajectory.size(); ++i) {
      const double d = (rec->local_position - trajectory[i].translation).norm();
      if (d < nearest_d) {
        nearest_d = d;
        nearest = i;
      }
    }
    const CameraPose& target = trajectory[nearest];
    PinholeView view = rec->views[best_yaw_view(*rec, pose_heading(target))];
    materialize_view(view, index.provider());
    const double coverage = reprojection_coverage(view, target, view.intrinsics, cfg.grid_stride);
    if (coverage >= cfg.coverage_threshold)
      result.entries.push_back({std::move(view), coverage, nearest_d});
  }
  std::sort(result.entries.begin(), result.entries.end(), [](const auto& a, const auto& b) {
    if (a.distance != b.distance) return a.distance < b.distance;
    return a.view.parent_id < b.view.parent_id;
  });
  if (result.entries.size() > std::size_t(cfg.k)) result.entries.resize(std::size_t(cfg.k));
  return result;
}

/// Nearest street-view image to a chunk endpoint, yaw-matched to the
/// endpoint's forward direction: the Virtual Lookahead Sink source.
inline PinholeView retrieve_lookahead(const SpatialIndex& index, const CameraPose& chunk_end_pose,
                                      const std::unordered_set<std::string>& exclusion = {}) {
  const auto hits = index.k_nearest(chunk_end_pose.translation, 1, exclusion);
  if (hits.empty())
    throw DegenerateInputError("no sink available; plan without sink");
  const PanoramaRecord& rec = *hits.front().first;
  return rec.views[best_yaw_view(rec, pose_heading(chunk_end_pose))];
}

// ---------------------------------------------------------------------------
// Binary persistence. Layout (all integers little-endian):
//   [0..8)    magic "SWMIDX1\0"
//   [8..16)   u64 record count N
//   N fixed-width 48-byte records:
//     u64 id_hash (FNV-1a of the id string)
//     f64 x, y, z            local position, meters
//     f64 timestamp
//     u64 view_offset        absolute offset of the record's variable block
//   N variable blocks, each:
//     str id, str session_id (u32 length + bytes)
//     f64 heading
//     f64 lat, lon, alt      (alt NaN when absent)
//     8 x view:
//       u32 yaw_index
//       f64 fx fy cx cy, u32 width height
//       f64[12] camera-to-world pose, row-major 3x4
//       str image_path, str depth_path
// ---------------------------------------------------------------------------

namespace detail {

inline void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(char((v >> (8 * i)) & 0xff));
}
inline void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(char((v >> (8 * i)) & 0xff));
}
inline void put_f64(std::string& out, double d) {
  std::uint64_t bits;
  std::memcpy(&bits, &d, 8);
  put_u64(out, bits);
}
inline void put_str(std::string& out, const std::string& s) {
  put_u32(out, std::uint32_t(s.size()));
  out.append(s);
}

class Reader {
 public:
  Reader(const std::string& buf, std::size_t pos) : buf_(buf), pos_(pos) {}
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t(std::uint8_t(buf_[pos_ + i])) << (8 * i);
    pos_ += 4;
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= std::uint64_t(std::uint8_t(buf_[pos_ + i])) << (8 * i);
    pos_ += 8;
    return v;
  }
  double f64() {
    const std::uint64_t bits = u64();
    double d;
    std::memcpy(&d, &bits, 8);
    return d;
  }
  std::string str() {
    const std::uint32_t n = u32();
    need(n);
    std::string s = buf_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  std::size_t pos() const { return pos_; }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > buf_.size()) throw ValidationError("index file truncated");
  }
  const std::string& buf_;
  std::size_t pos_;
};

}  // namespace detail

inline void SpatialIndex::save(const std::filesystem::path& path) const {
  constexpr std::size_t kFixed = 48;
  std::string head;
  head.append("SWMIDX1", 7);
  head.push_back('\0');
  detail::put_u64(head, records_.size());

  std::string tail;
  std::vector<std::uint64_t> offsets;
  offsets.reserve(records_.size());
  const std::size_t tail_base = 16 + kFixed * records_.size();
  for (const auto& r : records_) {
    offsets.push_back(tail_base + tail.size());
    detail::put_str(tail, r.id);
    detail::put_str(tail, r.session_id);
    detail::put_f64(tail, r.heading);
    detail::put_f64(tail, r.geo.latitude);
    detail::put_f64(tail, r.geo.longitude);
    detail::put_f64(tail, r.geo.altitude.value_or(std::numeric_limits<double>::quiet_NaN()));
    for (const auto& v : r.views) {
      detail::put_u32(tail, std::uint32_t(v.yaw_index));
      detail::put_f64(tail, v.intrinsics.fx);
      detail::put_f64(tail, v.intrinsics.fy);
      detail::put_f64(tail, v.intrinsics.cx);
      detail::put_f64(tail, v.intrinsics.cy);
      detail::put_u32(tail, std::uint32_t(v.intrinsics.width));
      detail::put_u32(tail, std::uint32_t(v.intrinsics.height));
      for (int row = 0; row < 3; ++row) {
        for (int col = 0; col < 3; ++col) detail::put_f64(tail, v.pose.rotation(row, col));
        detail::put_f64(tail, v.pose.translation(row));
      }
      detail::put_str(tail, v.image_path);
      detail::put_str(tail, v.depth_path);
    }
  }

  std::string fixed;
  fixed.reserve(kFixed * records_.size());
  for (std::size_t i = 0; i < records_.size(); ++i) {
    const auto& r = records_[i];
    detail::put_u64(fixed, fnv1a64(r.id));
    detail::put_f64(fixed, r.local_position.x());
    detail::put_f64(fixed, r.local_position.y());
    detail::put_f64(fixed, r.local_position.z());
    detail::put_f64(fixed, r.timestamp);
    detail::put_u64(fixed, offsets[i]);
  }

  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot open for write: " + path.string());
  out << head << fixed << tail;
  if (!out) throw ValidationError("index write failed: " + path.string());
}

inline SpatialIndex SpatialIndex::load(const std::filesystem::path& path,
                                       std::shared_ptr<const RasterProvider> provider) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open: " + path.string());
  std::string buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (buf.size() < 16 || buf.compare(0, 8, std::string("SWMIDX1\0", 8)) != 0)
    throw ValidationError("not an index file: " + path.string());
  detail::Reader header(buf, 8);
  const std::uint64_t count = header.u64();
  std::vector<PanoramaRecord> records;
  records.reserve(count);
  detail::Reader fixed(buf, 16);
  for (std::uint64_t i = 0; i < count; ++i) {
    PanoramaRecord r;
    const std::uint64_t stored_hash = fixed.u64();
    r.local_position.x() = fixed.f64();
    r.local_position.y() = fixed.f64();
    r.local_position.z() = fixed.f64();
    r.timestamp = fixed.f64();
    const std::uint64_t view_offset = fixed.u64();

    detail::Reader var(buf, view_offset);
    r.id = var.str();
    if (fnv1a64(r.id) != stored_hash)
      throw ValidationError("index file corrupt: id hash mismatch for " + r.id);
    r.session_id = var.str();
    r.heading = var.f64();
    r.geo.latitude = var.f64();
    r.geo.longitude = var.f64();
    const double alt = var.f64();
    if (std::isfinite(alt)) r.geo.altitude = alt;
    r.views.resize(8);
    for (auto& v : r.views) {
      v.parent_id = r.id;
      v.yaw_index = int(var.u32());
      v.intrinsics.fx = var.f64();
      v.intrinsics.fy = var.f64();
      v.intrinsics.cx = var.f64();
      v.intrinsics.cy = var.f64();
      v.intrinsics.width = int(var.u32());
      v.intrinsics.height = int(var.u32());
      for (int row = 0; row < 3; ++row) {
        for (int col = 0; col < 3; ++col) v.pose.rotation(row, col) = var.f64();
        v.pose.translation(row) = var.f64();
      }
      v.image_path = var.str();
      v.depth_path = var.str();
    }
    records.push_back(std::move(r));
  }
  return build(std::move(records), std::move(provider));
}

}  // namespace swm
