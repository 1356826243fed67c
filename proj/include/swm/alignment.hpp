#pragma once

#include <cmath>
#include <vector>

#include "swm/geo.hpp"
#include "swm/raster.hpp"

namespace swm {

/// Estimator-frame pose chunk with per-keyframe GPS, the unit of metric
/// alignment.
struct PoseChunk {
  std::vector<CameraPose> poses;  // arbitrary estimator frame
  std::vector<GeoPoint> gps;      // aligned 1:1 with the poses

  void validate() const {
    if (poses.size() < 2) throw ValidationError("pose chunk: need >= 2 poses");
    if (poses.size() != gps.size())
      throw ValidationError("pose chunk: pose/gps length mismatch");
  }
};

/// Gravity-aligned similarity: uniform scale, rotation about the up axis
/// only, translation in local ENU meters.
struct SimilarityTransform {
  double scale = 1.0;
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();

  void validate() const {
    if (!(scale > 0)) throw ValidationError("similarity: scale must be > 0");
    if ((rotation * Eigen::Vector3d::UnitZ() - Eigen::Vector3d::UnitZ()).norm() > 1e-9)
      throw ValidationError("similarity: rotation must be about the up axis");
  }

  /// Heading angle of the yaw rotation, radians.
  double yaw() const { return std::atan2(rotation(1, 0), rotation(0, 0)); }

  Eigen::Vector3d apply_point(const Eigen::Vector3d& p) const {
    return scale * (rotation * p) + translation;
  }
  CameraPose apply_pose(const CameraPose& pose) const {
    return {rotation * pose.rotation, apply_point(pose.translation)};
  }
};

struct AlignmentResult {
  SimilarityTransform transform;
  std::vector<CameraPose> aligned;
};

/// Aligns one chunk by matching the first-to-last camera displacement with
/// the displacement derived from GPS: scale from the horizontal norms,
/// yaw from the horizontal directions, translation anchoring pose 0 to
/// ENU(gps[0]). GPS altitude is ignored; the estimator vertical passes
/// through scaled but unrotated.
inline AlignmentResult align_chunk(const PoseChunk& chunk, const GeoPoint& origin,
                                   double min_displacement = 0.5) {
  chunk.validate();
  const Eigen::Vector3d g0 = geo_to_local(chunk.gps.front(), origin);
  const Eigen::Vector3d g1 = geo_to_local(chunk.gps.back(), origin);
  const Eigen::Vector2d dg(g1.x() - g0.x(), g1.y() - g0.y());
  const Eigen::Vector3d de3 = chunk.poses.back().translation - chunk.poses.front().translation;
  const Eigen::Vector2d de(de3.x(), de3.y());
  if (dg.norm() <= min_displacement || de.norm() <= min_displacement)
    throw DegenerateInputError("chunk too short to align");

  SimilarityTransform sim;
  sim.scale = dg.norm() / de.norm();
  const double yaw = std::atan2(dg.y(), dg.x()) - std::atan2(de.y(), de.x());
  sim.rotation = Eigen::AngleAxisd(yaw, Eigen::Vector3d::UnitZ()).toRotationMatrix();
  sim.translation = g0 - sim.scale * (sim.rotation * chunk.poses.front().translation);

  AlignmentResult out;
  out.transform = sim;
  out.aligned.reserve(chunk.poses.size());
  for (const auto& p : chunk.poses) out.aligned.push_back(sim.apply_pose(p));
  return out;
}

/// Least-squares variant using every GPS point (horizontal only), not just
/// the endpoints. Exposed for experimentation; the endpoint form above is
/// the documented default.
inline AlignmentResult align_chunk_lsq(const PoseChunk& chunk, const GeoPoint& origin,
                                       double min_displacement = 0.5) {
  chunk.validate();
  const std::size_t n = chunk.poses.size();
  Eigen::Vector2d ce = Eigen::Vector2d::Zero(), cg = Eigen::Vector2d::Zero();
  std::vector<Eigen::Vector3d> enu(n);
  for (std::size_t i = 0; i < n; ++i) {
    enu[i] = geo_to_local(chunk.gps[i], origin);
    ce += chunk.poses[i].translation.head<2>();
    cg += enu[i].head<2>();
  }
  ce /= double(n);
  cg /= double(n);
  // Horizontal similarity by complex-number least squares about centroids.
  double se = 0, dot = 0, cross = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const Eigen::Vector2d e = chunk.poses[i].translation.head<2>() - ce;
    const Eigen::Vector2d g = enu[i].head<2>() - cg;
    se += e.squaredNorm();
    dot += e.dot(g);
    cross += e.x() * g.y() - e.y() * g.x();
  }
  if (std::sqrt(se / double(n)) <= min_displacement / 2 || std::hypot(dot, cross) <= 0)
    throw DegenerateInputError("chunk too short to align");
  SimilarityTransform sim;
  sim.scale = std::hypot(dot, cross) / se;
  sim.rotation =
      Eigen::AngleAxisd(std::atan2(cross, dot), Eigen::Vector3d::UnitZ()).toRotationMatrix();
  const Eigen::Vector2d t2 =
      cg - sim.scale * (sim.rotation.topLeftCorner<2, 2>() * ce);
  const Eigen::Vector3d p0 = chunk.poses.front().translation;
  sim.translation = {t2.x(), t2.y(),
                     geo_to_local(chunk.gps.front(), origin).z() - sim.scale * p0.z()};
  AlignmentResult out;
  out.transform = sim;
  out.aligned.reserve(n);
  for (const auto& p : chunk.poses) out.aligned.push_back(sim.apply_pose(p));
  return out;
}

/// Elementwise metric scaling of an affine-invariant depth raster; NaN
/// (invalid) entries pass through.
inline DepthMap scale_depth(const DepthMap& depth, double scale) {
  if (!(scale > 0)) throw ValidationError("scale_depth: scale must be > 0");
  DepthMap out = depth;
  for (float& v : out.values)
    if (std::isfinite(v)) v = float(v * scale);
  return out;
}

/// Aligns every chunk of a sequence, merging a degenerate chunk into its
/// successor and re-aligning (stopped-vehicle segments). Returns the
/// concatenated aligned trajectory.
inline std::vector<CameraPose> align_sequence(const std::vector<PoseChunk>& chunks,
                                              const GeoPoint& origin,
                                              double min_displacement = 0.5) {
  if (chunks.empty()) throw ValidationError("align_sequence: no chunks");
  std::vector<CameraPose> out;
  PoseChunk pending;
  for (std::size_t i = 0; i < chunks.size(); ++i) {
    chunks[i].validate();
    pending.poses.insert(pending.poses.end(), chunks[i].poses.begin(), chunks[i].poses.end());
    pending.gps.insert(pending.gps.end(), chunks[i].gps.begin(), chunks[i].gps.end());
    try {
      const AlignmentResult res = align_chunk(pending, origin, min_displacement);
      out.insert(out.end(), res.aligned.begin(), res.aligned.end());
      pending = PoseChunk{};
    } catch (const DegenerateInputError&) {
      if (i + 1 == chunks.size())
        throw DegenerateInputError("trailing chunks too short to align");
    }
  }
  return out;
}

}  // namespace swm
