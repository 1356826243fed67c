#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "swm/geo.hpp"
#include "swm/index.hpp"
#include "swm/raster.hpp"

namespace swm {

/// Paired predicted/ground-truth pose sequences evaluated in
/// non-overlapping chunks with chunk-relative poses.
struct TrajectoryEval {
  std::vector<CameraPose> predicted;
  std::vector<CameraPose> ground_truth;
  int chunk_size = 77;

  void validate() const {
    if (predicted.size() != ground_truth.size())
      throw ValidationError("trajectory eval: length mismatch");
    if (predicted.size() < 2) throw ValidationError("trajectory eval: need >= 2 poses");
    if (chunk_size < 2) throw ValidationError("trajectory eval: chunk_size must be >= 2");
  }
};

/// Mean geodesic distance on SO(3) between chunk-relative rotations.
/// Each chunk's first frame is the identity for both trajectories by
/// construction, so the mean runs over the remaining frames.
inline double rot_err(const TrajectoryEval& eval) {
  eval.validate();
  const std::size_t n = eval.predicted.size();
  double sum = 0;
  std::size_t count = 0;
  for (std::size_t c = 0; c < n; c += std::size_t(eval.chunk_size)) {
    const std::size_t end = std::min(n, c + std::size_t(eval.chunk_size));
    const Eigen::Matrix3d rp0 = eval.predicted[c].rotation.transpose();
    const Eigen::Matrix3d rg0 = eval.ground_truth[c].rotation.transpose();
    for (std::size_t t = c + 1; t < end; ++t) {
      sum += geodesic_rotation_distance(rp0 * eval.predicted[t].rotation,
                                        rg0 * eval.ground_truth[t].rotation);
      ++count;
    }
  }
  return count == 0 ? 0.0 : sum / double(count);
}

struct TransErrResult {
  double value = 0;
  int chunks_used = 0;
  int chunks_skipped = 0;  // chunks with a zero max translation norm
};

/// Mean l2 distance between chunk-relative translations after each
/// trajectory is normalized by its own maximum translation norm within the
/// chunk. Chunks where either trajectory never moves are skipped.
inline TransErrResult trans_err(const TrajectoryEval& eval) {
  eval.validate();
  const std::size_t n = eval.predicted.size();
  TransErrResult res;
  double sum = 0;
  std::size_t count = 0;
  for (std::size_t c = 0; c < n; c += std::size_t(eval.chunk_size)) {
    const std::size_t end = std::min(n, c + std::size_t(eval.chunk_size));
    std::vector<Eigen::Vector3d> tp, tg;
    double mp = 0, mg = 0;
    for (std::size_t t = c; t < end; ++t) {
      tp.push_back(eval.predicted[c].to_camera(eval.predicted[t].translation));
      tg.push_back(eval.ground_truth[c].to_camera(eval.ground_truth[t].translation));
      mp = std::max(mp, tp.back().norm());
      mg = std::max(mg, tg.back().norm());
    }
    if (mp <= 0 || mg <= 0) {
      ++res.chunks_skipped;
      continue;
    }
    for (std::size_t t = 1; t < tp.size(); ++t) {
      sum += (tp[t] / mp - tg[t] / mg).norm();
      ++count;
    }
    ++res.chunks_used;
  }
  if (res.chunks_used == 0)
    throw DegenerateInputError("trans_err: every chunk is static in at least one trajectory");
  res.value = count == 0 ? 0.0 : sum / double(count);
  return res;
}

/// Per-frame dynamic-object masks for both videos; true marks a dynamic
/// pixel to exclude. Empty vectors mean everything is static.
struct StaticMaskSet {
  std::vector<BoolMask> predicted;
  std::vector<BoolMask> ground_truth;
};

struct MaskedPsnrResult {
  double psnr_db = 0;  // +inf when the static regions match exactly
  double mse = 0;      // on [0, 1]-normalized intensities
  long frames_used = 0;
  long frames_skipped = 0;  // frames with zero static pixels
  long static_pixels = 0;
};

/// PSNR over pixels outside the union of both videos' dynamic masks,
/// pooled across frames. MAX = 1.0 on normalized intensities; 8-bit
/// samples are scaled on ingestion.
inline MaskedPsnrResult masked_psnr(const std::vector<ImageU8>& frames,
                                    const std::vector<ImageU8>& gt_frames,
                                    const StaticMaskSet& masks = {}) {
  if (frames.size() != gt_frames.size())
    throw ValidationError("masked_psnr: frame count mismatch");
  if (frames.empty()) throw ValidationError("masked_psnr: no frames");
  if (!masks.predicted.empty() && masks.predicted.size() != frames.size())
    throw ValidationError("masked_psnr: predicted mask count mismatch");
  if (!masks.ground_truth.empty() && masks.ground_truth.size() != frames.size())
    throw ValidationError("masked_psnr: ground-truth mask count mismatch");

  MaskedPsnrResult res;
  double sq_sum = 0;
  for (std::size_t f = 0; f < frames.size(); ++f) {
    const ImageU8& a = frames[f];
    const ImageU8& b = gt_frames[f];
    if (a.width != b.width || a.height != b.height)
      throw ValidationError("masked_psnr: frame dimension mismatch");
    const BoolMask* mp = masks.predicted.empty() ? nullptr : &masks.predicted[f];
    const BoolMask* mg = masks.ground_truth.empty() ? nullptr : &masks.ground_truth[f];
    if ((mp && (mp->width != a.width || mp->height != a.height)) ||
        (mg && (mg->width != a.width || mg->height != a.height)))
      throw ValidationError("masked_psnr: mask dimension mismatch");
    long frame_static = 0;
    for (int y = 0; y < a.height; ++y) {
      for (int x = 0; x < a.width; ++x) {
        if ((mp && mp->at(x, y)) || (mg && mg->at(x, y))) continue;
        ++frame_static;
        for (int c = 0; c < 3; ++c) {
          const double d = (double(a.at(x, y)[c]) - double(b.at(x, y)[c])) / 255.0;
          sq_sum += d * d;
        }
      }
    }
    if (frame_static == 0) {
      ++res.frames_skipped;
    } else {
      ++res.frames_used;
      res.static_pixels += frame_static;
    }
  }
  if (res.frames_used == 0) throw DegenerateInputError("masked_psnr: no static pixels");
  res.mse = sq_sum / (3.0 * double(res.static_pixels));
  res.psnr_db = res.mse == 0 ? std::numeric_limits<double>::infinity()
                             : 10.0 * std::log10(1.0 / res.mse);
  return res;
}

using WindowScorer = std::function<double(std::size_t start, std::size_t length)>;

/// Applies a pluggable scorer to every `window`-frame window at the given
/// stride. Scoring itself (FID etc.) is supplied externally; this owns
/// only the windowing.
inline std::vector<std::pair<std::size_t, double>> sliding_window_eval(std::size_t frame_count,
                                                                       std::size_t window,
                                                                       std::size_t stride,
                                                                       const WindowScorer& scorer) {
  if (window == 0 || stride == 0) throw ValidationError("sliding window: window/stride must be > 0");
  if (window > frame_count) throw ValidationError("sliding window: window exceeds sequence length");
  std::vector<std::pair<std::size_t, double>> out;
  for (std::size_t start = 0; start + window <= frame_count; start += stride)
    out.emplace_back(start, scorer(start, window));
  return out;
}

/// Convenience scorer: mean of per-frame values inside the window.
inline WindowScorer mean_window_scorer(std::vector<double> per_frame) {
  return [values = std::move(per_frame)](std::size_t start, std::size_t length) {
    double s = 0;
    for (std::size_t i = start; i < start + length; ++i) s += values.at(i);
    return s / double(length);
  };
}

/// One benchmark test sequence: a target trajectory resampled along a
/// street-view route, with the route's own panoramas excluded from
/// retrieval.
struct SequenceSpec {
  std::string id;
  int frames = 0;
  double length_m = 0;
  std::vector<std::string> route;      // panoramas the sequence is built from
  std::vector<std::string> exclusion;  // == route, the benchmark rule
  std::vector<CameraPose> trajectory;  // `frames` poses along the route
};

struct BenchmarkConfig {
  int frames = 365;
  double length_m = 100.0;
  int max_sequences = 30;
  double camera_height = 2.0;
};

inline BenchmarkConfig standard_benchmark() { return {365, 100.0, 30, 2.0}; }
inline BenchmarkConfig long_horizon_benchmark() { return {1460, 500.0, 30, 2.0}; }

/// Cuts non-overlapping `length_m` segments out of the given routes and
/// emits `frames`-pose sequences along them.
inline std::vector<SequenceSpec> benchmark_spec(const SpatialIndex& index,
                                                const std::vector<std::vector<std::string>>& routes,
                                                const BenchmarkConfig& cfg) {
  std::vector<SequenceSpec> specs;
  for (const auto& route : routes) {
    if (int(specs.size()) >= cfg.max_sequences) break;
    std::vector<const PanoramaRecord*> recs;
    for (const auto& id : route) {
      const PanoramaRecord* r = index.find(id);
      if (!r) throw ValidationError("benchmark: unknown panorama " + id);
      recs.push_back(r);
    }
    if (recs.size() < 2) continue;
    std::vector<double> arc(recs.size(), 0.0);
    for (std::size_t i = 1; i < recs.size(); ++i)
      arc[i] = arc[i - 1] + (recs[i]->local_position - recs[i - 1]->local_position).norm();

    double begin = 0;
    while (begin + cfg.length_m <= arc.back() + 1e-9 && int(specs.size()) < cfg.max_sequences) {
      SequenceSpec spec;
      spec.id = "seq-" + std::to_string(specs.size());
      spec.frames = cfg.frames;
      spec.length_m = cfg.length_m;
      for (std::size_t i = 0; i < recs.size(); ++i)
        if (arc[i] >= begin - 1e-9 && arc[i] <= begin + cfg.length_m + 1e-9)
          spec.route.push_back(recs[i]->id);
      spec.exclusion = spec.route;
      spec.trajectory.reserve(std::size_t(cfg.frames));
      std::size_t seg = 1;
      for (int f = 0; f < cfg.frames; ++f) {
        const double s = begin + cfg.length_m * double(f) / double(cfg.frames - 1);
        while (seg + 1 < recs.size() && arc[seg] < s) ++seg;
        const double s0 = arc[seg - 1], s1 = arc[seg];
        const double a = s1 > s0 ? std::clamp((s - s0) / (s1 - s0), 0.0, 1.0) : 0.0;
        const Eigen::Vector3d p = (1 - a) * recs[seg - 1]->local_position +
                                  a * recs[seg]->local_position;
        const Eigen::Vector3d dir3 = recs[seg]->local_position - recs[seg - 1]->local_position;
        CameraPose pose;
        pose.rotation = heading_rotation(std::atan2(dir3.x(), dir3.y()));
        pose.translation = {p.x(), p.y(), cfg.camera_height};
        spec.trajectory.push_back(pose);
      }
      specs.push_back(std::move(spec));
      begin += cfg.length_m;
    }
  }
  if (specs.empty())
    throw ValidationError("benchmark: no route long enough for the requested length");
  return specs;
}

}  // namespace swm
