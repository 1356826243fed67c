#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <unordered_set>
#include <vector>

#include "swm/grouping.hpp"
#include "swm/index.hpp"

namespace swm {

enum class SourceTag { streetview, synthetic, drive_video };

inline std::string to_string(SourceTag s) {
  switch (s) {
    case SourceTag::streetview: return "streetview";
    case SourceTag::synthetic: return "synthetic";
    case SourceTag::drive_video: return "drive-video";
  }
  return "streetview";
}

inline SourceTag source_tag_from(const std::string& s) {
  if (s == "streetview") return SourceTag::streetview;
  if (s == "synthetic") return SourceTag::synthetic;
  if (s == "drive-video") return SourceTag::drive_video;
  throw ValidationError("unknown source tag: " + s);
}

/// Condition dropout decisions for one sample; true = condition dropped.
struct DropoutFlags {
  bool text = false;
  bool refs = false;
  bool warp = false;
  bool history_noise = false;
};

struct DropoutConfig {
  double p_text = 0.2;
  double p_refs = 0.2;
  double p_warp = 0.2;
  double p_history_noise = 0.5;
};

/// Independent Bernoulli draws, deterministic per seed. Drive-video samples
/// never carry references, so their reference and warp conditions are
/// forced dropped regardless of the draws.
inline DropoutFlags conditioning_dropout(SourceTag source, std::uint64_t seed,
                                         const DropoutConfig& cfg = {}) {
  auto rng = make_rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  DropoutFlags f;
  f.text = u(rng) < cfg.p_text;
  f.refs = u(rng) < cfg.p_refs;
  f.warp = u(rng) < cfg.p_warp;
  f.history_noise = u(rng) < cfg.p_history_noise;
  if (source == SourceTag::drive_video) {
    f.refs = true;
    f.warp = true;
  }
  return f;
}

enum class CameraAction { straight, stop, left_turn, right_turn };

inline std::string to_string(CameraAction a) {
  switch (a) {
    case CameraAction::straight: return "straight";
    case CameraAction::stop: return "stop";
    case CameraAction::left_turn: return "left turn";
    case CameraAction::right_turn: return "right turn";
  }
  return "straight";
}

/// Camera-action sentence prefix derived from the pose sequence.
inline std::string camera_action_sentence(CameraAction a) {
  switch (a) {
    case CameraAction::straight: return "The camera moves straight ahead.";
    case CameraAction::stop: return "The camera stays still.";
    case CameraAction::left_turn: return "The camera makes a left turn.";
    case CameraAction::right_turn: return "The camera makes a right turn.";
  }
  return "";
}

/// Net-motion classification: stop below d_stop meters of net displacement,
/// a turn when the net heading change passes theta_turn, else straight.
inline CameraAction label_camera_action(const std::vector<CameraPose>& poses,
                                        double d_stop = 1.0,
                                        double theta_turn = deg_to_rad(20.0)) {
  if (poses.size() < 2) throw ValidationError("label_camera_action: need >= 2 poses");
  if ((poses.back().translation - poses.front().translation).norm() < d_stop)
    return CameraAction::stop;
  const double dh = wrap_angle(pose_heading(poses.back()) - pose_heading(poses.front()));
  if (dh < -theta_turn) return CameraAction::left_turn;  // compass heading falls turning left
  if (dh > theta_turn) return CameraAction::right_turn;
  return CameraAction::straight;
}

/// One uniform draw in [-90, +90] degrees applied to the whole sequence's
/// forward heading; deterministic per seed.
inline double target_yaw_policy(const std::vector<double>& route_headings, std::uint64_t seed) {
  if (route_headings.empty()) throw ValidationError("target_yaw_policy: empty route");
  auto rng = make_rng(seed);
  return std::uniform_real_distribution<double>(-kPi / 2.0, kPi / 2.0)(rng);
}

/// Freeze-frame expansion/replacement/discard maps for sparse-keyframe
/// interpolation. Each keyframe occupies one full latent group (4 pixel
/// frames, or the single frame 0 under causal grouping); the surplus group
/// frames are discarded after decoding.
struct InterpolationPlan {
  int total_frames = 0;
  int latent_count = 0;
  LatentGrouping grouping = LatentGrouping::causal;

  struct KeyframeGroup {
    int latent_index = 0;  // also the latent the clean keyframe latent replaces
    int frame_begin = 0, frame_end = 0;
  };
  std::vector<KeyframeGroup> keyframe_groups;
  std::vector<std::uint8_t> discard_mask;  // per pixel frame
  std::vector<int> expansion_source;       // output frame -> original frame index

  int discarded_frames() const {
    int n = 0;
    for (auto d : discard_mask) n += d != 0;
    return n;
  }
  int surviving_frames() const { return total_frames - discarded_frames(); }

  /// Applies the expansion map to an original sequence.
  template <typename T>
  std::vector<T> expand(const std::vector<T>& original) const {
    if (int(original.size()) != surviving_frames())
      throw ValidationError("expand: sequence length does not match the plan");
    std::vector<T> out;
    out.reserve(expansion_source.size());
    for (int src : expansion_source) out.push_back(original[std::size_t(src)]);
    return out;
  }

  /// Drops the repeated keyframe frames, recovering the intended video.
  template <typename T>
  std::vector<T> discard(const std::vector<T>& expanded) const {
    if (int(expanded.size()) != total_frames)
      throw ValidationError("discard: sequence length does not match the plan");
    std::vector<T> out;
    out.reserve(std::size_t(surviving_frames()));
    for (int f = 0; f < total_frames; ++f)
      if (!discard_mask[std::size_t(f)]) out.push_back(expanded[std::size_t(f)]);
    return out;
  }
};

inline InterpolationPlan freeze_frame_plan(const std::vector<int>& keyframe_slots,
                                           int latent_count,
                                           LatentGrouping grouping = LatentGrouping::causal) {
  InterpolationPlan plan;
  plan.latent_count = latent_count;
  plan.grouping = grouping;
  plan.total_frames = frames_for_latents(grouping, latent_count);
  plan.discard_mask.assign(std::size_t(plan.total_frames), 0);
  int prev = -1;
  for (int s : keyframe_slots) {
    if (s < 0 || s >= latent_count)
      throw ValidationError("freeze_frame_plan: keyframe slot out of range");
    if (s <= prev) throw ValidationError("freeze_frame_plan: keyframe slots must strictly increase");
    prev = s;
    const auto [begin, end] = latent_frame_range(grouping, s);
    plan.keyframe_groups.push_back({s, begin, end});
    for (int f = begin + 1; f < end; ++f) plan.discard_mask[std::size_t(f)] = 1;
  }
  std::vector<int> survivors_before(std::size_t(plan.total_frames) + 1, 0);
  for (int f = 0; f < plan.total_frames; ++f)
    survivors_before[std::size_t(f) + 1] =
        survivors_before[std::size_t(f)] + (plan.discard_mask[std::size_t(f)] ? 0 : 1);
  plan.expansion_source.resize(std::size_t(plan.total_frames));
  for (int f = 0; f < plan.total_frames; ++f)
    plan.expansion_source[std::size_t(f)] = survivors_before[std::size_t(f)];
  for (const auto& g : plan.keyframe_groups)
    for (int f = g.frame_begin; f < g.frame_end; ++f)
      plan.expansion_source[std::size_t(f)] = survivors_before[std::size_t(g.frame_begin)];
  return plan;
}

/// One constructed training pair: N target keyframe views along a route
/// plus up to K cross-temporal reference views.
struct TrainingSample {
  std::vector<PinholeView> target;
  std::vector<PinholeView> references;
  SourceTag source = SourceTag::streetview;
  std::string caption;  // slot for externally produced captions
  std::string camera_action;
  CameraAction action = CameraAction::straight;
  DropoutFlags dropout;
  double history_noise_sigma = 0.1;
  double yaw_offset = 0;
};

struct PairingConfig {
  int n_target = 20;         // keyframes per training sequence
  int k_refs = 5;            // reference budget
  double radius = 40.0;      // stage-1 radius around the target route
  double min_time_gap = 3600.0;  // cross-temporal gap, seconds
  double yaw_offset = 0;     // per-sequence target yaw offset
  SourceTag source = SourceTag::streetview;
  std::uint64_t seed = 0;    // drives conditioning dropout
};

/// Cross-temporal pairing: the target is the first N consecutive route
/// records; references are the up-to-K nearest panoramas from a different
/// session separated by at least the configured time gap from every target
/// frame, view-matched to their nearest target frame's facing direction.
/// Zero eligible references forces reference dropout instead of failing.
inline TrainingSample pair_cross_temporal(const SpatialIndex& index,
                                          const std::vector<std::string>& route,
                                          const PairingConfig& cfg) {
  if (int(route.size()) < cfg.n_target)
    throw ValidationError("pair_cross_temporal: route shorter than N");
  std::vector<const PanoramaRecord*> targets;
  targets.reserve(std::size_t(cfg.n_target));
  for (int i = 0; i < cfg.n_target; ++i) {
    const PanoramaRecord* rec = index.find(route[std::size_t(i)]);
    if (!rec) throw ValidationError("pair_cross_temporal: unknown panorama " + route[std::size_t(i)]);
    targets.push_back(rec);
  }

  TrainingSample sample;
  sample.source = cfg.source;
  sample.yaw_offset = cfg.yaw_offset;
  std::unordered_set<std::string> target_sessions;
  std::vector<CameraPose> target_poses;
  for (const PanoramaRecord* rec : targets) {
    target_sessions.insert(rec->session_id);
    sample.target.push_back(rec->views[best_yaw_view(*rec, rec->heading + cfg.yaw_offset)]);
    CameraPose p;
    p.rotation = heading_rotation(rec->heading);
    p.translation = rec->local_position;
    target_poses.push_back(p);
  }
  sample.action = label_camera_action(target_poses);
  sample.camera_action = camera_action_sentence(sample.action);

  // Stage 1 around the whole target route, then the cross-temporal filter.
  std::unordered_set<std::string> seen;
  std::vector<std::pair<double, const PanoramaRecord*>> eligible;
  for (const PanoramaRecord* t : targets) {
    for (const auto& [rec, d] : index.within_radius(t->local_position, cfg.radius)) {
      if (!seen.insert(rec->id).second) continue;
      if (target_sessions.count(rec->session_id)) continue;
      double min_gap = std::numeric_limits<double>::infinity();
      double min_dist = std::numeric_limits<double>::infinity();
      for (const PanoramaRecord* tt : targets) {
        min_gap = std::min(min_gap, std::abs(rec->timestamp - tt->timestamp));
        min_dist = std::min(min_dist, (rec->local_position - tt->local_position).norm());
      }
      if (min_gap < cfg.min_time_gap) continue;
      eligible.emplace_back(min_dist, rec);
    }
  }
  std::sort(eligible.begin(), eligible.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first < b.first;
    return a.second->id < b.second->id;
  });
  if (eligible.size() > std::size_t(cfg.k_refs)) eligible.resize(std::size_t(cfg.k_refs));

  for (const auto& [dist, rec] : eligible) {
    std::size_t paired = 0;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < targets.size(); ++i) {
      const double d = (rec->local_position - targets[i]->local_position).norm();
      if (d < best) {
        best = d;
        paired = i;
      }
    }
    const double dir = targets[paired]->heading + cfg.yaw_offset;
    sample.references.push_back(rec->views[best_yaw_view(*rec, dir)]);
  }

  sample.dropout = conditioning_dropout(cfg.source, cfg.seed);
  if (sample.references.empty()) sample.dropout.refs = true;
  return sample;
}

/// Ratio-based interleaved sampling: each output position draws its source
/// stream from the ratio vector; streams are cycled. Deterministic per
/// seed, long-run proportions converge to the ratios, and every stream
/// with nonzero ratio keeps being sampled.
template <typename T>
std::vector<T> mix_datasets(const std::vector<std::vector<T>>& streams,
                            const std::vector<double>& ratios, std::uint64_t seed,
                            std::size_t count) {
  if (streams.size() != ratios.size())
    throw ValidationError("mix_datasets: stream/ratio count mismatch");
  double sum = 0;
  for (double r : ratios) {
    if (r < 0) throw ValidationError("mix_datasets: negative ratio");
    sum += r;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw ValidationError("mix_datasets: ratios must sum to 1");
  for (std::size_t s = 0; s < streams.size(); ++s)
    if (ratios[s] > 0 && streams[s].empty())
      throw ValidationError("mix_datasets: empty stream with nonzero ratio");

  auto rng = make_rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<std::size_t> cursor(streams.size(), 0);
  std::vector<T> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const double x = u(rng);
    double acc = 0;
    std::size_t pick = streams.size() - 1;
    for (std::size_t s = 0; s < streams.size(); ++s) {
      acc += ratios[s];
      if (x < acc) {
        pick = s;
        break;
      }
    }
    while (ratios[pick] <= 0) pick = (pick + 1) % streams.size();
    out.push_back(streams[pick][cursor[pick] % streams[pick].size()]);
    ++cursor[pick];
  }
  return out;
}

}  // namespace swm
