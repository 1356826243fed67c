#pragma once

#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "swm/alignment.hpp"
#include "swm/dataset.hpp"
#include "swm/index_types.hpp"
#include "swm/metrics.hpp"
#include "swm/planner.hpp"

namespace swm {

using nlohmann::json;

inline void require_schema(const json& j, const std::string& expected) {
  const std::string got = j.value("schema", "");
  if (got != expected)
    throw ValidationError("expected schema " + expected + ", got " +
                          (got.empty() ? "<missing>" : got));
}

// --- primitive codecs ---

/// Camera-to-world RDF pose as 12 row-major floats (3x4, rotation|translation).
inline json pose_to_json(const CameraPose& p) {
  json a = json::array();
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) a.push_back(p.rotation(r, c));
    a.push_back(p.translation(r));
  }
  return a;
}

inline CameraPose pose_from_json(const json& a) {
  if (!a.is_array() || a.size() != 12) throw ValidationError("pose: expected 12 floats");
  CameraPose p;
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) p.rotation(r, c) = a[std::size_t(r * 4 + c)].get<double>();
    p.translation(r) = a[std::size_t(r * 4 + 3)].get<double>();
  }
  p.validate(1e-6);
  return p;
}

inline json intrinsics_to_json(const CameraIntrinsics& k) {
  return {{"fx", k.fx}, {"fy", k.fy}, {"cx", k.cx},
          {"cy", k.cy}, {"width", k.width}, {"height", k.height}};
}

inline CameraIntrinsics intrinsics_from_json(const json& j) {
  CameraIntrinsics k;
  k.fx = j.at("fx").get<double>();
  k.fy = j.at("fy").get<double>();
  k.cx = j.at("cx").get<double>();
  k.cy = j.at("cy").get<double>();
  k.width = j.at("width").get<int>();
  k.height = j.at("height").get<int>();
  k.validate();
  return k;
}

inline json geo_to_json(const GeoPoint& g) {
  json j = {{"lat", g.latitude}, {"lon", g.longitude}};
  if (g.altitude) j["alt"] = *g.altitude;
  return j;
}

inline GeoPoint geo_from_json(const json& j) {
  GeoPoint g;
  g.latitude = j.at("lat").get<double>();
  g.longitude = j.at("lon").get<double>();
  if (j.contains("alt")) g.altitude = j.at("alt").get<double>();
  g.validate();
  return g;
}

// --- views and panorama records ("swm.view.v1" / "swm.pano.v1") ---

inline json view_to_json(const PinholeView& v) {
  json j;
  j["schema"] = "swm.view.v1";
  j["kind"] = "view";
  j["id"] = v.id();
  j["parent_id"] = v.parent_id;
  j["yaw_index"] = v.yaw_index;
  j["intrinsics"] = intrinsics_to_json(v.intrinsics);
  j["pose"] = pose_to_json(v.pose);
  j["paths"] = {{"image", v.image_path}, {"depth", v.depth_path}};
  return j;
}

inline PinholeView view_from_json(const json& j) {
  require_schema(j, "swm.view.v1");
  PinholeView v;
  v.parent_id = j.at("parent_id").get<std::string>();
  v.yaw_index = j.at("yaw_index").get<int>();
  v.intrinsics = intrinsics_from_json(j.at("intrinsics"));
  v.pose = pose_from_json(j.at("pose"));
  v.image_path = j.at("paths").value("image", "");
  v.depth_path = j.at("paths").value("depth", "");
  return v;
}

inline json pano_to_json(const PanoramaRecord& r) {
  json j;
  j["schema"] = "swm.pano.v1";
  j["kind"] = "pano";
  j["id"] = r.id;
  j["geo"] = geo_to_json(r.geo);
  j["local_position"] = {r.local_position.x(), r.local_position.y(), r.local_position.z()};
  j["timestamp"] = r.timestamp;
  j["session_id"] = r.session_id;
  j["heading"] = r.heading;
  return j;
}

/// Writes one pano line followed by its 8 view lines, per record.
inline void write_records_manifest(const std::filesystem::path& path,
                                   const std::vector<PanoramaRecord>& records) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot open for write: " + path.string());
  for (const auto& r : records) {
    out << pano_to_json(r).dump() << "\n";
    for (const auto& v : r.views) out << view_to_json(v).dump() << "\n";
  }
}

inline std::vector<PanoramaRecord> read_records_manifest(const std::filesystem::path& path,
                                                         bool validate_paths = false) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open: " + path.string());
  const std::filesystem::path root = path.parent_path();
  std::vector<PanoramaRecord> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw ValidationError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
    const std::string kind = j.value("kind", "");
    if (kind == "pano") {
      require_schema(j, "swm.pano.v1");
      PanoramaRecord r;
      r.id = j.at("id").get<std::string>();
      r.geo = geo_from_json(j.at("geo"));
      const auto& lp = j.at("local_position");
      r.local_position = {lp[0].get<double>(), lp[1].get<double>(), lp[2].get<double>()};
      r.timestamp = j.at("timestamp").get<double>();
      r.session_id = j.at("session_id").get<std::string>();
      r.heading = j.at("heading").get<double>();
      records.push_back(std::move(r));
    } else if (kind == "view") {
      PinholeView v = view_from_json(j);
      if (records.empty() || records.back().id != v.parent_id)
        throw ValidationError(path.string() + ":" + std::to_string(line_no) +
                              ": view before its pano line");
      if (validate_paths) {
        for (const std::string& p : {v.image_path, v.depth_path})
          if (!p.empty() && !std::filesystem::exists(root / p))
            throw ValidationError("manifest references missing file: " + p);
      }
      records.back().views.push_back(std::move(v));
    } else {
      throw ValidationError(path.string() + ":" + std::to_string(line_no) +
                            ": unknown record kind '" + kind + "'");
    }
  }
  for (const auto& r : records) r.validate();
  return records;
}

// --- trajectories ("swm.traj.v1") ---

inline void save_trajectory(const std::filesystem::path& path,
                            const std::vector<CameraPose>& poses) {
  json j;
  j["schema"] = "swm.traj.v1";
  json arr = json::array();
  for (const auto& p : poses) arr.push_back(pose_to_json(p));
  j["poses"] = std::move(arr);
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot open for write: " + path.string());
  out << j.dump(2) << "\n";
}

inline std::vector<CameraPose> load_trajectory(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open: " + path.string());
  json j = json::parse(in, nullptr, true, true);
  require_schema(j, "swm.traj.v1");
  std::vector<CameraPose> poses;
  for (const auto& p : j.at("poses")) poses.push_back(pose_from_json(p));
  if (poses.empty()) throw ValidationError("trajectory: no poses");
  return poses;
}

// --- retrieval results ("swm.retrieval.v1") ---

inline json retrieval_to_json(const RetrievalResult& r) {
  json j;
  j["schema"] = "swm.retrieval.v1";
  json entries = json::array();
  for (const auto& e : r.entries)
    entries.push_back(
        {{"view", view_to_json(e.view)}, {"coverage", e.coverage}, {"distance", e.distance}});
  j["entries"] = std::move(entries);
  return j;
}

inline RetrievalResult retrieval_from_json(const json& j) {
  require_schema(j, "swm.retrieval.v1");
  RetrievalResult r;
  for (const auto& e : j.at("entries"))
    r.entries.push_back({view_from_json(e.at("view")), e.at("coverage").get<double>(),
                         e.at("distance").get<double>()});
  return r;
}

// --- training samples ("swm.sample.v1") ---

inline json sample_to_json(const TrainingSample& s, const std::string& id) {
  json j;
  j["schema"] = "swm.sample.v1";
  j["kind"] = "sample";
  j["id"] = id;
  j["source"] = to_string(s.source);
  json target = json::array();
  for (const auto& v : s.target) target.push_back(view_to_json(v));
  j["target"] = std::move(target);
  json refs = json::array();
  for (const auto& v : s.references) refs.push_back(view_to_json(v));
  j["references"] = std::move(refs);
  j["caption"] = s.caption;
  j["camera_action"] = s.camera_action;
  j["dropout"] = {{"text", s.dropout.text},
                  {"refs", s.dropout.refs},
                  {"warp", s.dropout.warp},
                  {"history_noise", s.dropout.history_noise}};
  j["history_noise_sigma"] = s.history_noise_sigma;
  j["yaw_offset"] = s.yaw_offset;
  return j;
}

inline TrainingSample sample_from_json(const json& j) {
  require_schema(j, "swm.sample.v1");
  TrainingSample s;
  s.source = source_tag_from(j.at("source").get<std::string>());
  for (const auto& v : j.at("target")) s.target.push_back(view_from_json(v));
  for (const auto& v : j.at("references")) s.references.push_back(view_from_json(v));
  s.caption = j.value("caption", "");
  s.camera_action = j.value("camera_action", "");
  const auto& d = j.at("dropout");
  s.dropout = {d.at("text").get<bool>(), d.at("refs").get<bool>(), d.at("warp").get<bool>(),
               d.at("history_noise").get<bool>()};
  s.history_noise_sigma = j.value("history_noise_sigma", 0.1);
  s.yaw_offset = j.value("yaw_offset", 0.0);
  return s;
}

// --- pose chunks for alignment ("swm.posechunk.v1") ---

inline json posechunk_to_json(const PoseChunk& c) {
  json j;
  j["schema"] = "swm.posechunk.v1";
  json poses = json::array();
  for (const auto& p : c.poses) poses.push_back(pose_to_json(p));
  j["poses"] = std::move(poses);
  json gps = json::array();
  for (const auto& g : c.gps) gps.push_back(geo_to_json(g));
  j["gps"] = std::move(gps);
  return j;
}

inline PoseChunk posechunk_from_json(const json& j) {
  require_schema(j, "swm.posechunk.v1");
  PoseChunk c;
  for (const auto& p : j.at("poses")) c.poses.push_back(pose_from_json(p));
  for (const auto& g : j.at("gps")) c.gps.push_back(geo_from_json(g));
  c.validate();
  return c;
}

// --- run plans ("swm.plan.v1", kind "run") ---

inline json run_plan_to_json(const RunPlan& run) {
  json j;
  j["schema"] = "swm.plan.v1";
  j["kind"] = "run";
  j["total_frames"] = run.total_frames;
  j["config"] = {{"frames", run.config.frames},
                 {"latents", run.config.latents},
                 {"history", run.config.history},
                 {"references", run.config.references},
                 {"reference_gap", run.config.reference_gap},
                 {"reference_spacing", run.config.reference_spacing},
                 {"lookahead_offset", run.config.lookahead_offset},
                 {"mode", to_string(run.config.mode)},
                 {"grouping", to_string(run.config.grouping)}};
  json chunks = json::array();
  for (const auto& c : run.chunks) {
    json cj;
    cj["index"] = c.index;
    cj["buffer"] = c.buffer;
    cj["frame_begin"] = c.frame_begin;
    cj["frame_end"] = c.frame_end;
    cj["generated_frames"] = c.generated_frames;
    cj["latent_count"] = c.latent_count;
    cj["history"] = {
        {"kind", c.history.kind == HistorySource::Kind::start_frame_replicated
                     ? "start_frame_replicated"
                     : "previous_chunk_tail"},
        {"chunk", c.history.chunk},
        {"latent_begin", c.history.latent_begin},
        {"count", c.history.count}};
    if (!c.start_pano_id.empty()) cj["start_pano_id"] = c.start_pano_id;
    cj["plan"] = token_plan_to_json(c.plan);
    if (!c.relative_extrinsics.empty()) {
      json rel = json::array();
      for (const auto& p : c.relative_extrinsics) rel.push_back(pose_to_json(p));
      cj["relative_extrinsics"] = std::move(rel);
    }
    chunks.push_back(std::move(cj));
  }
  j["chunks"] = std::move(chunks);
  return j;
}

inline ChunkConfig chunk_config_from_json(const json& j) {
  ChunkConfig cfg;
  cfg.frames = j.value("frames", cfg.frames);
  cfg.latents = j.value("latents", cfg.latents);
  cfg.history = j.value("history", cfg.history);
  cfg.references = j.value("references", cfg.references);
  cfg.reference_gap = j.value("reference_gap", cfg.reference_gap);
  cfg.reference_spacing = j.value("reference_spacing", cfg.reference_spacing);
  cfg.lookahead_offset = j.value("lookahead_offset", cfg.lookahead_offset);
  if (j.contains("mode"))
    cfg.mode = j.at("mode").get<std::string>() == "sf" ? PlanMode::self_forcing
                                                       : PlanMode::teacher_forcing;
  if (j.contains("grouping"))
    cfg.grouping = j.at("grouping").get<std::string>() == "uniform" ? LatentGrouping::uniform
                                                                    : LatentGrouping::causal;
  return cfg;
}

// --- benchmark sequences ("swm.eval.v1", kind "sequence") ---

inline json sequence_spec_to_json(const SequenceSpec& s) {
  json j;
  j["schema"] = "swm.eval.v1";
  j["kind"] = "sequence";
  j["id"] = s.id;
  j["frames"] = s.frames;
  j["length_m"] = s.length_m;
  j["route"] = s.route;
  j["exclusion"] = s.exclusion;
  json traj = json::array();
  for (const auto& p : s.trajectory) traj.push_back(pose_to_json(p));
  j["trajectory"] = std::move(traj);
  return j;
}

inline SequenceSpec sequence_spec_from_json(const json& j) {
  require_schema(j, "swm.eval.v1");
  SequenceSpec s;
  s.id = j.at("id").get<std::string>();
  s.frames = j.at("frames").get<int>();
  s.length_m = j.value("length_m", 0.0);
  s.route = j.at("route").get<std::vector<std::string>>();
  s.exclusion = j.at("exclusion").get<std::vector<std::string>>();
  for (const auto& p : j.at("trajectory")) s.trajectory.push_back(pose_from_json(p));
  return s;
}

}  // namespace swm
