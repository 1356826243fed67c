// swm: command-line surface binding the library modules into reproducible
// pipelines. Every subcommand validates schema versions and exits nonzero
// with a machine-readable error JSON on stderr (2 = validation failure,
// 3 = degenerate-input skip).

#include <CLI11.hpp>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <unordered_set>

#include "swm/swm.hpp"

namespace fs = std::filesystem;
using swm::json;

namespace {

json load_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw swm::ValidationError("cannot open: " + path.string());
  try {
    return json::parse(in, nullptr, true, true);
  } catch (const json::exception& e) {
    throw swm::ValidationError(path.string() + ": " + e.what());
  }
}

void write_json(const fs::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw swm::ValidationError("cannot open for write: " + path.string());
  out << j.dump(2) << "\n";
}

void emit(const json& j, const std::string& out_path) {
  if (out_path.empty())
    std::cout << j.dump(2) << "\n";
  else
    write_json(out_path, j);
}

swm::GeoPoint parse_latlon(const std::string& s) {
  const auto comma = s.find(',');
  if (comma == std::string::npos)
    throw swm::ValidationError("expected '<lat>,<lon>', got '" + s + "'");
  swm::GeoPoint g;
  try {
    g.latitude = std::stod(s.substr(0, comma));
    g.longitude = std::stod(s.substr(comma + 1));
  } catch (const std::exception&) {
    throw swm::ValidationError("expected '<lat>,<lon>', got '" + s + "'");
  }
  g.validate();
  return g;
}

std::vector<fs::path> sorted_pngs(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw swm::ValidationError("not a directory: " + dir.string());
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.path().extension() == ".png") out.push_back(e.path());
  std::sort(out.begin(), out.end());
  if (out.empty()) throw swm::ValidationError("no .png frames in " + dir.string());
  return out;
}

// --- subcommand state ---

struct IndexBuildArgs {
  std::string manifest, output;
} index_build_args;

struct RetrieveArgs {
  std::string idx, traj, output, root, exclude_file;
  int k = 5;
  double threshold = 0.3;
  double radius = 40.0;
  int stride = 8;
  std::vector<std::string> exclude;
} retrieve_args;

struct WarpArgs {
  std::string refs, traj, output, root;
} warp_args;

struct AlignArgs {
  std::string chunks, origin, output;
  bool lsq = false;
} align_args;

struct DatasetArgs {
  std::string routes, idx, output;
  std::uint64_t seed = 0;
  int n = 20, k = 5;
  double radius = 40.0, gap = 3600.0;
  std::string source = "streetview";
} dataset_args;

struct PlanArgs {
  std::string mode = "tf", config, output, start_pano, start_geo, idx;
  long frames = 0;
} plan_args;

struct EvalRotTransArgs {
  std::string pred, gt, output, json_output, id = "seq";
  int chunk_size = 77;
} eval_rt_args;

struct EvalMpsnrArgs {
  std::string pred, gt, masks_pred, masks_gt, output, json_output, id = "seq";
} eval_mpsnr_args;

struct EvalWindowArgs {
  std::string scores, scorer_cmd, output, id = "seq";
  long length = 0;
  long window = 200;
  long stride = 55;
} eval_window_args;

struct SynthArgs {
  std::string output;
  std::uint64_t seed = 0;
  double extent = swm::kDefaultCityExtent;
  int sessions = 2;
  double interval = 10.0, jitter = 0.0;
  int width = 160, height = 96;
} synth_args;

int run_index_build() {
  auto records = swm::read_records_manifest(index_build_args.manifest, true);
  auto index = swm::SpatialIndex::build(std::move(records));
  index.save(index_build_args.output);
  std::cout << json{{"records", index.size()}, {"output", index_build_args.output}}.dump()
            << "\n";
  return 0;
}

int run_retrieve() {
  const fs::path idx_path = retrieve_args.idx;
  const fs::path root = retrieve_args.root.empty() ? idx_path.parent_path()
                                                   : fs::path(retrieve_args.root);
  auto provider = std::make_shared<swm::FileRasterProvider>(root);
  auto index = swm::SpatialIndex::load(idx_path, provider);
  auto trajectory = swm::load_trajectory(retrieve_args.traj);
  std::unordered_set<std::string> exclusion(retrieve_args.exclude.begin(),
                                            retrieve_args.exclude.end());
  if (!retrieve_args.exclude_file.empty()) {
    std::ifstream in(retrieve_args.exclude_file);
    if (!in) throw swm::ValidationError("cannot open: " + retrieve_args.exclude_file);
    std::string line;
    while (std::getline(in, line))
      if (!line.empty()) exclusion.insert(line);
  }
  swm::RetrievalConfig cfg;
  cfg.k = retrieve_args.k;
  cfg.coverage_threshold = retrieve_args.threshold;
  cfg.radius = retrieve_args.radius;
  cfg.grid_stride = retrieve_args.stride;
  const auto result = swm::retrieve_references(index, trajectory, cfg, exclusion);
  emit(swm::retrieval_to_json(result), retrieve_args.output);
  return 0;
}

int run_warp() {
  const fs::path refs_path = warp_args.refs;
  const fs::path root = warp_args.root.empty() ? refs_path.parent_path()
                                               : fs::path(warp_args.root);
  swm::FileRasterProvider provider(root);
  auto refs = swm::retrieval_from_json(load_json(refs_path));
  auto trajectory = swm::load_trajectory(warp_args.traj);
  const auto frames = swm::warp_chunk(trajectory, refs, &provider);
  const fs::path out_dir = warp_args.output;
  fs::create_directories(out_dir / "frames");
  fs::create_directories(out_dir / "validity");
  fs::create_directories(out_dir / "depth");
  json listing = json::array();
  char name[64];
  for (std::size_t f = 0; f < frames.size(); ++f) {
    std::snprintf(name, sizeof name, "frames/frame_%04zu.png", f);
    swm::write_png(out_dir / name, frames[f].image);
    json entry = {{"frame", f}, {"image", name}, {"source_ref_id", frames[f].source_ref_id}};
    std::snprintf(name, sizeof name, "validity/valid_%04zu.png", f);
    swm::write_mask_png(out_dir / name, frames[f].validity);
    entry["validity"] = name;
    std::snprintf(name, sizeof name, "depth/depth_%04zu.swmd", f);
    swm::write_depth(out_dir / name, frames[f].depth);
    entry["depth"] = name;
    listing.push_back(std::move(entry));
  }
  write_json(out_dir / "frames.json", json{{"schema", "swm.warp.v1"}, {"frames", listing}});
  std::cout << json{{"frames", frames.size()}, {"output", out_dir.string()}}.dump() << "\n";
  return 0;
}

int run_align() {
  const swm::GeoPoint origin = parse_latlon(align_args.origin);
  std::ifstream in(align_args.chunks);
  if (!in) throw swm::ValidationError("cannot open: " + align_args.chunks);
  std::vector<swm::PoseChunk> chunks;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    chunks.push_back(swm::posechunk_from_json(json::parse(line)));
  }
  if (chunks.empty()) throw swm::ValidationError("no pose chunks in " + align_args.chunks);

  std::ostringstream out;
  int emitted = 0;
  swm::PoseChunk pending;
  for (std::size_t i = 0; i < chunks.size(); ++i) {
    pending.poses.insert(pending.poses.end(), chunks[i].poses.begin(), chunks[i].poses.end());
    pending.gps.insert(pending.gps.end(), chunks[i].gps.begin(), chunks[i].gps.end());
    try {
      const auto res = align_args.lsq ? swm::align_chunk_lsq(pending, origin)
                                      : swm::align_chunk(pending, origin);
      json j = swm::posechunk_to_json({res.aligned, pending.gps});
      j["metric"] = true;
      j["transform"] = {{"scale", res.transform.scale},
                        {"yaw", res.transform.yaw()},
                        {"translation",
                         {res.transform.translation.x(), res.transform.translation.y(),
                          res.transform.translation.z()}}};
      out << j.dump() << "\n";
      ++emitted;
      pending = swm::PoseChunk{};
    } catch (const swm::DegenerateInputError&) {
      // merged into the next chunk and re-aligned
    }
  }
  if (emitted == 0) throw swm::DegenerateInputError("every chunk too short to align");
  if (align_args.output.empty()) {
    std::cout << out.str();
  } else {
    std::ofstream f(align_args.output);
    if (!f) throw swm::ValidationError("cannot open for write: " + align_args.output);
    f << out.str();
  }
  return 0;
}

int run_dataset_build() {
  auto index = swm::SpatialIndex::load(dataset_args.idx);
  std::ifstream in(dataset_args.routes);
  if (!in) throw swm::ValidationError("cannot open: " + dataset_args.routes);
  std::ostringstream out;
  std::string line;
  std::size_t route_no = 0;
  int emitted = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const json j = json::parse(line);
    swm::require_schema(j, "swm.route.v1");
    const auto ids = j.at("pano_ids").get<std::vector<std::string>>();
    swm::PairingConfig cfg;
    cfg.n_target = dataset_args.n;
    cfg.k_refs = dataset_args.k;
    cfg.radius = dataset_args.radius;
    cfg.min_time_gap = dataset_args.gap;
    cfg.source = swm::source_tag_from(dataset_args.source);
    cfg.seed = dataset_args.seed + route_no;
    std::vector<double> headings;
    for (const auto& id : ids) {
      const auto* rec = index.find(id);
      if (rec) headings.push_back(rec->heading);
    }
    if (int(ids.size()) >= cfg.n_target && !headings.empty()) {
      cfg.yaw_offset = swm::target_yaw_policy(headings, cfg.seed);
      const auto sample = swm::pair_cross_temporal(index, ids, cfg);
      out << swm::sample_to_json(sample, j.value("id", "route-" + std::to_string(route_no)))
                 .dump()
          << "\n";
      ++emitted;
    }
    ++route_no;
  }
  if (emitted == 0) throw swm::DegenerateInputError("no route long enough for N target frames");
  if (dataset_args.output.empty()) {
    std::cout << out.str();
  } else {
    std::ofstream f(dataset_args.output);
    if (!f) throw swm::ValidationError("cannot open for write: " + dataset_args.output);
    f << out.str();
  }
  return 0;
}

int run_plan() {
  swm::ChunkConfig cfg = plan_args.mode == "sf" ? swm::ChunkConfig::self_forcing_defaults()
                                                : swm::ChunkConfig::teacher_forcing_defaults();
  if (!plan_args.config.empty()) {
    json j = load_json(plan_args.config);
    j["mode"] = plan_args.mode;  // the flag wins
    cfg = swm::chunk_config_from_json(j);
  }
  if (plan_args.frames <= 0 || plan_args.frames == cfg.frames) {
    json j = swm::token_plan_to_json(swm::plan_chunk(cfg));
    j["kind"] = "chunk";
    emit(j, plan_args.output);
    return 0;
  }
  std::unique_ptr<swm::SpatialIndex> index;
  if (!plan_args.idx.empty())
    index = std::make_unique<swm::SpatialIndex>(swm::SpatialIndex::load(plan_args.idx));
  swm::RunStart start;
  if (!plan_args.start_geo.empty())
    start = parse_latlon(plan_args.start_geo);
  else
    start = plan_args.start_pano;
  const auto run =
      swm::plan_autoregressive_run(plan_args.frames, cfg, start, index.get());
  emit(swm::run_plan_to_json(run), plan_args.output);
  return 0;
}

void emit_eval(const std::string& id, const std::vector<std::pair<std::string, double>>& rows,
               const std::string& csv_path, const std::string& json_path) {
  std::ostringstream csv;
  csv << "sequence_id,metric,value\n";
  json summary;
  summary["schema"] = "swm.eval.v1";
  summary["kind"] = "result";
  summary["id"] = id;
  for (const auto& [metric, value] : rows) {
    if (std::isinf(value)) {
      csv << id << "," << metric << ",inf\n";
      summary[metric] = "inf";
    } else {
      csv << id << "," << metric << "," << value << "\n";
      summary[metric] = value;
    }
  }
  if (csv_path.empty()) {
    std::cout << csv.str();
  } else {
    std::ofstream f(csv_path);
    if (!f) throw swm::ValidationError("cannot open for write: " + csv_path);
    f << csv.str();
  }
  if (!json_path.empty()) write_json(json_path, summary);
}

int run_eval_rot_trans() {
  swm::TrajectoryEval eval;
  eval.predicted = swm::load_trajectory(eval_rt_args.pred);
  eval.ground_truth = swm::load_trajectory(eval_rt_args.gt);
  eval.chunk_size = eval_rt_args.chunk_size;
  const double rot = swm::rot_err(eval);
  const auto trans = swm::trans_err(eval);
  emit_eval(eval_rt_args.id,
            {{"rot_err", rot},
             {"trans_err", trans.value},
             {"trans_chunks_skipped", double(trans.chunks_skipped)}},
            eval_rt_args.output, eval_rt_args.json_output);
  return 0;
}

int run_eval_mpsnr() {
  const auto pred_paths = sorted_pngs(eval_mpsnr_args.pred);
  const auto gt_paths = sorted_pngs(eval_mpsnr_args.gt);
  if (pred_paths.size() != gt_paths.size())
    throw swm::ValidationError("mpsnr: frame count mismatch between --pred and --gt");
  std::vector<swm::ImageU8> pred, gt;
  for (const auto& p : pred_paths) pred.push_back(swm::read_png(p));
  for (const auto& p : gt_paths) gt.push_back(swm::read_png(p));
  swm::StaticMaskSet masks;
  auto load_masks = [&](const std::string& dir, std::vector<swm::BoolMask>& out) {
    if (dir.empty()) return;
    const auto paths = sorted_pngs(dir);
    if (paths.size() != pred.size())
      throw swm::ValidationError("mpsnr: mask count does not match frame count");
    for (const auto& p : paths) out.push_back(swm::read_mask_png(p));
  };
  load_masks(eval_mpsnr_args.masks_pred, masks.predicted);
  load_masks(eval_mpsnr_args.masks_gt, masks.ground_truth);
  const auto res = swm::masked_psnr(pred, gt, masks);
  emit_eval(eval_mpsnr_args.id,
            {{"mpsnr", res.psnr_db}, {"frames_skipped", double(res.frames_skipped)}},
            eval_mpsnr_args.output, eval_mpsnr_args.json_output);
  return 0;
}

int run_eval_window() {
  std::vector<double> scores;
  if (!eval_window_args.scores.empty()) {
    std::ifstream in(eval_window_args.scores);
    if (!in) throw swm::ValidationError("cannot open: " + eval_window_args.scores);
    double v;
    while (in >> v) scores.push_back(v);
    if (scores.empty()) throw swm::ValidationError("no per-frame scores in file");
    if (eval_window_args.length == 0) eval_window_args.length = long(scores.size());
  }
  if (eval_window_args.length <= 0)
    throw swm::ValidationError("window eval: --length required without --scores");

  swm::WindowScorer scorer;
  if (!scores.empty() && eval_window_args.scorer_cmd.empty()) {
    scorer = swm::mean_window_scorer(scores);
  } else if (!eval_window_args.scorer_cmd.empty()) {
    // Process-level scorer contract: the command receives a window manifest
    // path and writes one float to stdout.
    scorer = [&](std::size_t start, std::size_t length) {
      const fs::path manifest =
          fs::temp_directory_path() / ("swm_window_" + std::to_string(start) + ".json");
      write_json(manifest, json{{"schema", "swm.eval.v1"},
                                {"kind", "window"},
                                {"start", start},
                                {"length", length}});
      const std::string cmd = eval_window_args.scorer_cmd + " " + manifest.string();
      FILE* pipe = popen(cmd.c_str(), "r");
      if (!pipe) throw swm::ValidationError("cannot run scorer: " + cmd);
      double value = 0;
      const int got = std::fscanf(pipe, "%lf", &value);
      const int rc = pclose(pipe);
      fs::remove(manifest);
      if (got != 1 || rc != 0)
        throw swm::ValidationError("scorer failed for window at " + std::to_string(start));
      return value;
    };
  } else {
    throw swm::ValidationError("window eval: provide --scores or --scorer-cmd");
  }

  const auto windows = swm::sliding_window_eval(std::size_t(eval_window_args.length),
                                                std::size_t(eval_window_args.window),
                                                std::size_t(eval_window_args.stride), scorer);
  std::ostringstream csv;
  csv << "sequence_id,window_start,score\n";
  for (const auto& [start, score] : windows)
    csv << eval_window_args.id << "," << start << "," << score << "\n";
  if (eval_window_args.output.empty()) {
    std::cout << csv.str();
  } else {
    std::ofstream f(eval_window_args.output);
    if (!f) throw swm::ValidationError("cannot open for write: " + eval_window_args.output);
    f << csv.str();
  }
  return 0;
}

int run_synthcity_gen() {
  const fs::path out_dir = synth_args.output;
  fs::create_directories(out_dir / "rasters");
  auto city = swm::generate_city(synth_args.seed, synth_args.extent);
  swm::StreetViewConfig cfg;
  cfg.seed = synth_args.seed;
  cfg.sessions = synth_args.sessions;
  cfg.interval = synth_args.interval;
  cfg.jitter = synth_args.jitter;
  cfg.intrinsics = swm::intrinsics_from_fov(swm::kPi / 2.0, synth_args.width, synth_args.height);
  auto db = swm::sample_streetview_db(city, cfg);
  const swm::SynthRasterProvider provider(city, db.records);
  for (auto& rec : db.records) {
    for (auto& view : rec.views) {
      swm::materialize_view(view, &provider);
      const std::string stem = rec.id + "_v" + std::to_string(view.yaw_index);
      view.image_path = "rasters/" + stem + ".png";
      view.depth_path = "rasters/" + stem + ".swmd";
      swm::write_png(out_dir / view.image_path, *view.image);
      swm::write_depth(out_dir / view.depth_path, *view.depth);
    }
  }
  swm::write_records_manifest(out_dir / "manifest.jsonl", db.records);
  std::ofstream routes(out_dir / "routes.jsonl");
  for (std::size_t r = 0; r < db.routes.size(); ++r)
    routes << json{{"schema", "swm.route.v1"},
                   {"id", "route-" + std::to_string(r)},
                   {"pano_ids", db.routes[r]}}
                  .dump()
           << "\n";
  write_json(out_dir / "city.json",
             json{{"schema", "swm.city.v1"},
                  {"seed", synth_args.seed},
                  {"extent", synth_args.extent},
                  {"sessions", synth_args.sessions},
                  {"roads", city.roads.size()},
                  {"buildings", city.buildings.size()},
                  {"transients", city.transients.size()},
                  {"records", db.records.size()}});
  std::cout << json{{"records", db.records.size()}, {"output", out_dir.string()}}.dump() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"swm: retrieval-grounded street-view world-model toolkit"};
  app.name("swm");
  app.require_subcommand(1);

  auto* index = app.add_subcommand("index", "Spatial index over panorama manifests");
  auto* index_build = index->add_subcommand("build", "Build and persist the spatial index");
  index_build->add_option("manifest", index_build_args.manifest, "Panorama manifest (JSONL)")
      ->required();
  index_build->add_option("-o,--output", index_build_args.output, "Output index file")
      ->required();

  auto* retrieve = app.add_subcommand("retrieve", "Two-stage street-view reference retrieval");
  retrieve->add_option("--idx", retrieve_args.idx, "Index file")->required();
  retrieve->add_option("--traj", retrieve_args.traj, "Trajectory JSON")->required();
  retrieve->add_option("-K", retrieve_args.k, "Max references");
  retrieve->add_option("--threshold", retrieve_args.threshold, "Coverage threshold [0,1]");
  retrieve->add_option("--radius", retrieve_args.radius, "Stage-1 candidate radius (m)");
  retrieve->add_option("--stride", retrieve_args.stride, "Coverage grid stride");
  retrieve->add_option("--exclude", retrieve_args.exclude, "Panorama id to exclude");
  retrieve->add_option("--exclude-file", retrieve_args.exclude_file,
                       "File with one panorama id per line");
  retrieve->add_option("--root", retrieve_args.root, "Raster root (default: index directory)");
  retrieve->add_option("-o,--output", retrieve_args.output, "Output JSON (default: stdout)");

  auto* warp = app.add_subcommand("warp", "Forward-splat references along a trajectory");
  warp->add_option("--refs", warp_args.refs, "Retrieval result JSON")->required();
  warp->add_option("--traj", warp_args.traj, "Trajectory JSON")->required();
  warp->add_option("--root", warp_args.root, "Raster root (default: refs directory)");
  warp->add_option("-o,--output", warp_args.output, "Output directory")->required();

  auto* align = app.add_subcommand("align", "GPS similarity alignment of pose chunks");
  align->add_option("--chunks", align_args.chunks, "Pose-chunk manifest (JSONL)")->required();
  align->add_option("--origin", align_args.origin, "Local origin '<lat>,<lon>'")->required();
  align->add_flag("--lsq", align_args.lsq, "Least-squares over all GPS points");
  align->add_option("-o,--output", align_args.output, "Output manifest (default: stdout)");

  auto* dataset = app.add_subcommand("dataset", "Training-pair construction");
  auto* dataset_build = dataset->add_subcommand("build", "Build cross-temporal training samples");
  dataset_build->add_option("--routes", dataset_args.routes, "Route manifest (JSONL)")->required();
  dataset_build->add_option("--idx", dataset_args.idx, "Index file")->required();
  dataset_build->add_option("--seed", dataset_args.seed, "Base RNG seed")->required();
  dataset_build->add_option("--n", dataset_args.n, "Target keyframes per sample");
  dataset_build->add_option("--k", dataset_args.k, "Reference budget");
  dataset_build->add_option("--radius", dataset_args.radius, "Reference search radius (m)");
  dataset_build->add_option("--gap", dataset_args.gap, "Cross-temporal gap (s)");
  dataset_build->add_option("--source", dataset_args.source,
                            "Source tag: streetview|synthetic|drive-video");
  dataset_build->add_option("-o,--output", dataset_args.output,
                            "Output sample manifest (default: stdout)");

  auto* plan = app.add_subcommand("plan", "Token/position plans and run plans");
  plan->add_option("--mode", plan_args.mode, "tf|sf")->check(CLI::IsMember({"tf", "sf"}));
  plan->add_option("--frames", plan_args.frames,
                   "Total frames (omit or equal to chunk length for one chunk plan)");
  plan->add_option("--config", plan_args.config, "Chunk config JSON file");
  plan->add_option("--start-pano", plan_args.start_pano, "Run start: panorama id");
  plan->add_option("--start-geo", plan_args.start_geo, "Run start: '<lat>,<lon>'");
  plan->add_option("--idx", plan_args.idx, "Index file (for --start-geo buffer planning)");
  plan->add_option("-o,--output", plan_args.output, "Output JSON (default: stdout)");

  auto* eval = app.add_subcommand("eval", "Trajectory and image metrics");
  auto* eval_rt = eval->add_subcommand("rot-trans", "Chunk-relative RotErr / TransErr");
  eval_rt->add_option("--pred", eval_rt_args.pred, "Predicted trajectory JSON")->required();
  eval_rt->add_option("--gt", eval_rt_args.gt, "Ground-truth trajectory JSON")->required();
  eval_rt->add_option("--chunk-size", eval_rt_args.chunk_size, "Frames per metric chunk");
  eval_rt->add_option("--id", eval_rt_args.id, "Sequence id for the CSV");
  eval_rt->add_option("-o,--output", eval_rt_args.output, "CSV output (default: stdout)");
  eval_rt->add_option("--json", eval_rt_args.json_output, "JSON summary output");

  auto* eval_mpsnr = eval->add_subcommand("mpsnr", "Masked PSNR over static regions");
  eval_mpsnr->add_option("--pred", eval_mpsnr_args.pred, "Directory of predicted frames (PNG)")
      ->required();
  eval_mpsnr->add_option("--gt", eval_mpsnr_args.gt, "Directory of ground-truth frames (PNG)")
      ->required();
  eval_mpsnr->add_option("--masks-pred", eval_mpsnr_args.masks_pred,
                         "Directory of predicted dynamic masks (PNG, white = dynamic)");
  eval_mpsnr->add_option("--masks-gt", eval_mpsnr_args.masks_gt,
                         "Directory of ground-truth dynamic masks");
  eval_mpsnr->add_option("--id", eval_mpsnr_args.id, "Sequence id for the CSV");
  eval_mpsnr->add_option("-o,--output", eval_mpsnr_args.output, "CSV output (default: stdout)");
  eval_mpsnr->add_option("--json", eval_mpsnr_args.json_output, "JSON summary output");

  auto* eval_window = eval->add_subcommand("window", "Sliding-window harness (Fig. 9 style)");
  eval_window->add_option("--length", eval_window_args.length, "Sequence length in frames");
  eval_window->add_option("--window", eval_window_args.window, "Window size");
  eval_window->add_option("--stride", eval_window_args.stride, "Window stride");
  eval_window->add_option("--scores", eval_window_args.scores,
                          "Per-frame score file (one value per line); scorer = window mean");
  eval_window->add_option("--scorer-cmd", eval_window_args.scorer_cmd,
                          "External scorer: receives a window manifest path, prints one float");
  eval_window->add_option("--id", eval_window_args.id, "Sequence id for the CSV");
  eval_window->add_option("-o,--output", eval_window_args.output, "CSV output (default: stdout)");

  auto* synth = app.add_subcommand("synthcity", "Procedural oracle city");
  auto* synth_gen = synth->add_subcommand("gen", "Generate a city street-view dataset");
  synth_gen->add_option("--seed", synth_args.seed, "City seed")->required();
  synth_gen->add_option("--extent", synth_args.extent, "City extent (m)");
  synth_gen->add_option("--sessions", synth_args.sessions, "Capture sessions");
  synth_gen->add_option("--interval", synth_args.interval, "Sampling interval (m)");
  synth_gen->add_option("--jitter", synth_args.jitter, "Interval jitter (m)");
  synth_gen->add_option("--width", synth_args.width, "View width (px)");
  synth_gen->add_option("--height", synth_args.height, "View height (px)");
  synth_gen->add_option("-o,--output", synth_args.output, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    std::cerr << json{{"error", {{"type", "validation"}, {"message", e.what()}}}}.dump() << "\n";
    return 2;
  }

  try {
    if (index_build->parsed()) return run_index_build();
    if (retrieve->parsed()) return run_retrieve();
    if (warp->parsed()) return run_warp();
    if (align->parsed()) return run_align();
    if (dataset_build->parsed()) return run_dataset_build();
    if (plan->parsed()) return run_plan();
    if (eval_rt->parsed()) return run_eval_rot_trans();
    if (eval_mpsnr->parsed()) return run_eval_mpsnr();
    if (eval_window->parsed()) return run_eval_window();
    if (synth_gen->parsed()) return run_synthcity_gen();
    std::cerr << json{{"error",
                       {{"type", "validation"}, {"message", "missing subcommand"}}}}
                     .dump()
              << "\n";
    return 2;
  } catch (const swm::DegenerateInputError& e) {
    std::cerr << json{{"error", {{"type", "degenerate"}, {"message", e.what()}}}}.dump() << "\n";
    return 3;
  } catch (const swm::ValidationError& e) {
    std::cerr << json{{"error", {{"type", "validation"}, {"message", e.what()}}}}.dump() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << json{{"error", {{"type", "internal"}, {"message", e.what()}}}}.dump() << "\n";
    return 1;
  }
}
