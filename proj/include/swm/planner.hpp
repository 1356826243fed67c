#pragma once

#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "swm/grouping.hpp"
#include "swm/index.hpp"

namespace swm {

enum class PlanMode { teacher_forcing, self_forcing };

inline std::string to_string(PlanMode m) {
  return m == PlanMode::teacher_forcing ? "tf" : "sf";
}

/// Per-chunk conditioning geometry: frame/latent budget, history depth,
/// reference budget and spacing, and the lookahead sink offset.
struct ChunkConfig {
  int frames = 77;           // T, pixel frames per chunk
  int latents = 20;          // L, latents per chunk
  int history = 5;           // H, history latents carried from the previous chunk
  int references = 5;        // K
  int reference_gap = 50;    // G, temporal gap separating references
  int reference_spacing = 5; // delta_ref, inter-reference spacing
  int lookahead_offset = 5;  // delta_VL, sink offset beyond the chunk
  PlanMode mode = PlanMode::teacher_forcing;
  LatentGrouping grouping = LatentGrouping::causal;

  void validate() const {
    if (latents < 1) throw ValidationError("chunk config: violated L >= 1");
    if (history < 0 || history > latents)
      throw ValidationError("chunk config: violated H <= L");
    if (lookahead_offset < 1) throw ValidationError("chunk config: violated delta_VL >= 1");
    if (reference_gap <= lookahead_offset)
      throw ValidationError("chunk config: violated G > delta_VL");
    if (references < 0) throw ValidationError("chunk config: violated K >= 0");
    if (references > 0 && reference_spacing < 1)
      throw ValidationError("chunk config: violated delta_ref >= 1");
    if (frames != frames_for_latents(grouping, latents))
      throw ValidationError("chunk config: violated L consistent with T under " +
                            to_string(grouping) + " grouping");
  }

  /// Paper defaults for the teacher-forcing configuration
  /// (T=77 causal -> L=20, H=5, K=5, G=50, delta_VL=5).
  static ChunkConfig teacher_forcing_defaults() { return {}; }

  /// Self-forcing configuration: 12-frame chunks, uniform grouping -> L=3,
  /// H=3, K=1.
  static ChunkConfig self_forcing_defaults() {
    ChunkConfig cfg;
    cfg.frames = 12;
    cfg.latents = 3;
    cfg.history = 3;
    cfg.references = 1;
    cfg.mode = PlanMode::self_forcing;
    cfg.grouping = LatentGrouping::uniform;
    return cfg;
  }
};

enum class TokenKind { history, target, sink, reference };

inline std::string to_string(TokenKind k) {
  switch (k) {
    case TokenKind::history: return "history";
    case TokenKind::target: return "target";
    case TokenKind::sink: return "sink";
    case TokenKind::reference: return "reference";
  }
  return "target";
}

struct TokenDesc {
  TokenKind kind = TokenKind::target;
  int sequence_slot = 0;
  long rope_position = 0;
};

/// Exact token layout of one chunk: sequence order, RoPE temporal
/// positions, and the attention visibility relation. RoPE positions are
/// abstract integers consumed by a model runtime; the plan carries no
/// embedding math.
struct TokenPlan {
  PlanMode mode = PlanMode::teacher_forcing;
  std::vector<TokenDesc> tokens;              // ordered by sequence_slot
  std::vector<std::vector<bool>> visibility;  // visibility[i][j]: token i attends to j

  std::vector<TokenDesc> tokens_of(TokenKind k) const {
    std::vector<TokenDesc> out;
    for (const auto& t : tokens)
      if (t.kind == k) out.push_back(t);
    return out;
  }
};

namespace detail {

/// Eq. 1 + reference positions: history 1..H, target H+1..H+L, sink at
/// H+L+delta_VL, reference k at H+L+G+k*delta_ref.
inline long rope_position_of(const ChunkConfig& cfg, TokenKind kind, int index_within_kind) {
  const long h = cfg.history, l = cfg.latents;
  switch (kind) {
    case TokenKind::history: return 1 + index_within_kind;
    case TokenKind::target: return h + 1 + index_within_kind;
    case TokenKind::sink: return h + l + cfg.lookahead_offset;
    case TokenKind::reference:
      return h + l + cfg.reference_gap + long(index_within_kind) * cfg.reference_spacing;
  }
  return 0;
}

inline TokenPlan assemble_plan(const ChunkConfig& cfg, const std::vector<TokenKind>& kind_order,
                               bool causal_visibility) {
  TokenPlan plan;
  plan.mode = cfg.mode;
  std::array<int, 4> counter{0, 0, 0, 0};
  int slot = 0;
  for (TokenKind kind : kind_order) {
    const int count = kind == TokenKind::history   ? cfg.history
                      : kind == TokenKind::target  ? cfg.latents
                      : kind == TokenKind::sink    ? 1
                                                   : cfg.references;
    for (int i = 0; i < count; ++i) {
      int& idx = counter[std::size_t(kind)];
      plan.tokens.push_back({kind, slot++, rope_position_of(cfg, kind, idx)});
      ++idx;
    }
  }
  const std::size_t n = plan.tokens.size();
  plan.visibility.assign(n, std::vector<bool>(n, true));
  if (causal_visibility)
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) plan.visibility[i][j] = false;
  return plan;
}

}  // namespace detail

/// Teacher-forcing layout: [history][target][sink][references] with full
/// bidirectional visibility inside the chunk.
inline TokenPlan plan_tf_chunk(const ChunkConfig& cfg) {
  if (cfg.mode != PlanMode::teacher_forcing)
    throw ValidationError("plan_tf_chunk: config mode is not teacher_forcing");
  cfg.validate();
  return detail::assemble_plan(
      cfg, {TokenKind::history, TokenKind::target, TokenKind::sink, TokenKind::reference}, false);
}

/// Self-forcing layout: sink and references are prepended so the causal
/// mask (token i sees j <= i) keeps them visible to every generated token,
/// while their RoPE positions stay at the same future/offset values as in
/// the TF plan — token order and temporal position are decoupled.
inline TokenPlan plan_sf_chunk(const ChunkConfig& cfg) {
  if (cfg.mode != PlanMode::self_forcing)
    throw ValidationError("plan_sf_chunk: config mode is not self_forcing");
  cfg.validate();
  return detail::assemble_plan(
      cfg, {TokenKind::sink, TokenKind::reference, TokenKind::history, TokenKind::target}, true);
}

inline TokenPlan plan_chunk(const ChunkConfig& cfg) {
  return cfg.mode == PlanMode::teacher_forcing ? plan_tf_chunk(cfg) : plan_sf_chunk(cfg);
}

/// Uniform integer lookahead offset for training, deterministic per seed.
inline int sample_train_lookahead_offset(std::uint64_t seed, int lo = 1, int hi = 10) {
  if (lo < 1 || hi < lo) throw ValidationError("lookahead offset range empty or invalid");
  auto rng = make_rng(seed);
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

/// Where chunk 0 gets its history latents.
struct HistorySource {
  enum class Kind { start_frame_replicated, previous_chunk_tail };
  Kind kind = Kind::start_frame_replicated;
  int chunk = -1;         // producing chunk for previous_chunk_tail
  int latent_begin = 0;   // L - H
  int count = 0;          // H
};

/// One autoregressive generation unit. Buffer chunks navigate from the
/// nearest panorama to an off-database start point and are discarded from
/// the output.
struct ChunkSpec {
  int index = 0;
  bool buffer = false;
  long frame_begin = 0;  // kept output frames [frame_begin, frame_end)
  long frame_end = 0;
  int generated_frames = 0;  // always the full chunk length T
  int latent_count = 0;
  HistorySource history;
  TokenPlan plan;
  std::string start_pano_id;  // buffer chunks: panorama used as the start frame
  std::vector<CameraPose> relative_extrinsics;  // poses relative to the chunk's first frame
};

struct RunPlan {
  ChunkConfig config;
  long total_frames = 0;
  std::vector<ChunkSpec> chunks;

  long surviving_frames() const {
    long n = 0;
    for (const auto& c : chunks) n += c.frame_end - c.frame_begin;
    return n;
  }
};

using RunStart = std::variant<std::string, GeoPoint>;

/// Splits a run into chunks of T frames, wires history to the previous
/// chunk's tail latents, prepends a discarded buffer chunk when the start
/// point is not on a panorama, and re-expresses trajectory extrinsics
/// relative to each chunk's first frame when a trajectory is supplied.
inline RunPlan plan_autoregressive_run(long total_frames, const ChunkConfig& cfg,
                                       const RunStart& start,
                                       const SpatialIndex* index = nullptr,
                                       const std::vector<CameraPose>& trajectory = {},
                                       const GeoPoint& local_origin = GeoPoint{37.5665, 126.9780, 0.0},
                                       double buffer_threshold = 1.0) {
  cfg.validate();
  if (total_frames < cfg.frames)
    throw ValidationError("run plan: trajectory shorter than one chunk");
  if (!trajectory.empty() && long(trajectory.size()) != total_frames)
    throw ValidationError("run plan: trajectory length does not match total_frames");

  RunPlan run;
  run.config = cfg;
  run.total_frames = total_frames;

  bool need_buffer = false;
  std::string buffer_pano;
  if (std::holds_alternative<GeoPoint>(start)) {
    if (!index || index->empty())
      throw ValidationError("run plan: arbitrary start point needs a panorama index");
    const GeoPoint& gp = std::get<GeoPoint>(start);
    const Eigen::Vector3d local = geo_to_local(gp, local_origin);
    // Panorama positions carry the camera height; compare horizontally.
    auto hits = index->k_nearest({local.x(), local.y(), 0.0}, 1);
    const auto* rec = hits.front().first;
    const double d = std::hypot(rec->local_position.x() - local.x(),
                                rec->local_position.y() - local.y());
    buffer_pano = rec->id;
    need_buffer = d > buffer_threshold;
  } else {
    const std::string& id = std::get<std::string>(start);
    if (index && !index->find(id))
      throw ValidationError("run plan: unknown start panorama " + id);
    buffer_pano = id;
  }

  const TokenPlan chunk_plan = plan_chunk(cfg);
  int chunk_index = 0;
  if (need_buffer) {
    ChunkSpec buf;
    buf.index = chunk_index++;
    buf.buffer = true;
    buf.frame_begin = buf.frame_end = 0;
    buf.generated_frames = cfg.frames;
    buf.latent_count = cfg.latents;
    buf.history = {HistorySource::Kind::start_frame_replicated, -1, 0, cfg.history};
    buf.plan = chunk_plan;
    buf.start_pano_id = buffer_pano;
    run.chunks.push_back(std::move(buf));
  }

  const long content_chunks = (total_frames + cfg.frames - 1) / cfg.frames;
  for (long c = 0; c < content_chunks; ++c) {
    ChunkSpec spec;
    spec.index = chunk_index;
    spec.frame_begin = c * cfg.frames;
    spec.frame_end = std::min(total_frames, (c + 1) * cfg.frames);
    spec.generated_frames = cfg.frames;
    spec.latent_count = cfg.latents;
    if (chunk_index == 0) {
      spec.history = {HistorySource::Kind::start_frame_replicated, -1, 0, cfg.history};
      spec.start_pano_id = buffer_pano;
    } else {
      spec.history = {HistorySource::Kind::previous_chunk_tail, chunk_index - 1,
                      cfg.latents - cfg.history, cfg.history};
    }
    spec.plan = chunk_plan;
    if (!trajectory.empty()) {
      const CameraPose& first = trajectory[std::size_t(spec.frame_begin)];
      for (long t = spec.frame_begin; t < spec.frame_end; ++t) {
        const RigidTransform rel = relative_pose(trajectory[std::size_t(t)], first);
        spec.relative_extrinsics.push_back({rel.rotation, rel.translation});
      }
    }
    run.chunks.push_back(std::move(spec));
    ++chunk_index;
  }
  return run;
}

// --- JSON serialization ("swm.plan.v1"): per-token (kind, slot, rope
// position) plus a run-length-encoded row-major visibility matrix. ---

inline nlohmann::json visibility_to_rle(const std::vector<std::vector<bool>>& vis) {
  nlohmann::json rle;
  bool first = true;
  std::vector<long> runs;
  bool current = false;
  long len = 0;
  bool started = false;
  for (const auto& row : vis) {
    for (bool v : row) {
      if (!started) {
        first = v;
        current = v;
        started = true;
      }
      if (v == current) {
        ++len;
      } else {
        runs.push_back(len);
        current = v;
        len = 1;
      }
    }
  }
  if (len > 0) runs.push_back(len);
  rle["first"] = first;
  rle["runs"] = runs;
  return rle;
}

inline std::vector<std::vector<bool>> visibility_from_rle(const nlohmann::json& rle,
                                                          std::size_t n) {
  std::vector<std::vector<bool>> vis(n, std::vector<bool>(n, false));
  bool value = rle.at("first").get<bool>();
  std::size_t flat = 0;
  for (const auto& run : rle.at("runs")) {
    for (long i = 0; i < run.get<long>(); ++i) {
      if (flat >= n * n) throw ValidationError("plan: visibility RLE overflows matrix");
      vis[flat / n][flat % n] = value;
      ++flat;
    }
    value = !value;
  }
  if (flat != n * n) throw ValidationError("plan: visibility RLE does not fill matrix");
  return vis;
}

inline nlohmann::json token_plan_to_json(const TokenPlan& plan) {
  nlohmann::json j;
  j["schema"] = "swm.plan.v1";
  j["mode"] = to_string(plan.mode);
  nlohmann::json tokens = nlohmann::json::array();
  for (const auto& t : plan.tokens)
    tokens.push_back({{"kind", to_string(t.kind)},
                      {"slot", t.sequence_slot},
                      {"rope_position", t.rope_position}});
  j["tokens"] = std::move(tokens);
  j["visibility_rle"] = visibility_to_rle(plan.visibility);
  return j;
}

inline TokenPlan token_plan_from_json(const nlohmann::json& j) {
  if (j.value("schema", "") != "swm.plan.v1")
    throw ValidationError("plan: unrecognized schema " + j.value("schema", "<missing>"));
  TokenPlan plan;
  plan.mode = j.at("mode").get<std::string>() == "sf" ? PlanMode::self_forcing
                                                      : PlanMode::teacher_forcing;
  for (const auto& t : j.at("tokens")) {
    TokenDesc d;
    const std::string kind = t.at("kind").get<std::string>();
    if (kind == "history") d.kind = TokenKind::history;
    else if (kind == "target") d.kind = TokenKind::target;
    else if (kind == "sink") d.kind = TokenKind::sink;
    else if (kind == "reference") d.kind = TokenKind::reference;
    else throw ValidationError("plan: unknown token kind " + kind);
    d.sequence_slot = t.at("slot").get<int>();
    d.rope_position = t.at("rope_position").get<long>();
    plan.tokens.push_back(d);
  }
  plan.visibility = visibility_from_rle(j.at("visibility_rle"), plan.tokens.size());
  return plan;
}

}  // namespace swm
