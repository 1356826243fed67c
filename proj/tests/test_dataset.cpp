#include <catch2/catch_amalgamated.hpp>
#include <cmath>
#include <numeric>

#include "support/helpers.hpp"
#include "support/oracles.hpp"
#include "support/stats.hpp"
#include "swm/dataset.hpp"
#include "swm/synthcity.hpp"

using namespace swm;

namespace {

struct CityFixture {
  CityModel city = generate_city(61, 160);
  StreetViewDb db;
  std::shared_ptr<SynthRasterProvider> provider;
  SpatialIndex index;

  explicit CityFixture(int sessions) {
    StreetViewConfig cfg;
    cfg.sessions = sessions;
    db = sample_streetview_db(city, cfg);
    provider = std::make_shared<SynthRasterProvider>(city, db.records);
    index = SpatialIndex::build(db.records, provider);
  }
};

}  // namespace

TEST_CASE("pairing with only same-session neighbors forces reference dropout") {
  CityFixture fx(1);
  PairingConfig cfg;
  cfg.n_target = 5;
  const auto& route = fx.db.routes[0];
  REQUIRE(int(route.size()) >= cfg.n_target);
  const auto sample = pair_cross_temporal(fx.index, route, cfg);
  CHECK(sample.references.empty());
  CHECK(sample.dropout.refs);
  CHECK(sample.target.size() == 5);
}

TEST_CASE("pairing draws references exclusively from the other session") {
  CityFixture fx(2);
  PairingConfig cfg;
  cfg.n_target = 5;
  const auto& route = fx.db.routes[0];  // a session-0 route
  const auto sample = pair_cross_temporal(fx.index, route, cfg);
  REQUIRE(!sample.references.empty());
  for (const auto& ref : sample.references) {
    const auto* rec = fx.index.find(ref.parent_id);
    REQUIRE(rec != nullptr);
    CHECK(rec->session_id == "session-1");
  }
  CHECK_FALSE(sample.dropout.refs);
}

TEST_CASE("pairing equals the exhaustive filter-then-sort oracle") {
  CityFixture fx(2);
  auto rng = make_rng(62);
  PairingConfig cfg;
  cfg.n_target = 4;
  cfg.k_refs = 5;
  int tested = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const auto& route = fx.db.routes[rng() % fx.db.routes.size()];
    if (int(route.size()) < cfg.n_target) continue;
    cfg.seed = trial;
    const auto sample = pair_cross_temporal(fx.index, route, cfg);
    std::vector<const PanoramaRecord*> targets;
    for (int i = 0; i < cfg.n_target; ++i) targets.push_back(fx.index.find(route[std::size_t(i)]));
    const auto expected =
        oracle::pairing_scan(fx.db.records, targets, cfg.k_refs, cfg.radius, cfg.min_time_gap);
    std::vector<std::string> got;
    for (const auto& r : sample.references) got.push_back(r.parent_id);
    CHECK(got == expected);
    ++tested;
  }
  CHECK(tested > 50);
}

TEST_CASE("cross-temporal soundness holds on every emitted sample") {
  CityFixture fx(2);
  auto rng = make_rng(63);
  PairingConfig cfg;
  cfg.n_target = 4;
  for (int trial = 0; trial < 200; ++trial) {
    const auto& route = fx.db.routes[rng() % fx.db.routes.size()];
    if (int(route.size()) < cfg.n_target) continue;
    cfg.seed = trial;
    const auto sample = pair_cross_temporal(fx.index, route, cfg);
    if (sample.references.empty()) {
      CHECK(sample.dropout.refs);
      continue;
    }
    for (const auto& ref : sample.references) {
      const auto* rrec = fx.index.find(ref.parent_id);
      for (int i = 0; i < cfg.n_target; ++i) {
        const auto* trec = fx.index.find(route[std::size_t(i)]);
        CHECK(rrec->session_id != trec->session_id);
        CHECK(std::abs(rrec->timestamp - trec->timestamp) >= cfg.min_time_gap);
      }
    }
  }
}

TEST_CASE("target yaw policy is deterministic, bounded, and roughly uniform") {
  const std::vector<double> headings = {0.1, 0.2, 0.3};
  CHECK(target_yaw_policy(headings, 99) == target_yaw_policy(headings, 99));
  CHECK(target_yaw_policy(headings, 99) != target_yaw_policy(headings, 100));
  std::vector<double> draws;
  for (std::uint64_t s = 0; s < 2000; ++s) {
    const double d = target_yaw_policy(headings, s);
    CHECK(std::abs(d) <= kPi / 2);
    draws.push_back(d);
  }
  const double p = stats::ks_test_p(draws, [](double x) { return (x + kPi / 2) / kPi; });
  CHECK(p > 0.01);
}

TEST_CASE("camera action labeling") {
  std::vector<CameraPose> still(3);
  CHECK(label_camera_action(still) == CameraAction::stop);

  std::vector<CameraPose> left(2);
  left[0].rotation = heading_rotation(0);
  left[1].rotation = heading_rotation(-kPi / 2);
  left[1].translation = {-14, 14, 0};
  CHECK(label_camera_action(left) == CameraAction::left_turn);

  std::vector<CameraPose> right(2);
  right[0].rotation = heading_rotation(0);
  right[1].rotation = heading_rotation(kPi / 2);
  right[1].translation = {14, 14, 0};
  CHECK(label_camera_action(right) == CameraAction::right_turn);

  std::vector<CameraPose> straight(2);
  straight[0].rotation = heading_rotation(0);
  straight[1].rotation = heading_rotation(deg_to_rad(2.0));
  straight[1].translation = {0, 50, 0};
  CHECK(label_camera_action(straight) == CameraAction::straight);

  CHECK_THROWS_AS(label_camera_action({CameraPose{}}), ValidationError);
}

TEST_CASE("freeze-frame plan: causal slot 0 forms a group of one") {
  const auto plan = freeze_frame_plan({0}, 20, LatentGrouping::causal);
  CHECK(plan.total_frames == 77);
  REQUIRE(plan.keyframe_groups.size() == 1);
  CHECK(plan.keyframe_groups[0].frame_begin == 0);
  CHECK(plan.keyframe_groups[0].frame_end == 1);
  CHECK(plan.discarded_frames() == 0);
  CHECK(plan.surviving_frames() == 77);
}

TEST_CASE("freeze-frame plan: causal slot 5 freezes frames 17..20") {
  const auto plan = freeze_frame_plan({5}, 20, LatentGrouping::causal);
  REQUIRE(plan.keyframe_groups.size() == 1);
  CHECK(plan.keyframe_groups[0].latent_index == 5);
  CHECK(plan.keyframe_groups[0].frame_begin == 17);
  CHECK(plan.keyframe_groups[0].frame_end == 21);
  CHECK(plan.discarded_frames() == 3);
  // All four frames of the group replay the same source frame.
  const int src = plan.expansion_source[17];
  for (int f = 17; f <= 20; ++f) CHECK(plan.expansion_source[std::size_t(f)] == src);
  // Matches the independent grouping enumeration.
  const auto groups = oracle::enumerate_groups(true, 20);
  CHECK(groups[5].first == 17);
  CHECK(groups[5].second == 21);
}

TEST_CASE("freeze-frame plan: no keyframes is the identity") {
  const auto plan = freeze_frame_plan({}, 8, LatentGrouping::uniform);
  CHECK(plan.total_frames == 32);
  CHECK(plan.discarded_frames() == 0);
  for (int f = 0; f < 32; ++f) CHECK(plan.expansion_source[std::size_t(f)] == f);
}

TEST_CASE("freeze-frame plan validates slots") {
  CHECK_THROWS_AS(freeze_frame_plan({3, 3}, 10, LatentGrouping::causal), ValidationError);
  CHECK_THROWS_AS(freeze_frame_plan({5, 4}, 10, LatentGrouping::causal), ValidationError);
  CHECK_THROWS_AS(freeze_frame_plan({10}, 10, LatentGrouping::causal), ValidationError);
  CHECK_THROWS_AS(freeze_frame_plan({-1}, 10, LatentGrouping::causal), ValidationError);
}

TEST_CASE("freeze-frame expansion then discard is the identity, both groupings") {
  auto rng = make_rng(64);
  for (int trial = 0; trial < 300; ++trial) {
    const LatentGrouping g = (trial % 2) ? LatentGrouping::causal : LatentGrouping::uniform;
    const int latents = 2 + int(rng() % 24);
    std::vector<int> slots;
    for (int s = 0; s < latents; ++s)
      if (rng() % 3 == 0) slots.push_back(s);
    const auto plan = freeze_frame_plan(slots, latents, g);

    std::vector<int> original(std::size_t(plan.surviving_frames()));
    std::iota(original.begin(), original.end(), 0);
    const auto expanded = plan.expand(original);
    REQUIRE(int(expanded.size()) == plan.total_frames);
    CHECK(plan.discard(expanded) == original);
    // Keyframes sit intact at their groups.
    for (const auto& grp : plan.keyframe_groups)
      for (int f = grp.frame_begin; f < grp.frame_end; ++f)
        CHECK(expanded[std::size_t(f)] == expanded[std::size_t(grp.frame_begin)]);
    // Survivor arithmetic: groups of four lose three frames each.
    int four_groups = 0;
    for (const auto& grp : plan.keyframe_groups)
      if (grp.frame_end - grp.frame_begin == 4) ++four_groups;
    CHECK(plan.surviving_frames() == plan.total_frames - 3 * four_groups);
  }
}

TEST_CASE("conditioning dropout: drive-video forces reference and warp dropout") {
  for (std::uint64_t seed = 0; seed < 300; ++seed) {
    const DropoutFlags f = conditioning_dropout(SourceTag::drive_video, seed);
    CHECK(f.refs);
    CHECK(f.warp);
  }
}

TEST_CASE("conditioning dropout is deterministic per seed") {
  for (std::uint64_t seed : {0ull, 7ull, 999ull}) {
    const DropoutFlags a = conditioning_dropout(SourceTag::streetview, seed);
    const DropoutFlags b = conditioning_dropout(SourceTag::streetview, seed);
    CHECK(a.text == b.text);
    CHECK(a.refs == b.refs);
    CHECK(a.warp == b.warp);
    CHECK(a.history_noise == b.history_noise);
  }
}

TEST_CASE("conditioning dropout rates are near the configured probabilities") {
  long text = 0, refs = 0, warp = 0, noise = 0;
  const long n = 20000;
  for (long seed = 0; seed < n; ++seed) {
    const DropoutFlags f = conditioning_dropout(SourceTag::streetview, std::uint64_t(seed));
    text += f.text;
    refs += f.refs;
    warp += f.warp;
    noise += f.history_noise;
  }
  CHECK(std::abs(text / double(n) - 0.2) < 0.01);
  CHECK(std::abs(refs / double(n) - 0.2) < 0.01);
  CHECK(std::abs(warp / double(n) - 0.2) < 0.01);
  CHECK(std::abs(noise / double(n) - 0.5) < 0.012);
}

TEST_CASE("mix_datasets passthrough, determinism, and validation") {
  const std::vector<std::vector<int>> one = {{1, 2, 3}};
  const auto out = mix_datasets(one, {1.0}, 5, 7);
  CHECK(out == std::vector<int>{1, 2, 3, 1, 2, 3, 1});

  const std::vector<std::vector<int>> three = {{0}, {1}, {2}};
  const auto a = mix_datasets(three, {0.2, 0.4, 0.4}, 11, 5000);
  const auto b = mix_datasets(three, {0.2, 0.4, 0.4}, 11, 5000);
  CHECK(a == b);
  const auto c = mix_datasets(three, {0.2, 0.4, 0.4}, 12, 5000);
  CHECK(a != c);

  long counts[3] = {0, 0, 0};
  for (int v : a) counts[v]++;
  CHECK(std::abs(counts[0] / 5000.0 - 0.2) < 0.02);
  CHECK(std::abs(counts[1] / 5000.0 - 0.4) < 0.025);
  CHECK(std::abs(counts[2] / 5000.0 - 0.4) < 0.025);

  CHECK_THROWS_AS(mix_datasets(three, {0.5, 0.5}, 0, 1), ValidationError);
  CHECK_THROWS_AS(mix_datasets(three, {0.2, 0.2, 0.2}, 0, 1), ValidationError);
  const std::vector<std::vector<int>> with_empty = {{1}, {}};
  CHECK_THROWS_AS(mix_datasets(with_empty, {0.5, 0.5}, 0, 1), ValidationError);
  CHECK_NOTHROW(mix_datasets(with_empty, {1.0, 0.0}, 0, 3));
}
