#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include "gazesense/error.hpp"
#include "gazesense/synthgen.hpp"
#include "gazesense/trip_io.hpp"
#include "gazesense/windowing.hpp"
#include "support.hpp"

namespace fs = std::filesystem;
using namespace gazesense;
using synth::EffectProfile;
using synth::TripRequest;

namespace {

double mean_fixation_duration(const synth::SyntheticTrip& s) {
  double sum = 0.0;
  int n = 0;
  // The last fixation is cut by the end of the trip.
  for (std::size_t i = 0; i + 1 < s.events.size(); ++i) {
    const auto& e = s.events[i];
    if (e.kind != events::EventKind::Fixation) continue;
    sum += e.offset_s - e.onset_s;
    ++n;
  }
  return sum / n;
}

std::vector<events::GazeEvent> detect(const TripRecording& trip) {
  const auto x = interpolate_gaps(trip.gaze_channel("gaze_x"));
  const auto y = interpolate_gaps(trip.gaze_channel("gaze_y"));
  return events::detect_events(x, y, {});
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("ground-truth events tile the trip and respect event invariants") {
  const auto s = synth::generate_trip(testsupport::sober_request(11, 300.0));
  REQUIRE(s.events.size() > 100);
  CHECK(s.events.front().onset_s == 0.0);
  for (std::size_t i = 0; i < s.events.size(); ++i) {
    const auto& e = s.events[i];
    CHECK(e.offset_s > e.onset_s);
    CHECK(e.amplitude >= 0.0);
    if (i > 0) {
      CHECK(e.onset_s == doctest::Approx(s.events[i - 1].offset_s).epsilon(1e-12));
      CHECK(e.kind != s.events[i - 1].kind);
    }
    if (e.kind == events::EventKind::Saccade) {
      CHECK(e.amplitude > 0.0);
      CHECK(e.peak_velocity > 0.0);
    }
  }
  CHECK(s.trip.samples.size() == 18000);
  CHECK(s.trip.duration_s() == doctest::Approx(300.0).epsilon(1e-12));
}

TEST_CASE("saccade peak velocity follows a saturating main sequence") {
  const auto s = synth::generate_trip(testsupport::sober_request(5, 300.0));
  std::vector<std::pair<double, double>> av;
  for (const auto& e : s.events) {
    if (e.kind == events::EventKind::Saccade) av.emplace_back(e.amplitude, e.peak_velocity);
  }
  std::sort(av.begin(), av.end());
  for (std::size_t i = 1; i < av.size(); ++i) {
    CHECK(av[i].second >= av[i - 1].second - 1e-9);
    // Velocity per unit amplitude falls as amplitude grows (saturation).
    CHECK(av[i].second / av[i].first <= av[i - 1].second / av[i - 1].first + 1e-9);
  }
}

TEST_CASE("same seed gives bit-identical trips, different seeds differ") {
  auto req = testsupport::sober_request(99, 150.0);
  req.with_can = true;
  const auto a = synth::generate_trip(req);
  const auto b = synth::generate_trip(req);
  REQUIRE(a.trip.samples.size() == b.trip.samples.size());
  bool same = true;
  for (std::size_t i = 0; i < a.trip.samples.size(); ++i) {
    const auto& p = a.trip.samples[i];
    const auto& q = b.trip.samples[i];
    same = same && p.gaze_x == q.gaze_x && p.gaze_y == q.gaze_y && p.eye_z == q.eye_z && p.valid == q.valid;
  }
  CHECK(same);
  CHECK(a.trip.can_channels[7].v == b.trip.can_channels[7].v);
  req.seed = 100;
  const auto c = synth::generate_trip(req);
  CHECK(c.trip.samples[100].gaze_x != a.trip.samples[100].gaze_x);
}

TEST_CASE("fixation_duration_scale 1.3 stretches mean fixation duration by 1.3") {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    auto base = testsupport::sober_request(seed);
    auto slow = base;
    slow.profile.fixation_duration_scale = 1.3;
    slow.seed = seed + 1000;
    const double ratio = mean_fixation_duration(synth::generate_trip(slow)) /
                         mean_fixation_duration(synth::generate_trip(base));
    CHECK(ratio == doctest::Approx(1.3).epsilon(0.05));
  }
}

TEST_CASE("saccade_rate_scale lowers the number of saccades") {
  auto base = testsupport::sober_request(21, 300.0);
  auto fewer = base;
  fewer.profile.saccade_rate_scale = 0.5;
  auto count = [](const synth::SyntheticTrip& s) {
    return std::count_if(s.events.begin(), s.events.end(),
                         [](const auto& e) { return e.kind == events::EventKind::Saccade; });
  };
  const double r = static_cast<double>(count(synth::generate_trip(fewer))) /
                   static_cast<double>(count(synth::generate_trip(base)));
  CHECK(r == doctest::Approx(0.5).epsilon(0.1));
}

TEST_CASE("invalid requests are rejected") {
  auto req = testsupport::sober_request(1, 60.0);
  CHECK_THROWS_AS(synth::generate_trip(req), Error);
  req.duration_s = 200.0;
  req.profile.jitter_scale = 0.0;
  CHECK_THROWS_AS(synth::generate_trip(req), Error);
  req.profile = {};
  req.profile.saccade_rate_scale = 1.5;
  CHECK_THROWS_AS(synth::generate_trip(req), Error);
  CHECK_THROWS_AS(synth::named_profiles("nope"), Error);
}

TEST_CASE("named profiles start sober and point in the documented directions") {
  for (const char* name : {"none", "default", "strong", "gaze_events"}) {
    const auto p = synth::named_profiles(name);
    CHECK(p[0] == EffectProfile{});
    CHECK(p[2].fixation_duration_scale >= p[1].fixation_duration_scale);
    CHECK(p[1].fixation_duration_scale >= 1.0);
    CHECK(p[2].saccade_rate_scale <= 1.0);
    CHECK(p[2].saccade_amplitude_scale <= 1.0);
  }
  const auto d = synth::named_profiles("default");
  CHECK(d[1].fixation_duration_scale == 1.15);
  CHECK(d[2].fixation_duration_scale == 1.30);
}

TEST_CASE("interpolate_profile is linear in BAC") {
  EffectProfile anchor{1.3, 0.8, 0.9, 1.2, 1.1, 1.4};
  CHECK(synth::interpolate_profile(anchor, 0.062, 0.0) == EffectProfile{});
  const auto at = synth::interpolate_profile(anchor, 0.062, 0.062);
  CHECK(at.fixation_duration_scale == doctest::Approx(1.3));
  CHECK(at.lane_scale == doctest::Approx(1.4));
  const auto half = synth::interpolate_profile(anchor, 0.062, 0.031);
  CHECK(half.fixation_duration_scale == doctest::Approx(1.15));
  CHECK(half.saccade_rate_scale == doctest::Approx(0.9));
}

TEST_CASE("study plan: shape, block order, scenario cycling and BAC draws") {
  synth::SynthConfig cfg;
  cfg.n_participants = 30;
  const auto plan = synth::plan_study(cfg);
  REQUIRE(plan.size() == 270);
  std::map<Block, std::vector<double>> bac;
  for (std::size_t i = 0; i < plan.size(); ++i) {
    const auto& e = plan[i].entry;
    static constexpr std::array kScen = {Scenario::Highway, Scenario::Rural, Scenario::Urban};
    CHECK(e.scenario == kScen[i % 3]);
    CHECK(bac_consistent(e.block, e.bac_gdl));
    bac[e.block].push_back(e.bac_gdl);
  }
  CHECK(plan[0].entry.block == Block::NoAlcohol);
  CHECK(plan[3].entry.block == Block::Severe);
  CHECK(plan[6].entry.block == Block::Moderate);
  CHECK(plan[0].entry.trip_id == "P01_no_alcohol_highway");
  auto mean = [](const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / v.size(); };
  CHECK(mean(bac[Block::NoAlcohol]) == 0.0);
  CHECK(mean(bac[Block::Severe]) == doctest::Approx(0.062).epsilon(0.03));
  CHECK(mean(bac[Block::Moderate]) == doctest::Approx(0.027).epsilon(0.03));
  for (double b : bac[Block::Severe]) CHECK(b >= 0.05);
  for (double b : bac[Block::Moderate]) CHECK((b > 0.0 && b <= 0.03));

  // Per-trip substreams: one participant's plan does not depend on how many others exist.
  cfg.n_participants = 2;
  const auto small = synth::plan_study(cfg);
  CHECK(small[10].request.seed == plan[10].request.seed);
  CHECK(small[10].entry.bac_gdl == plan[10].entry.bac_gdl);
}

TEST_CASE("generated study on disk is identical for any job count") {
  synth::SynthConfig cfg;
  cfg.n_participants = 2;
  cfg.trips_per_block = 1;
  cfg.trip_duration_s = 120.0;
  cfg.with_can = true;
  const fs::path root = fs::temp_directory_path() / "gazesense_synth_test";
  fs::remove_all(root);
  const auto m1 = synth::generate_study(cfg, root / "a", 1);
  const auto m2 = synth::generate_study(cfg, root / "b", 3);
  REQUIRE(m1.entries.size() == 6);
  CHECK(m1.can_channels == default_can_channels());
  for (const auto& e : m1.entries) {
    CHECK(slurp(root / "a" / e.file_path) == slurp(root / "b" / e.file_path));
    CHECK(slurp(root / "a" / e.can_file_path) == slurp(root / "b" / e.can_file_path));
  }
  CHECK(slurp(root / "a" / "manifest.json") == slurp(root / "b" / "manifest.json"));

  const auto loaded = load_manifest(root / "a" / "manifest.json");
  const auto trip = load_trip(loaded.entries[1], loaded.can_channels, root / "a");
  CHECK(trip.samples.size() == 7200);
  CHECK(trip.can_channels.size() == 8);
  CHECK(trip.block == Block::Severe);
  fs::remove_all(root);
}

TEST_CASE("detector recovers constructed saccades on sober trips") {
  testsupport::Recovery total;
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const auto s = synth::generate_trip(testsupport::sober_request(seed));
    const auto r = testsupport::match_saccades(s.events, detect(s.trip));
    total.injected += r.injected;
    total.recovered += r.recovered;
    total.max_onset_error_s = std::max(total.max_onset_error_s, r.max_onset_error_s);
  }
  MESSAGE("recall " << total.recall() << " over " << total.injected << " saccades");
  CHECK(total.recall() >= 0.95);
  CHECK(total.max_onset_error_s <= 0.020);
}
