#include <doctest.h>

#include <cmath>
#include <random>

#include "gazesense/error.hpp"
#include "gazesense/gaze_events.hpp"
#include "gazesense/synthgen.hpp"
#include "support.hpp"

using namespace gazesense;
using events::EventKind;
using events::GazeEvent;

namespace {

SignalChannel channel(const std::vector<double>& v, double rate = 60.0) {
  SignalChannel ch;
  ch.name = "g";
  for (std::size_t i = 0; i < v.size(); ++i) ch.t.push_back(static_cast<double>(i) / rate);
  ch.v = v;
  ch.valid.assign(v.size(), true);
  return ch;
}

// Straightforward re-statement of the threshold iteration for comparison.
double hand_threshold(const std::vector<double>& s, double pt, int max_iter, double tol) {
  for (int it = 0; it < max_iter; ++it) {
    double sum = 0.0;
    int n = 0;
    for (double x : s) {
      if (x <= pt) {
        sum += x;
        ++n;
      }
    }
    const double mean = sum / n;
    double ss = 0.0;
    for (double x : s) {
      if (x <= pt) ss += (x - mean) * (x - mean);
    }
    const double next = mean + 6.0 * std::sqrt(ss / (n - 1));
    const bool done = std::abs(next - pt) < tol;
    pt = next;
    if (done) break;
  }
  return pt;
}

double min_jerk(double tau) {
  tau = std::clamp(tau, 0.0, 1.0);
  return tau * tau * tau * (10.0 - 15.0 * tau + 6.0 * tau * tau);
}

// Gaze that rests at x=0, moves `amp` mm along x during [t0, t0 + dur], then rests.
std::pair<SignalChannel, SignalChannel> ramp_gaze(double t0, double dur, double amp, double total,
                                                   double noise = 0.0, std::uint64_t seed = 1) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z(0.0, 1.0);
  const auto n = static_cast<std::size_t>(std::llround(total * 60.0));
  std::vector<double> x(n), y(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / 60.0;
    x[i] = amp * min_jerk((t - t0) / dur) + noise * z(rng);
    y[i] = noise * z(rng);
  }
  return {channel(x), channel(y)};
}

void check_invariants(const std::vector<GazeEvent>& evs, const events::EventDetectorParams& p) {
  for (std::size_t i = 0; i < evs.size(); ++i) {
    const auto& e = evs[i];
    CHECK(e.offset_s >= e.onset_s);
    CHECK(e.duration_s == doctest::Approx(e.offset_s - e.onset_s));
    CHECK(e.duration_s >= (e.kind == EventKind::Fixation ? p.min_fixation_duration_s : p.min_saccade_duration_s) - 1e-12);
    CHECK(e.amplitude >= 0.0);
    CHECK(e.mean_velocity >= 0.0);
    CHECK(e.mean_velocity <= e.peak_velocity);
    if (i > 0) {
      const auto& prev = evs[i - 1];
      CHECK(e.onset_s >= prev.offset_s);
      // Touching events belong to the same valid segment and must alternate.
      if (e.onset_s == prev.offset_s) CHECK(e.kind != prev.kind);
    }
  }
}

}  // namespace

TEST_CASE("adaptive threshold: zero-variance fixpoint") {
  const auto s = channel(std::vector<double>(500, 42.0));
  const auto r = events::adaptive_velocity_threshold(s, {});
  CHECK(r.threshold == 42.0);
  CHECK(r.converged);
}

TEST_CASE("adaptive threshold agrees with a hand iteration on bimodal speeds") {
  std::mt19937_64 rng(2024);
  std::normal_distribution<double> z(0.0, 5.0);
  std::vector<double> v;
  for (int i = 0; i < 10000; ++i) v.push_back(std::abs(z(rng)));
  for (int i = 0; i < 100; ++i) v.push_back(500.0);
  std::shuffle(v.begin(), v.end(), rng);
  const auto r = events::adaptive_velocity_threshold(channel(v), {});
  CHECK(r.converged);
  CHECK(r.threshold == doctest::Approx(hand_threshold(v, 300.0, 100, 1.0)).epsilon(1e-12));
  // Separates the modes: the fast samples sit far above, the noise sits below.
  CHECK(r.threshold < 500.0);
  CHECK(r.threshold > 5.0 * std::sqrt(2.0 / std::acos(-1.0)));
}

TEST_CASE("adaptive threshold needs enough valid samples and honours max_iterations") {
  auto s = channel(std::vector<double>(150, 1.0));
  for (std::size_t i = 0; i < 60; ++i) s.valid[i] = false;
  CHECK_THROWS_AS(events::adaptive_velocity_threshold(s, {}), Error);

  std::vector<double> ramp;
  for (int i = 0; i < 1000; ++i) ramp.push_back(i * 0.5);
  events::EventDetectorParams p;
  p.max_iterations = 1;
  const auto r = events::adaptive_velocity_threshold(channel(ramp), p);
  CHECK(r.iterations == 1);
  CHECK_FALSE(r.converged);
}

TEST_CASE("constructed saccade is found with its timing and amplitude") {
  for (double noise : {0.0, 0.2}) {
    const double t0 = 2.0 + 0.007;
    auto [x, y] = ramp_gaze(t0, 0.040, 100.0, 4.04 + 0.007, noise);
    const auto ev = events::detect_events(x, y, {});
    REQUIRE(ev.size() == 3);
    CHECK(ev[0].kind == EventKind::Fixation);
    CHECK(ev[1].kind == EventKind::Saccade);
    CHECK(ev[2].kind == EventKind::Fixation);
    CHECK(std::abs(ev[1].onset_s - t0) <= 0.020);
    CHECK(std::abs(ev[1].offset_s - (t0 + 0.040)) <= 0.020);
    CHECK(ev[1].amplitude == doctest::Approx(100.0).epsilon(0.02));
    CHECK(ev[0].duration_s == doctest::Approx(2.0).epsilon(0.02));
    CHECK(ev[2].duration_s == doctest::Approx(2.0).epsilon(0.02));
    CHECK(ev[0].amplitude < 1.5);
  }
}

TEST_CASE("constant gaze is one fixation, sub-threshold noise yields no saccade") {
  auto still = channel(std::vector<double>(600, 123.0));
  auto ev = events::detect_events(still, still, {});
  REQUIRE(ev.size() == 1);
  CHECK(ev[0].kind == EventKind::Fixation);
  CHECK(ev[0].onset_s == 0.0);
  CHECK(ev[0].offset_s == doctest::Approx(599.0 / 60.0));
  CHECK(ev[0].amplitude == 0.0);

  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    auto [x, y] = ramp_gaze(1e9, 1.0, 0.0, 60.0, 0.3, seed);
    ev = events::detect_events(x, y, {});
    const auto saccades = std::count_if(ev.begin(), ev.end(), [](const auto& e) { return e.kind == EventKind::Saccade; });
    CHECK(saccades == 0);
    CHECK(ev.size() == 1);
  }
}

TEST_CASE("a sub-minimum fixation between two movements is absorbed") {
  // Two 50 mm movements separated by a 33 ms pause: the pause is too short to
  // be a fixation, so the detector reports one saccade.
  const auto n = static_cast<std::size_t>(4 * 60);
  std::vector<double> xs(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / 60.0;
    xs[i] = 50.0 * min_jerk((t - 2.0) / 0.03) + 50.0 * min_jerk((t - 2.063) / 0.03);
  }
  const auto x = channel(xs);
  const auto y = channel(std::vector<double>(n, 0.0));
  const auto ev = events::detect_events(x, y, {});
  REQUIRE(ev.size() == 3);
  CHECK(ev[1].kind == EventKind::Saccade);
  CHECK(ev[1].amplitude == doctest::Approx(100.0).epsilon(0.02));
}

TEST_CASE("events are truncated at invalid segments") {
  auto [x, y] = ramp_gaze(2.0, 0.04, 80.0, 8.0, 0.1);
  for (std::size_t i = 240; i < 270; ++i) x.valid[i] = y.valid[i] = false;  // 4.0-4.5 s
  const auto ev = events::detect_events(x, y, {});
  for (const auto& e : ev) CHECK_FALSE((e.onset_s < 4.25 && e.offset_s > 4.25));
  check_invariants(ev, {});
}

TEST_CASE("event invariants hold on generated trips") {
  for (std::uint64_t seed = 40; seed < 46; ++seed) {
    const auto s = synth::generate_trip(testsupport::sober_request(seed, 150.0));
    const auto x = interpolate_gaps(s.trip.gaze_channel("gaze_x"));
    const auto y = interpolate_gaps(s.trip.gaze_channel("gaze_y"));
    const auto ev = events::detect_events(x, y, {});
    REQUIRE(!ev.empty());
    check_invariants(ev, {});
    double total = 0.0;
    for (const auto& e : ev) total += e.duration_s;
    std::size_t valid = 0;
    for (bool v : x.valid) valid += v ? 1 : 0;
    CHECK(total <= static_cast<double>(valid) / 60.0);
  }
}

TEST_CASE("scaling gaze and thresholds together preserves event boundaries") {
  const auto s = synth::generate_trip(testsupport::sober_request(77, 150.0));
  const auto x = interpolate_gaps(s.trip.gaze_channel("gaze_x"));
  const auto y = interpolate_gaps(s.trip.gaze_channel("gaze_y"));
  const auto base = events::run_event_detection(x, y, {});
  for (double c : {2.0, 0.25, 10.0}) {
    auto xs = x;
    auto ys = y;
    for (auto& v : xs.v) v *= c;
    for (auto& v : ys.v) v *= c;
    events::EventDetectorParams p;
    p.initial_threshold *= c;
    p.convergence_tol *= c;
    const auto scaled = events::run_event_detection(xs, ys, p);
    CHECK(scaled.threshold.threshold == doctest::Approx(c * base.threshold.threshold).epsilon(1e-9));
    REQUIRE(scaled.events.size() == base.events.size());
    for (std::size_t i = 0; i < base.events.size(); ++i) {
      CHECK(scaled.events[i].kind == base.events[i].kind);
      CHECK(scaled.events[i].onset_s == base.events[i].onset_s);
      CHECK(scaled.events[i].offset_s == base.events[i].offset_s);
      CHECK(scaled.events[i].amplitude == doctest::Approx(c * base.events[i].amplitude).epsilon(1e-9));
      CHECK(scaled.events[i].peak_velocity == doctest::Approx(c * base.events[i].peak_velocity).epsilon(1e-9));
    }
  }
}

TEST_CASE("detector parameter validation") {
  events::EventDetectorParams p;
  p.min_fixation_duration_s = 0.0;
  CHECK_THROWS_AS(p.validate(), Error);
  p = {};
  p.max_iterations = 0;
  CHECK_THROWS_AS(p.validate(), Error);
  CHECK(events::EventDetectorParams::degree_defaults().initial_threshold == 100.0);
}
