#include <doctest.h>

#include <cmath>
#include <random>

#include "gazesense/decision.hpp"
#include "gazesense/error.hpp"

using namespace gazesense;
using namespace gazesense::decision;

namespace {

TripScoreSeries series(const std::vector<double>& p, double t0 = 60.0) {
  TripScoreSeries s;
  s.trip_id = "T";
  s.participant_id = "P01";
  for (std::size_t i = 0; i < p.size(); ++i) s.window_end_s.push_back(t0 + static_cast<double>(i));
  s.prob = p;
  return s;
}

bool within_ulp(double a, double b) { return std::abs(a - b) <= std::ldexp(std::abs(b), -52); }

// Trips of `windows` windows; per-window probabilities are noisy around a
// trip-level separation.
std::vector<TripScoreSeries> noisy_trips(int participants, int windows, double sep, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z(0.0, 1.0);
  std::vector<TripScoreSeries> out;
  for (int p = 0; p < participants; ++p) {
    for (int k = 0; k < 6; ++k) {
      TripScoreSeries s;
      s.participant_id = "P" + std::to_string(p);
      s.trip_id = s.participant_id + "_" + std::to_string(k);
      s.fold = static_cast<std::size_t>(p);
      s.label = k % 3 == 0 ? 0 : 1;
      const double offset = 0.4 * z(rng);
      for (int w = 0; w < windows; ++w) {
        s.window_end_s.push_back(60.0 + w);
        s.prob.push_back(1.0 / (1.0 + std::exp(-(sep * (s.label ? 1 : -1) + offset + 2.0 * z(rng)))));
      }
      out.push_back(std::move(s));
    }
  }
  return out;
}

}  // namespace

TEST_CASE("cumulative moving average") {
  const auto c = cumulative_moving_average(series({0.2, 0.4, 0.6}));
  // 0.3 and 0.4 have no exact binary form; the running means land within one ulp.
  CHECK(c.prob[0] == 0.2);
  CHECK(within_ulp(c.prob[1], 0.3));
  CHECK(within_ulp(c.prob[2], 0.4));
  CHECK(c.window_end_s == series({0.2, 0.4, 0.6}).window_end_s);

  const auto k = cumulative_moving_average(series({0.7, 0.7, 0.7, 0.7}));
  for (double v : k.prob) CHECK(v == 0.7);

  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> p(200);
  for (auto& v : p) v = u(rng);
  const auto m = cumulative_moving_average(series(p));
  for (std::size_t i = 1; i < p.size(); ++i) {
    const double step = std::abs(m.prob[i] - m.prob[i - 1]);
    CHECK(step <= std::abs(p[i] - m.prob[i - 1]) / static_cast<double>(i) + 1e-15);
  }
  // Prefix means do not depend on the order inside the prefix.
  auto q = p;
  std::reverse(q.begin(), q.begin() + 100);
  CHECK(cumulative_moving_average(series(q)).prob[99] == doctest::Approx(m.prob[99]).epsilon(1e-14));

  CHECK_THROWS_AS(cumulative_moving_average(series({})), Error);
}

TEST_CASE("majority vote groups") {
  auto g = majority_vote_groups(series({0.9, 0.8, 0.1}), 3);
  REQUIRE(g.size() == 1);
  CHECK(g[0].decision == 1);

  g = majority_vote_groups(series({0.6, 0.6, 0.1}), 3);
  CHECK(g[0].score == doctest::Approx(13.0 / 30.0));
  CHECK(g[0].decision == 1);
  CHECK(g[0].votes == 2);

  g = majority_vote_groups(series({0.6, 0.1}), 2);
  CHECK(g[0].decision == 1);  // tie goes positive

  const std::vector<double> p{0.1, 0.7, 0.5, 0.2, 0.9};
  g = majority_vote_groups(series(p), 1);
  REQUIRE(g.size() == p.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    CHECK(g[i].score == p[i]);
    CHECK(g[i].decision == (p[i] >= 0.5 ? 1 : 0));
  }
  for (int size = 1; size <= 7; ++size) {
    g = majority_vote_groups(series(p), size);
    CHECK(g.size() == (p.size() + static_cast<std::size_t>(size) - 1) / static_cast<std::size_t>(size));
    CHECK(g.back().window_end_s == 64.0);
  }
  try {
    majority_vote_groups(series(p), 0);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::BadGroupSize);
  }
}

TEST_CASE("decision-time curve on perfectly separated trips") {
  std::vector<TripScoreSeries> trips;
  for (int p = 0; p < 4; ++p) {
    for (int label = 0; label < 2; ++label) {
      auto s = series(std::vector<double>(541, label ? 0.9 : 0.1));
      s.participant_id = "P" + std::to_string(p);
      s.trip_id = s.participant_id + std::to_string(label);
      s.label = label;
      trips.push_back(cumulative_moving_average(s));
    }
  }
  CurveOptions opts;
  opts.resamples = 200;
  const auto curve = decision_time_curve(trips, opts);
  REQUIRE(curve.size() == 541);
  CHECK(curve.front().t_s == 60.0);
  CHECK(curve.back().t_s == 600.0);
  for (const auto& c : curve) {
    CHECK(c.balanced_accuracy == 1.0);
    CHECK(c.ci_low == 1.0);
    CHECK(c.ci_high == 1.0);
  }

  trips.resize(3);  // two negative trips, one positive
  try {
    decision_time_curve(trips, opts);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::InsufficientTrips);
  }
}

TEST_CASE("decision-time curve: bootstrap interval brackets the estimate and is seeded") {
  auto trips = noisy_trips(10, 300, 0.6, 5);
  for (auto& t : trips) t = cumulative_moving_average(t);
  CurveOptions opts;
  opts.resamples = 300;
  const auto a = decision_time_curve(trips, opts);
  const auto b = decision_time_curve(trips, opts);
  REQUIRE(a.size() == 300);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].ci_low <= a[i].balanced_accuracy + 1e-12);
    CHECK(a[i].ci_high >= a[i].balanced_accuracy - 1e-12);
    CHECK(a[i].ci_low == b[i].ci_low);
    CHECK(a[i].ci_high == b[i].ci_high);
  }
  // Averaging more windows makes the trip decision more reliable.
  CHECK(a.back().balanced_accuracy > a.front().balanced_accuracy);
}

TEST_CASE("majority vote sweep: table shape, identity row and aggregation gain") {
  const auto trips = noisy_trips(8, 540, 0.15, 9);
  const auto sweep = majority_vote_sweep(trips);
  REQUIRE(sweep.size() == 8);
  for (std::size_t i = 0; i < sweep.size(); ++i) CHECK(sweep[i].group_size == kSweepGroupSizes[i]);

  // Group size 1 reproduces per-fold window metrics.
  std::vector<double> per_fold;
  for (int f = 0; f < 8; ++f) {
    std::vector<double> s;
    std::vector<int> y;
    for (const auto& t : trips) {
      if (t.fold != static_cast<std::size_t>(f)) continue;
      s.insert(s.end(), t.prob.begin(), t.prob.end());
      y.insert(y.end(), t.prob.size(), t.label);
    }
    per_fold.push_back(evaluation::auroc(s, y));
  }
  CHECK(sweep[0].macro.at("auroc").mean == doctest::Approx(evaluation::macro(per_fold).mean).epsilon(1e-14));
  CHECK(sweep[3].macro.at("auroc").mean >= sweep[0].macro.at("auroc").mean - 0.01);
  CHECK(sweep[3].macro.at("balanced_accuracy").mean > sweep[0].macro.at("balanced_accuracy").mean);
  CHECK(sweep_to_csv(sweep).find("group_size,auroc_mean") == 0);
}

TEST_CASE("trip series come from binary report scores") {
  evaluation::EvaluationReport rep;
  CHECK_THROWS_AS(trip_series(rep), Error);
  for (double t : {62.0, 60.0, 61.0}) {
    evaluation::ScoredRow r;
    r.trip_id = "A";
    r.participant_id = "P01";
    r.window_end_s = t;
    r.scores = {t / 100.0};
    rep.scores.push_back(r);
  }
  const auto s = trip_series(rep);
  REQUIRE(s.size() == 1);
  CHECK(s[0].window_end_s == std::vector<double>{60.0, 61.0, 62.0});
  CHECK(s[0].prob == std::vector<double>{0.60, 0.61, 0.62});
  rep.task = model::Task::Multiclass;
  CHECK_THROWS_AS(trip_series(rep), Error);
}
