#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <functional>
#include <map>
#include <set>

#include "gazesense/error.hpp"
#include "gazesense/evaluation.hpp"
#include "oracles.hpp"

using namespace gazesense;
using namespace gazesense::evaluation;
using testsupport::brute_auprc;
using testsupport::brute_auroc;

namespace {

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::IoError;
}

// Participants x 3 blocks x 3 scenarios with `per_trip` windows each.
// Feature 0 carries a block signal of strength `signal`; the rest is noise
// plus, when `own_direction` is set, a participant-specific label pattern.
windowing::FeatureMatrix study_matrix(int participants, int per_trip, double signal, std::uint64_t seed,
                                      bool own_direction = false, int features = 4) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z(0.0, 1.0);
  windowing::FeatureMatrix m;
  for (int f = 0; f < features; ++f) m.feature_names.push_back((f % 2 ? "eye." : "head.") + std::to_string(f));
  const double bac[3] = {0.0, 0.027, 0.062};
  for (int p = 0; p < participants; ++p) {
    char id[8];
    std::snprintf(id, sizeof id, "P%02d", p + 1);
    std::vector<double> dir(static_cast<std::size_t>(features));
    for (auto& d : dir) d = z(rng);
    for (int b = 0; b < 3; ++b) {
      for (int s = 0; s < 3; ++s) {
        const std::string trip = std::string(id) + "_b" + std::to_string(b) + "_s" + std::to_string(s);
        for (int w = 0; w < per_trip; ++w) {
          windowing::FeatureVector r;
          r.participant_id = id;
          r.trip_id = trip;
          r.scenario = static_cast<Scenario>(s);
          r.block = static_cast<Block>(b);
          r.bac_gdl = bac[b];
          r.window_end_s = 60.0 + w;
          for (int f = 0; f < features; ++f) {
            double v = z(rng);
            if (f == 0) v += signal * b;
            if (own_direction) v += 1.5 * dir[static_cast<std::size_t>(f)] * (b > 0 ? 1.0 : -1.0);
            r.values.push_back(v);
          }
          m.rows.push_back(std::move(r));
        }
      }
    }
  }
  return m;
}

}  // namespace

TEST_CASE("auroc and auprc hand examples") {
  CHECK(auroc({0.1, 0.4, 0.35, 0.8}, {0, 0, 1, 1}) == 0.75);
  CHECK(auroc({0.3, 0.3, 0.3, 0.3}, {0, 1, 0, 1}) == 0.5);
  CHECK(auroc({0.1, 0.2, 0.8, 0.9}, {0, 0, 1, 1}) == 1.0);
  CHECK(auprc({0.9, 0.8, 0.7}, {1, 0, 1}) == doctest::Approx(5.0 / 6.0).epsilon(1e-15));
  CHECK(auprc({0.9, 0.8, 0.2}, {1, 1, 0}) == 1.0);
  CHECK(code_of([] { auroc({0.1, 0.2}, {1, 1}); }) == ErrorCode::SingleClass);
  CHECK(code_of([] { auprc({0.1, 0.2}, {0, 0}); }) == ErrorCode::NoPositives);
}

TEST_CASE("auroc and auprc equal brute-force references on random sets with ties") {
  std::mt19937_64 rng(1234);
  std::uniform_int_distribution<int> len(2, 50);
  for (int trial = 0; trial < 500; ++trial) {
    const auto n = static_cast<std::size_t>(len(rng));
    std::vector<double> s(n);
    std::vector<int> y(n);
    const int levels = trial % 3 == 0 ? 4 : 1000;  // coarse levels force many ties
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = static_cast<double>(rng() % static_cast<unsigned>(levels)) / levels;
      y[i] = static_cast<int>(rng() % 2);
    }
    y[0] = 1;
    y[1] = 0;
    CHECK(std::abs(auroc(s, y) - brute_auroc(s, y)) <= 1e-12);
    CHECK(std::abs(auprc(s, y) - brute_auprc(s, y)) <= 1e-12);

    // Strictly monotone transforms keep the ranking.
    std::vector<double> t(n);
    for (std::size_t i = 0; i < n; ++i) t[i] = std::exp(3.0 * s[i]) - 7.0;
    CHECK(std::abs(auroc(t, y) - auroc(s, y)) <= 1e-12);
  }
}

TEST_CASE("random scores give AUPRC near the prevalence") {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (double prevalence : {2.0 / 3.0, 1.0 / 3.0}) {
    std::vector<double> s(30000);
    std::vector<int> y(30000);
    for (std::size_t i = 0; i < s.size(); ++i) {
      s[i] = u(rng);
      y[i] = static_cast<double>(i % 3) < prevalence * 3.0 ? 1 : 0;
    }
    CHECK(std::abs(auprc(s, y) - prevalence) < 0.03);
  }
}

TEST_CASE("balanced accuracy and weighted F1") {
  // TP=3, FP=1, FN=1, TN=3
  const std::vector<int> y{1, 1, 1, 1, 0, 0, 0, 0};
  const std::vector<int> p{1, 1, 1, 0, 1, 0, 0, 0};
  CHECK(balanced_accuracy(p, y) == 0.75);
  CHECK(f1_weighted(p, y) == doctest::Approx(0.75));
  CHECK(balanced_accuracy(y, y) == 1.0);
  CHECK(f1_weighted(y, y) == 1.0);
  CHECK(balanced_accuracy(std::vector<int>(8, 1), y) == 0.5);
  CHECK(code_of([] { balanced_accuracy({1, 1}, {1, 1}); }) == ErrorCode::SingleClass);

  // Weighted F1 through explicit precision and recall.
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<int> a(40), b(40);
    for (int i = 0; i < 40; ++i) {
      a[static_cast<std::size_t>(i)] = static_cast<int>(rng() % 3);
      b[static_cast<std::size_t>(i)] = static_cast<int>(rng() % 3);
    }
    double ref = 0.0;
    for (int c = 0; c < 3; ++c) {
      double tp = 0, fp = 0, fn = 0, sup = 0;
      for (int i = 0; i < 40; ++i) {
        const bool pc = b[static_cast<std::size_t>(i)] == c, yc = a[static_cast<std::size_t>(i)] == c;
        tp += pc && yc;
        fp += pc && !yc;
        fn += !pc && yc;
        sup += yc;
      }
      if (sup == 0) continue;
      const double prec = tp + fp > 0 ? tp / (tp + fp) : 0.0;
      const double rec = tp / (tp + fn);
      const double f1 = prec + rec > 0 ? 2 * prec * rec / (prec + rec) : 0.0;
      ref += sup / 40.0 * f1;
    }
    CHECK(f1_weighted(b, a) == doctest::Approx(ref).epsilon(1e-12));
  }
}

TEST_CASE("macro statistics use the sample sd") {
  const auto s = macro({0.8, 0.9, 1.0});
  CHECK(s.mean == doctest::Approx(0.9));
  CHECK(s.sd == doctest::Approx(0.1));
  CHECK(macro({0.7}).sd == 0.0);
}

TEST_CASE("LOSO folds partition the rows by participant") {
  const auto m2 = study_matrix(2, 2, 1.0, 1);
  const auto f2 = loso_folds(m2);
  REQUIRE(f2.size() == 2);
  CHECK(f2[0].participant == "P01");
  CHECK(f2[1].participant == "P02");
  CHECK(f2[0].train == f2[1].test);

  const auto m = study_matrix(30, 1, 1.0, 2);
  const auto folds = loso_folds(m);
  CHECK(folds.size() == 30);
  for (const auto& f : folds) {
    CHECK(fold_is_clean(m, f));
    CHECK(f.train.size() + f.test.size() == m.rows.size());
    std::set<std::size_t> all(f.train.begin(), f.train.end());
    all.insert(f.test.begin(), f.test.end());
    CHECK(all.size() == m.rows.size());
  }
  auto one = study_matrix(1, 2, 1.0, 3);
  CHECK(code_of([&] { loso_folds(one); }) == ErrorCode::TooFewParticipants);
}

TEST_CASE("LOSO x leave-one-scenario-out folds") {
  const auto m = study_matrix(30, 1, 1.0, 4);
  const auto folds = loso_lodso_folds(m);
  CHECK(folds.size() == 90);
  std::map<std::string, int> per;
  for (const auto& f : folds) {
    REQUIRE(f.scenario.has_value());
    CHECK(fold_is_clean(m, f));
    for (auto i : f.train) {
      CHECK(m.rows[i].participant_id != f.participant);
      CHECK(m.rows[i].scenario != *f.scenario);
    }
    for (auto i : f.test) CHECK(m.rows[i].scenario == *f.scenario);
    ++per[f.participant];
  }
  for (const auto& [p, n] : per) CHECK(n == 3);

  auto single = m;
  for (auto& r : single.rows) r.scenario = Scenario::Urban;
  CHECK(code_of([&] { loso_lodso_folds(single); }) == ErrorCode::MissingScenario);

  // A fold whose training rows include the test participant is flagged.
  auto leaky = loso_folds(m)[0];
  leaky.train.push_back(leaky.test.front());
  CHECK_FALSE(fold_is_clean(m, leaky));
}

TEST_CASE("evaluate: aggregation is consistent with the stored folds and scores") {
  const auto m = study_matrix(6, 20, 0.8, 5);
  EvaluateOptions opts;
  opts.jobs = 1;
  const auto rep = evaluate(m, opts);
  REQUIRE(rep.folds.size() == 6);
  CHECK(rep.scores.size() == m.rows.size());
  CHECK(rep.macro.at("auroc").mean > 0.8);

  for (auto name : kMetricNames) {
    std::vector<double> v;
    for (const auto& f : rep.folds) v.push_back(metric_value(f.metrics, name));
    const auto s = macro(v);
    CHECK(rep.macro.at(std::string(name)).mean == s.mean);
    CHECK(rep.macro.at(std::string(name)).sd == s.sd);
  }

  // Per-scenario metrics come from that scenario's test windows only.
  for (std::size_t fi = 0; fi < rep.folds.size(); ++fi) {
    for (const auto& [scen, mt] : rep.folds[fi].per_scenario) {
      std::vector<double> s;
      std::vector<int> y;
      for (const auto& r : rep.scores) {
        if (r.fold == fi && r.scenario == scen) {
          s.push_back(r.scores[0]);
          y.push_back(r.label);
        }
      }
      CHECK(mt.auroc == auroc(s, y));
    }
  }

  double total = 0.0;
  for (const auto& [g, v] : rep.group_importance) total += v;
  CHECK(std::abs(total - 1.0) <= 1e-12);
  for (const auto& row : rep.confusion.rates) CHECK(std::accumulate(row.begin(), row.end(), 0.0) == doctest::Approx(1.0));
}

TEST_CASE("evaluate is independent of the job count and the report JSON round-trips") {
  const auto m = study_matrix(5, 10, 0.5, 6);
  for (auto task : {model::Task::AboveLimit, model::Task::Multiclass}) {
    EvaluateOptions opts;
    opts.task = task;
    opts.jobs = 1;
    const auto a = report_to_json(evaluate(m, opts));
    opts.jobs = 3;
    const auto b = report_to_json(evaluate(m, opts));
    CHECK(a == b);
    const auto back = report_from_json(a);
    CHECK(report_to_json(back) == a);
    CHECK(back.scores.size() == m.rows.size());
  }
  EvaluateOptions lodso;
  lodso.scheme = Scheme::LosoLodso;
  const auto r = evaluate(m, lodso);
  CHECK(r.folds.size() == 15);
  CHECK(report_to_json(report_from_json(report_to_json(r))) == report_to_json(r));
  CHECK(code_of([] { report_from_json("{\"schema_version\": 99}"); }) == ErrorCode::BadConfig);
}

TEST_CASE("permuted labels give chance-level AUROC") {
  const auto m = study_matrix(8, 30, 1.5, 7);
  EvaluateOptions opts;
  opts.permute_labels = true;
  const auto rep = evaluate(m, opts);
  CHECK(rep.permuted_labels);
  CHECK(rep.macro.at("auroc").mean > 0.40);
  CHECK(rep.macro.at("auroc").mean < 0.60);
}

TEST_CASE("leakage probe: a duplicated participant is recognised only without LOSO separation") {
  auto m = study_matrix(8, 15, 0.0, 9, true, 12);
  EvaluateOptions opts;
  const auto clean = evaluate(m, opts);
  // Add P01's rows again under a new id: P01's fold now trains on its own data.
  const auto n = m.rows.size();
  for (std::size_t i = 0; i < n; ++i) {
    if (m.rows[i].participant_id != "P01") continue;
    auto r = m.rows[i];
    r.participant_id = "P99";
    m.rows.push_back(r);
  }
  const auto leaky = evaluate(m, opts);
  REQUIRE(leaky.folds.front().participant == "P01");
  CHECK(clean.macro.at("auroc").mean < 0.75);
  CHECK(leaky.folds.front().metrics.auroc > 0.95);
}
