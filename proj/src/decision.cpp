#include "gazesense/decision.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <set>

#include <json.hpp>

#include "gazesense/error.hpp"
#include "text_util.hpp"

namespace gazesense::decision {

using nlohmann::json;

namespace {

double percentile(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  const double h = (static_cast<double>(v.size()) - 1.0) * q;
  const auto k = static_cast<std::size_t>(h);
  if (k + 1 >= v.size()) return v.back();
  return v[k] + (h - static_cast<double>(k)) * (v[k + 1] - v[k]);
}

// Balanced accuracy of decisions with per-trip multiplicities; NaN when a
// class is absent.
double weighted_balanced_accuracy(const std::vector<int>& dec, const std::vector<int>& label,
                                  const std::vector<double>& mult) {
  double hit[2] = {0, 0}, cnt[2] = {0, 0};
  for (std::size_t i = 0; i < dec.size(); ++i) {
    if (dec[i] < 0 || mult[i] == 0.0) continue;
    cnt[label[i]] += mult[i];
    hit[label[i]] += dec[i] == label[i] ? mult[i] : 0.0;
  }
  if (cnt[0] == 0.0 || cnt[1] == 0.0) return std::nan("");
  return 0.5 * (hit[0] / cnt[0] + hit[1] / cnt[1]);
}

}  // namespace

void TripScoreSeries::validate() const {
  if (prob.empty()) throw Error(ErrorCode::Empty, "trip '" + trip_id + "' has no scores");
  if (prob.size() != window_end_s.size()) throw Error(ErrorCode::LengthMismatch, "scores and times differ in length");
  for (std::size_t i = 1; i < window_end_s.size(); ++i) {
    if (!(window_end_s[i] > window_end_s[i - 1])) {
      throw Error(ErrorCode::NonMonotonicTime, "window times of trip '" + trip_id + "' are not increasing");
    }
  }
}

std::vector<TripScoreSeries> trip_series(const evaluation::EvaluationReport& report) {
  if (report.scores.empty()) throw Error(ErrorCode::MissingScores, "report carries no per-window scores");
  if (report.task == model::Task::Multiclass) {
    throw Error(ErrorCode::BadParams, "decision analysis needs a binary task");
  }
  std::vector<TripScoreSeries> out;
  std::map<std::string, std::size_t> index;
  std::vector<std::vector<std::pair<double, double>>> pts;
  for (const auto& r : report.scores) {
    auto [it, inserted] = index.emplace(r.trip_id, out.size());
    if (inserted) {
      TripScoreSeries s;
      s.trip_id = r.trip_id;
      s.participant_id = r.participant_id;
      s.fold = r.fold;
      s.scenario = r.scenario;
      s.block = r.block;
      s.label = r.label;
      out.push_back(std::move(s));
      pts.emplace_back();
    }
    if (r.scores.size() != 1) throw Error(ErrorCode::MissingScores, "score row without a single probability");
    pts[it->second].emplace_back(r.window_end_s, r.scores[0]);
  }
  for (std::size_t i = 0; i < out.size(); ++i) {
    std::stable_sort(pts[i].begin(), pts[i].end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    for (const auto& [t, p] : pts[i]) {
      out[i].window_end_s.push_back(t);
      out[i].prob.push_back(p);
    }
    out[i].validate();
  }
  return out;
}

TripScoreSeries cumulative_moving_average(const TripScoreSeries& s) {
  s.validate();
  TripScoreSeries out = s;
  // Incremental form: a constant series stays exactly constant.
  double mean = 0.0;
  for (std::size_t i = 0; i < s.prob.size(); ++i) {
    mean += (s.prob[i] - mean) / static_cast<double>(i + 1);
    out.prob[i] = mean;
  }
  return out;
}

std::vector<CurvePoint> decision_time_curve(const std::vector<TripScoreSeries>& cma, const CurveOptions& opts) {
  if (cma.empty()) throw Error(ErrorCode::InsufficientTrips, "no trips");
  if (opts.resamples < 1 || !(opts.confidence > 0.0 && opts.confidence < 1.0)) {
    throw Error(ErrorCode::BadParams, "bad bootstrap settings");
  }
  double t_end = 0.0;
  for (const auto& s : cma) {
    s.validate();
    t_end = std::max(t_end, s.window_end_s.back());
  }
  std::vector<double> times;
  for (double t = opts.first_t_s; t <= t_end + 1e-9; t += 1.0) times.push_back(t);
  if (times.empty()) throw Error(ErrorCode::InsufficientTrips, "no window ends after the first decision time");

  const std::size_t nt = cma.size();
  std::vector<int> labels(nt);
  for (std::size_t j = 0; j < nt; ++j) labels[j] = cma[j].label;

  // decisions[ti][trip]: -1 while the trip has no closed window yet.
  std::vector<std::vector<int>> decisions(times.size(), std::vector<int>(nt, -1));
  for (std::size_t j = 0; j < nt; ++j) {
    const auto& s = cma[j];
    std::size_t k = 0;
    for (std::size_t ti = 0; ti < times.size(); ++ti) {
      while (k < s.window_end_s.size() && s.window_end_s[k] <= times[ti] + 1e-9) ++k;
      if (k > 0) decisions[ti][j] = s.prob[k - 1] >= 0.5 ? 1 : 0;
    }
  }

  std::vector<std::string> participants;
  std::vector<std::size_t> owner(nt);
  {
    std::map<std::string, std::size_t> pid;
    for (std::size_t j = 0; j < nt; ++j) {
      auto [it, inserted] = pid.emplace(cma[j].participant_id, participants.size());
      if (inserted) participants.push_back(cma[j].participant_id);
      owner[j] = it->second;
    }
  }

  std::vector<CurvePoint> curve(times.size());
  const std::vector<double> ones(nt, 1.0);
  for (std::size_t ti = 0; ti < times.size(); ++ti) {
    int per_class[2] = {0, 0};
    for (std::size_t j = 0; j < nt; ++j) {
      if (decisions[ti][j] >= 0) ++per_class[labels[j]];
    }
    if (per_class[0] < 2 || per_class[1] < 2) {
      throw Error(ErrorCode::InsufficientTrips, "fewer than two trips per class at t = " + std::to_string(times[ti]));
    }
    curve[ti].t_s = times[ti];
    curve[ti].balanced_accuracy = weighted_balanced_accuracy(decisions[ti], labels, ones);
  }

  std::mt19937_64 rng(opts.seed);
  const auto np = participants.size();
  std::vector<std::vector<double>> boot(times.size());
  std::vector<double> count(np), mult(nt);
  for (int r = 0; r < opts.resamples; ++r) {
    std::fill(count.begin(), count.end(), 0.0);
    for (std::size_t k = 0; k < np; ++k) count[static_cast<std::size_t>(rng() % np)] += 1.0;
    for (std::size_t j = 0; j < nt; ++j) mult[j] = count[owner[j]];
    for (std::size_t ti = 0; ti < times.size(); ++ti) {
      const double ba = weighted_balanced_accuracy(decisions[ti], labels, mult);
      if (!std::isnan(ba)) boot[ti].push_back(ba);
    }
  }
  const double alpha = 0.5 * (1.0 - opts.confidence);
  for (std::size_t ti = 0; ti < times.size(); ++ti) {
    if (boot[ti].empty()) {
      curve[ti].ci_low = curve[ti].ci_high = curve[ti].balanced_accuracy;
      continue;
    }
    curve[ti].ci_low = percentile(boot[ti], alpha);
    curve[ti].ci_high = percentile(boot[ti], 1.0 - alpha);
  }
  return curve;
}

std::vector<GroupRow> majority_vote_groups(const TripScoreSeries& s, int group_size) {
  if (group_size < 1) throw Error(ErrorCode::BadGroupSize, "group size must be >= 1");
  s.validate();
  std::vector<GroupRow> out;
  const auto g = static_cast<std::size_t>(group_size);
  for (std::size_t start = 0; start < s.prob.size(); start += g) {
    GroupRow row;
    row.first_window = start;
    row.size = std::min(g, s.prob.size() - start);
    double sum = 0.0;
    for (std::size_t i = start; i < start + row.size; ++i) {
      sum += s.prob[i];
      row.votes += s.prob[i] >= 0.5 ? 1 : 0;
    }
    row.score = sum / static_cast<double>(row.size);
    row.decision = 2 * static_cast<std::size_t>(row.votes) >= row.size ? 1 : 0;
    row.window_end_s = s.window_end_s[start + row.size - 1];
    out.push_back(row);
  }
  return out;
}

std::vector<SweepRow> majority_vote_sweep(const std::vector<TripScoreSeries>& series,
                                          const std::vector<int>& group_sizes) {
  if (series.empty()) throw Error(ErrorCode::MissingScores, "no trips to aggregate");
  std::vector<SweepRow> out;
  for (int gs : group_sizes) {
    std::map<std::size_t, std::vector<double>> scores;
    std::map<std::size_t, std::vector<int>> votes, labels;
    for (const auto& s : series) {
      for (const auto& g : majority_vote_groups(s, gs)) {
        scores[s.fold].push_back(g.score);
        votes[s.fold].push_back(g.decision);
        labels[s.fold].push_back(s.label);
      }
    }
    std::map<std::string, std::vector<double>> values;
    for (const auto& [fold, y] : labels) {
      const std::set<int> present(y.begin(), y.end());
      if (present.size() < 2) continue;
      values["auroc"].push_back(evaluation::auroc(scores[fold], y));
      values["auprc"].push_back(evaluation::auprc(scores[fold], y));
      values["balanced_accuracy"].push_back(evaluation::balanced_accuracy(votes[fold], y));
      values["f1_weighted"].push_back(evaluation::f1_weighted(votes[fold], y));
    }
    SweepRow row;
    row.group_size = gs;
    for (auto name : evaluation::kMetricNames) row.macro[std::string(name)] = evaluation::macro(values[std::string(name)]);
    out.push_back(std::move(row));
  }
  return out;
}

std::string curve_to_csv(const std::vector<CurvePoint>& curve) {
  std::string out = "t_s,balanced_accuracy,ci_low,ci_high\n";
  for (const auto& p : curve) {
    detail::append_exact(out, p.t_s);
    out += ',';
    detail::append_exact(out, p.balanced_accuracy);
    out += ',';
    detail::append_exact(out, p.ci_low);
    out += ',';
    detail::append_exact(out, p.ci_high);
    out += '\n';
  }
  return out;
}

std::string sweep_to_csv(const std::vector<SweepRow>& sweep) {
  std::string out = "group_size";
  for (auto name : evaluation::kMetricNames) {
    out += ',';
    out += name;
    out += "_mean,";
    out += name;
    out += "_sd";
  }
  out += ",folds\n";
  for (const auto& r : sweep) {
    out += std::to_string(r.group_size);
    std::size_t n = 0;
    for (auto name : evaluation::kMetricNames) {
      const auto& m = r.macro.at(std::string(name));
      out += ',';
      detail::append_exact(out, m.mean);
      out += ',';
      detail::append_exact(out, m.sd);
      n = m.n;
    }
    out += ',' + std::to_string(n) + '\n';
  }
  return out;
}

std::string decision_to_json(const std::vector<CurvePoint>& curve, const std::vector<SweepRow>& sweep) {
  json j;
  json c = json::array();
  for (const auto& p : curve) c.push_back({{"t_s", p.t_s}, {"balanced_accuracy", p.balanced_accuracy},
                                           {"ci_low", p.ci_low}, {"ci_high", p.ci_high}});
  j["curve"] = c;
  json s = json::array();
  for (const auto& r : sweep) {
    json row = {{"group_size", r.group_size}};
    for (const auto& [k, v] : r.macro) row[k] = {{"mean", v.mean}, {"sd", v.sd}, {"n", v.n}};
    s.push_back(row);
  }
  j["majority_vote"] = s;
  return j.dump(1);
}

}  // namespace gazesense::decision
