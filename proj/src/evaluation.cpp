#include "gazesense/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include <json.hpp>

#include "gazesense/error.hpp"
#include "gazesense/parallel.hpp"
#include "json_util.hpp"
#include "text_util.hpp"

namespace gazesense::evaluation {

using nlohmann::json;

namespace {

void check_binary(const std::vector<double>& scores, const std::vector<int>& labels) {
  if (scores.size() != labels.size()) throw Error(ErrorCode::LengthMismatch, "scores and labels differ in length");
  for (int y : labels) {
    if (y != 0 && y != 1) throw Error(ErrorCode::BadParams, "binary labels must be 0 or 1");
  }
}

std::vector<std::string> class_names(model::Task task) {
  switch (task) {
    case model::Task::EarlyWarning: return {"sober", "alcohol"};
    case model::Task::AboveLimit: return {"below_limit", "above_limit"};
    case model::Task::Multiclass: return {"no_alcohol", "moderate", "severe"};
  }
  return {};
}

std::vector<int> decisions(const std::vector<double>& scores, int classes) {
  if (classes == 2) {
    std::vector<int> d(scores.size());
    for (std::size_t i = 0; i < scores.size(); ++i) d[i] = scores[i] >= 0.5 ? 1 : 0;
    return d;
  }
  const auto k = static_cast<std::size_t>(classes);
  std::vector<int> d(scores.size() / k);
  for (std::size_t i = 0; i < d.size(); ++i) {
    const auto first = scores.begin() + static_cast<std::ptrdiff_t>(i * k);
    d[i] = static_cast<int>(std::max_element(first, first + static_cast<std::ptrdiff_t>(k)) - first);
  }
  return d;
}

Confusion make_confusion(std::vector<std::string> rows, std::vector<std::string> cols) {
  Confusion c;
  c.row_labels = std::move(rows);
  c.col_labels = std::move(cols);
  c.counts.assign(c.row_labels.size(), std::vector<double>(c.col_labels.size(), 0.0));
  return c;
}

void normalise(Confusion& c) {
  c.rates = c.counts;
  for (auto& row : c.rates) {
    const double total = std::accumulate(row.begin(), row.end(), 0.0);
    for (auto& v : row) v = total > 0.0 ? v / total : 0.0;
  }
}

json metrics_json(const Metrics& m) {
  json j;
  for (auto name : kMetricNames) j[std::string(name)] = metric_value(m, name);
  return j;
}

Metrics metrics_from_json(const json& j) {
  Metrics m;
  m.auroc = j.at("auroc").get<double>();
  m.auprc = j.at("auprc").get<double>();
  m.balanced_accuracy = j.at("balanced_accuracy").get<double>();
  m.f1_weighted = j.at("f1_weighted").get<double>();
  return m;
}

json macro_json(const std::map<std::string, MacroStat>& m) {
  json j = json::object();
  for (const auto& [k, v] : m) j[k] = {{"mean", v.mean}, {"sd", v.sd}, {"n", v.n}};
  return j;
}

std::map<std::string, MacroStat> macro_from_json(const json& j) {
  std::map<std::string, MacroStat> m;
  for (const auto& [k, v] : j.items()) m[k] = {v.at("mean").get<double>(), v.at("sd").get<double>(), v.at("n").get<std::size_t>()};
  return m;
}

json confusion_json(const Confusion& c) {
  return {{"rows", c.row_labels}, {"cols", c.col_labels}, {"counts", c.counts}, {"rates", c.rates}};
}

Confusion confusion_from_json(const json& j) {
  Confusion c;
  c.row_labels = j.at("rows").get<std::vector<std::string>>();
  c.col_labels = j.at("cols").get<std::vector<std::string>>();
  c.counts = j.at("counts").get<std::vector<std::vector<double>>>();
  c.rates = j.at("rates").get<std::vector<std::vector<double>>>();
  return c;
}

std::string pm(const MacroStat& s) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f ± %.2f", s.mean, s.sd);
  return buf;
}

}  // namespace

std::string_view to_string(Scheme s) { return s == Scheme::Loso ? "loso" : "loso_lodso"; }

Scheme parse_scheme(std::string_view s) {
  if (s == "loso") return Scheme::Loso;
  if (s == "loso_lodso") return Scheme::LosoLodso;
  throw Error(ErrorCode::BadConfig, "unknown scheme '" + std::string(s) + "'");
}

std::vector<Fold> loso_folds(const windowing::FeatureMatrix& m) {
  std::set<std::string> ids;
  for (const auto& r : m.rows) ids.insert(r.participant_id);
  if (ids.size() < 2) throw Error(ErrorCode::TooFewParticipants, "LOSO needs at least two participants");
  std::vector<Fold> folds;
  for (const auto& id : ids) {
    Fold f;
    f.participant = id;
    for (std::size_t i = 0; i < m.rows.size(); ++i) (m.rows[i].participant_id == id ? f.test : f.train).push_back(i);
    folds.push_back(std::move(f));
  }
  return folds;
}

std::vector<Fold> loso_lodso_folds(const windowing::FeatureMatrix& m) {
  std::set<std::string> ids;
  std::set<Scenario> scenarios;
  for (const auto& r : m.rows) {
    ids.insert(r.participant_id);
    scenarios.insert(r.scenario);
  }
  if (ids.size() < 2) throw Error(ErrorCode::TooFewParticipants, "LOSO needs at least two participants");
  if (scenarios.size() < 2) throw Error(ErrorCode::MissingScenario, "leave-one-scenario-out needs at least two scenarios");
  std::vector<Fold> folds;
  for (const auto& id : ids) {
    for (Scenario s : scenarios) {
      Fold f;
      f.participant = id;
      f.scenario = s;
      for (std::size_t i = 0; i < m.rows.size(); ++i) {
        const auto& r = m.rows[i];
        if (r.participant_id == id && r.scenario == s) f.test.push_back(i);
        else if (r.participant_id != id && r.scenario != s) f.train.push_back(i);
      }
      if (f.test.empty()) continue;  // participant never drove this scenario
      folds.push_back(std::move(f));
    }
  }
  return folds;
}

std::vector<Fold> make_folds(const windowing::FeatureMatrix& m, Scheme scheme) {
  return scheme == Scheme::Loso ? loso_folds(m) : loso_lodso_folds(m);
}

bool fold_is_clean(const windowing::FeatureMatrix& m, const Fold& fold) {
  std::set<std::string> test_ids;
  std::set<Scenario> test_scen;
  for (auto i : fold.test) {
    test_ids.insert(m.rows.at(i).participant_id);
    test_scen.insert(m.rows.at(i).scenario);
  }
  for (auto i : fold.train) {
    const auto& r = m.rows.at(i);
    if (test_ids.count(r.participant_id)) return false;
    if (fold.scenario && test_scen.count(r.scenario)) return false;
  }
  return true;
}

double auroc(const std::vector<double>& scores, const std::vector<int>& labels) {
  check_binary(scores, labels);
  const std::size_t n = scores.size();
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](auto a, auto b) { return scores[a] < scores[b]; });
  double pos_rank_sum = 0.0;
  double n_pos = 0.0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && scores[idx[j]] == scores[idx[i]]) ++j;
    const double mid = 0.5 * static_cast<double>(i + 1 + j);  // mean of ranks i+1..j
    for (std::size_t k = i; k < j; ++k) {
      if (labels[idx[k]] == 1) {
        pos_rank_sum += mid;
        n_pos += 1.0;
      }
    }
    i = j;
  }
  const double n_neg = static_cast<double>(n) - n_pos;
  if (n_pos == 0.0 || n_neg == 0.0) throw Error(ErrorCode::SingleClass, "AUROC needs both classes");
  return (pos_rank_sum - n_pos * (n_pos + 1.0) / 2.0) / (n_pos * n_neg);
}

double auprc(const std::vector<double>& scores, const std::vector<int>& labels) {
  check_binary(scores, labels);
  const double n_pos = static_cast<double>(std::count(labels.begin(), labels.end(), 1));
  if (n_pos == 0.0) throw Error(ErrorCode::NoPositives, "AUPRC needs at least one positive");
  const std::size_t n = scores.size();
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](auto a, auto b) { return scores[a] > scores[b]; });
  double tp = 0.0, fp = 0.0, ap = 0.0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    double dtp = 0.0;
    while (j < n && scores[idx[j]] == scores[idx[i]]) {
      if (labels[idx[j]] == 1) dtp += 1.0;
      else fp += 1.0;
      ++j;
    }
    tp += dtp;
    if (dtp > 0.0) ap += (dtp / n_pos) * (tp / (tp + fp));
    i = j;
  }
  return ap;
}

double balanced_accuracy(const std::vector<int>& preds, const std::vector<int>& labels) {
  if (preds.size() != labels.size()) throw Error(ErrorCode::LengthMismatch, "preds and labels differ in length");
  std::map<int, std::pair<double, double>> per;  // class -> (hits, count)
  for (std::size_t i = 0; i < labels.size(); ++i) {
    auto& [hit, cnt] = per[labels[i]];
    cnt += 1.0;
    hit += preds[i] == labels[i] ? 1.0 : 0.0;
  }
  if (per.size() < 2) throw Error(ErrorCode::SingleClass, "balanced accuracy needs at least two classes");
  double s = 0.0;
  for (const auto& [c, hc] : per) s += hc.first / hc.second;
  return s / static_cast<double>(per.size());
}

double f1_weighted(const std::vector<int>& preds, const std::vector<int>& labels) {
  if (preds.size() != labels.size()) throw Error(ErrorCode::LengthMismatch, "preds and labels differ in length");
  if (labels.empty()) throw Error(ErrorCode::Empty, "no labels");
  std::map<int, double> support, tp, pred_count;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    support[labels[i]] += 1.0;
    pred_count[preds[i]] += 1.0;
    if (preds[i] == labels[i]) tp[labels[i]] += 1.0;
  }
  double s = 0.0;
  for (const auto& [c, sup] : support) {
    const double t = tp[c];
    const double denom = sup + pred_count[c];  // 2TP + FP + FN
    const double f1 = denom > 0.0 ? 2.0 * t / denom : 0.0;
    s += sup * f1;
  }
  return s / static_cast<double>(labels.size());
}

double metric_value(const Metrics& m, std::string_view name) {
  if (name == "auroc") return m.auroc;
  if (name == "auprc") return m.auprc;
  if (name == "balanced_accuracy") return m.balanced_accuracy;
  if (name == "f1_weighted") return m.f1_weighted;
  throw Error(ErrorCode::BadParams, "unknown metric '" + std::string(name) + "'");
}

Metrics compute_metrics(const std::vector<double>& scores, const std::vector<int>& labels, int classes) {
  Metrics m;
  const auto preds = decisions(scores, classes);
  if (preds.size() != labels.size()) throw Error(ErrorCode::LengthMismatch, "scores and labels differ in length");
  m.balanced_accuracy = balanced_accuracy(preds, labels);
  m.f1_weighted = f1_weighted(preds, labels);
  if (classes == 2) {
    m.auroc = auroc(scores, labels);
    m.auprc = auprc(scores, labels);
    return m;
  }
  const auto k = static_cast<std::size_t>(classes);
  std::vector<double> s(labels.size());
  std::vector<int> y(labels.size());
  for (std::size_t c = 0; c < k; ++c) {
    for (std::size_t i = 0; i < labels.size(); ++i) {
      s[i] = scores[i * k + c];
      y[i] = labels[i] == static_cast<int>(c) ? 1 : 0;
    }
    m.auroc += auroc(s, y) / static_cast<double>(k);
    m.auprc += auprc(s, y) / static_cast<double>(k);
  }
  return m;
}

MacroStat macro(const std::vector<double>& values) {
  MacroStat s;
  s.n = values.size();
  if (values.empty()) return s;
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.sd = std::sqrt(ss / static_cast<double>(values.size() - 1));
  }
  return s;
}

EvaluationReport evaluate(const windowing::FeatureMatrix& m, const EvaluateOptions& opts) {
  opts.config.validate();
  if (m.rows.empty()) throw Error(ErrorCode::EmptyMatrix, "feature matrix has no rows");
  const int classes = model::class_count(opts.task);
  const auto k = static_cast<std::size_t>(classes);

  std::vector<int> labels(m.rows.size());
  for (std::size_t i = 0; i < m.rows.size(); ++i) labels[i] = model::label_of(opts.task, m.rows[i]);
  if (opts.permute_labels) {
    std::mt19937_64 rng(opts.seed);
    for (std::size_t i = labels.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(rng() % i);
      std::swap(labels[i - 1], labels[j]);
    }
  }

  const auto folds = make_folds(m, opts.scheme);
  for (const auto& f : folds) {
    if (!fold_is_clean(m, f)) throw Error(ErrorCode::BadParams, "fold leaks the held-out participant");
  }

  struct Scored {
    FoldResult result;
    std::vector<double> scores;
    std::vector<model::Coefficient> coefs;
  };
  std::vector<Scored> out(folds.size());
  parallel_for(folds.size(), opts.jobs, [&](std::size_t fi) {
    const auto& fold = folds[fi];
    auto& o = out[fi];
    const auto mdl = model::train(m, fold.train, opts.task, opts.config, &labels);
    o.scores = model::predict_matrix(mdl, m, fold.test);
    o.coefs = model::coefficients(mdl);
    auto& r = o.result;
    r.participant = fold.participant;
    r.scenario = fold.scenario;
    r.train_rows = fold.train.size();
    r.test_rows = fold.test.size();
    r.weights = mdl.weights;
    r.intercepts = mdl.intercepts;
    r.iterations = mdl.iterations;
    r.converged = mdl.converged;
    std::vector<int> y(fold.test.size());
    for (std::size_t i = 0; i < y.size(); ++i) y[i] = labels[fold.test[i]];
    r.metrics = compute_metrics(o.scores, y, classes);

    std::map<Scenario, std::vector<std::size_t>> slices;
    for (std::size_t i = 0; i < fold.test.size(); ++i) slices[m.rows[fold.test[i]].scenario].push_back(i);
    for (const auto& [scen, idx] : slices) {
      std::vector<double> s;
      std::vector<int> ys;
      std::set<int> present;
      for (auto i : idx) {
        s.insert(s.end(), o.scores.begin() + static_cast<std::ptrdiff_t>(i * (classes == 2 ? 1 : k)),
                 o.scores.begin() + static_cast<std::ptrdiff_t>((i + 1) * (classes == 2 ? 1 : k)));
        ys.push_back(y[i]);
        present.insert(y[i]);
      }
      if (static_cast<int>(present.size()) < classes) continue;
      r.per_scenario[scen] = compute_metrics(s, ys, classes);
    }
  });

  EvaluationReport rep;
  rep.scheme = opts.scheme;
  rep.task = opts.task;
  rep.config = opts.config;
  rep.permuted_labels = opts.permute_labels;
  rep.feature_names = m.feature_names;

  const auto names = class_names(opts.task);
  rep.confusion = make_confusion(names, names);
  rep.confusion_actual = make_confusion({"no_alcohol", "moderate", "severe"}, names);
  std::vector<std::pair<std::string, double>> share_sum;
  std::size_t share_folds = 0;

  for (std::size_t fi = 0; fi < folds.size(); ++fi) {
    const auto& fold = folds[fi];
    auto& o = out[fi];
    const std::size_t per_row = classes == 2 ? 1 : k;
    const auto preds = decisions(o.scores, classes);
    for (std::size_t i = 0; i < fold.test.size(); ++i) {
      const auto& row = m.rows[fold.test[i]];
      ScoredRow sr;
      sr.fold = fi;
      sr.participant_id = row.participant_id;
      sr.trip_id = row.trip_id;
      sr.scenario = row.scenario;
      sr.block = row.block;
      sr.bac_gdl = row.bac_gdl;
      sr.window_end_s = row.window_end_s;
      sr.label = labels[fold.test[i]];
      sr.scores.assign(o.scores.begin() + static_cast<std::ptrdiff_t>(i * per_row),
                       o.scores.begin() + static_cast<std::ptrdiff_t>((i + 1) * per_row));
      rep.confusion.counts[static_cast<std::size_t>(sr.label)][static_cast<std::size_t>(preds[i])] += 1.0;
      rep.confusion_actual.counts[static_cast<std::size_t>(row.block)][static_cast<std::size_t>(preds[i])] += 1.0;
      rep.scores.push_back(std::move(sr));
    }
    const auto gi = model::group_importance(o.coefs);
    if (!gi.degenerate) {
      ++share_folds;
      for (const auto& [g, v] : gi.shares) {
        auto it = std::find_if(share_sum.begin(), share_sum.end(), [&](const auto& p) { return p.first == g; });
        if (it == share_sum.end()) share_sum.emplace_back(g, v);
        else it->second += v;
      }
    }
    rep.folds.push_back(std::move(o.result));
  }
  normalise(rep.confusion);
  normalise(rep.confusion_actual);
  for (auto& [g, v] : share_sum) rep.group_importance.emplace_back(g, v / static_cast<double>(share_folds));

  for (auto name : kMetricNames) {
    std::vector<double> v;
    for (const auto& f : rep.folds) v.push_back(metric_value(f.metrics, name));
    rep.macro[std::string(name)] = macro(v);
    std::map<Scenario, std::vector<double>> by_scen;
    for (const auto& f : rep.folds) {
      for (const auto& [s, mt] : f.per_scenario) by_scen[s].push_back(metric_value(mt, name));
    }
    for (const auto& [s, vals] : by_scen) rep.per_scenario[s][std::string(name)] = macro(vals);
  }
  return rep;
}

std::string report_to_json(const EvaluationReport& r) {
  json j;
  j["schema_version"] = EvaluationReport::kSchemaVersion;
  j["scheme"] = to_string(r.scheme);
  j["task"] = model::to_string(r.task);
  j["config"] = detail::train_config_json(r.config);
  j["permuted_labels"] = r.permuted_labels;

  json folds = json::array();
  for (const auto& f : r.folds) {
    json fj;
    fj["participant"] = f.participant;
    fj["scenario"] = f.scenario ? json(to_string(*f.scenario)) : json(nullptr);
    fj["train_rows"] = f.train_rows;
    fj["test_rows"] = f.test_rows;
    fj["metrics"] = metrics_json(f.metrics);
    json ps = json::object();
    for (const auto& [s, mt] : f.per_scenario) ps[std::string(to_string(s))] = metrics_json(mt);
    fj["per_scenario"] = ps;
    fj["iterations"] = f.iterations;
    fj["converged"] = f.converged;
    folds.push_back(fj);
  }
  j["per_fold"] = folds;
  j["macro"] = macro_json(r.macro);
  json ps = json::object();
  for (const auto& [s, mm] : r.per_scenario) ps[std::string(to_string(s))] = macro_json(mm);
  j["per_scenario"] = ps;
  j["confusion"] = {{"label", confusion_json(r.confusion)}, {"actual_level", confusion_json(r.confusion_actual)}};

  json coef_folds = json::array();
  for (const auto& f : r.folds) {
    std::vector<std::vector<double>> w(static_cast<std::size_t>(f.weights.rows()));
    for (Eigen::Index k = 0; k < f.weights.rows(); ++k) {
      for (Eigen::Index c = 0; c < f.weights.cols(); ++c) w[static_cast<std::size_t>(k)].push_back(f.weights(k, c));
    }
    coef_folds.push_back({{"intercepts", std::vector<double>(f.intercepts.data(), f.intercepts.data() + f.intercepts.size())},
                          {"weights", w}});
  }
  j["coefficients"] = {{"features", r.feature_names}, {"folds", coef_folds}};
  json gi = json::array();
  for (const auto& [g, v] : r.group_importance) gi.push_back({{"group", g}, {"share", v}});
  j["group_importance"] = gi;

  json cols = {"fold", "participant_id", "trip_id", "scenario", "block", "bac_gdl", "window_end_s", "label"};
  const std::size_t per_row = r.scores.empty() ? 1 : r.scores.front().scores.size();
  if (per_row == 1) {
    cols.push_back("score");
  } else {
    for (const auto& n : class_names(r.task)) cols.push_back("p_" + n);
  }
  json rows = json::array();
  for (const auto& s : r.scores) {
    json row = {s.fold, s.participant_id, s.trip_id, to_string(s.scenario), to_string(s.block), s.bac_gdl,
                s.window_end_s, s.label};
    for (double v : s.scores) row.push_back(v);
    rows.push_back(std::move(row));
  }
  j["scores"] = {{"columns", cols}, {"rows", rows}};
  return j.dump(1);
}

EvaluationReport report_from_json(const std::string& text) {
  try {
    const json j = json::parse(text);
    if (j.at("schema_version").get<int>() != EvaluationReport::kSchemaVersion) {
      throw Error(ErrorCode::BadConfig, "unsupported report schema_version");
    }
    EvaluationReport r;
    r.scheme = parse_scheme(j.at("scheme").get<std::string>());
    r.task = model::parse_task(j.at("task").get<std::string>());
    r.config = detail::train_config_from_json(j.at("config"));
    r.permuted_labels = j.at("permuted_labels").get<bool>();
    r.feature_names = j.at("coefficients").at("features").get<std::vector<std::string>>();
    const auto& coef_folds = j.at("coefficients").at("folds");
    const auto& folds = j.at("per_fold");
    if (coef_folds.size() != folds.size()) throw Error(ErrorCode::BadConfig, "coefficient and fold counts differ");
    for (std::size_t i = 0; i < folds.size(); ++i) {
      const auto& fj = folds[i];
      FoldResult f;
      f.participant = fj.at("participant").get<std::string>();
      if (!fj.at("scenario").is_null()) f.scenario = parse_scenario(fj.at("scenario").get<std::string>());
      f.train_rows = fj.at("train_rows").get<std::size_t>();
      f.test_rows = fj.at("test_rows").get<std::size_t>();
      f.metrics = metrics_from_json(fj.at("metrics"));
      for (const auto& [s, mt] : fj.at("per_scenario").items()) f.per_scenario[parse_scenario(s)] = metrics_from_json(mt);
      f.iterations = fj.at("iterations").get<int>();
      f.converged = fj.at("converged").get<bool>();
      const auto w = coef_folds[i].at("weights").get<std::vector<std::vector<double>>>();
      const auto b = coef_folds[i].at("intercepts").get<std::vector<double>>();
      f.weights.resize(static_cast<Eigen::Index>(w.size()), static_cast<Eigen::Index>(r.feature_names.size()));
      for (std::size_t k = 0; k < w.size(); ++k) {
        if (w[k].size() != r.feature_names.size()) throw Error(ErrorCode::BadConfig, "coefficient row width mismatch");
        for (std::size_t c = 0; c < w[k].size(); ++c) f.weights(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(c)) = w[k][c];
      }
      f.intercepts = Eigen::Map<const Eigen::VectorXd>(b.data(), static_cast<Eigen::Index>(b.size()));
      r.folds.push_back(std::move(f));
    }
    r.macro = macro_from_json(j.at("macro"));
    for (const auto& [s, mm] : j.at("per_scenario").items()) r.per_scenario[parse_scenario(s)] = macro_from_json(mm);
    r.confusion = confusion_from_json(j.at("confusion").at("label"));
    r.confusion_actual = confusion_from_json(j.at("confusion").at("actual_level"));
    for (const auto& g : j.at("group_importance")) {
      r.group_importance.emplace_back(g.at("group").get<std::string>(), g.at("share").get<double>());
    }
    const auto& sj = j.at("scores");
    const std::size_t ncols = sj.at("columns").size();
    if (ncols < 9) throw Error(ErrorCode::BadConfig, "score table has too few columns");
    for (const auto& row : sj.at("rows")) {
      if (row.size() != ncols) throw Error(ErrorCode::BadConfig, "score row has the wrong width");
      ScoredRow s;
      s.fold = row[0].get<std::size_t>();
      s.participant_id = row[1].get<std::string>();
      s.trip_id = row[2].get<std::string>();
      s.scenario = parse_scenario(row[3].get<std::string>());
      s.block = parse_block(row[4].get<std::string>());
      s.bac_gdl = row[5].get<double>();
      s.window_end_s = row[6].get<double>();
      s.label = row[7].get<int>();
      for (std::size_t c = 8; c < ncols; ++c) s.scores.push_back(row[c].get<double>());
      r.scores.push_back(std::move(s));
    }
    return r;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::BadConfig, std::string("invalid report JSON: ") + e.what());
  }
}

void save_report(const std::filesystem::path& path, const EvaluationReport& r) {
  detail::write_file(path, report_to_json(r) + "\n");
}

EvaluationReport load_report(const std::filesystem::path& path) {
  const auto text = detail::read_file(path);
  try {
    return report_from_json(text);
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.what());
  }
}

std::string report_to_csv(const EvaluationReport& r) {
  std::string out = "scheme,task,participant,scenario";
  for (auto name : kMetricNames) {
    out += ',';
    out += name;
  }
  out += '\n';
  auto line = [&](std::string_view who, std::string_view scen, auto&& value) {
    out += to_string(r.scheme);
    out += ',';
    out += model::to_string(r.task);
    out += ',';
    out += who;
    out += ',';
    out += scen;
    for (auto name : kMetricNames) {
      out += ',';
      detail::append_exact(out, value(name));
    }
    out += '\n';
  };
  for (const auto& f : r.folds) {
    line(f.participant, f.scenario ? to_string(*f.scenario) : "all", [&](auto n) { return metric_value(f.metrics, n); });
  }
  line("macro", "all", [&](auto n) { return r.macro.at(std::string(n)).mean; });
  for (const auto& [s, mm] : r.per_scenario) {
    line("macro", to_string(s), [&](auto n) { return mm.at(std::string(n)).mean; });
  }
  return out;
}

std::string report_summary(const EvaluationReport& r) {
  std::ostringstream os;
  os << "task " << model::to_string(r.task) << ", scheme " << to_string(r.scheme) << ", " << r.folds.size()
     << " folds, " << r.scores.size() << " scored windows" << (r.permuted_labels ? " (permuted labels)" : "") << "\n\n";
  char buf[160];
  std::snprintf(buf, sizeof buf, "%-10s %-13s %-13s %-18s %-13s\n", "", "AUROC", "AUPRC", "balanced acc.", "F1 (weighted)");
  os << buf;
  auto row = [&](std::string_view name, const std::map<std::string, MacroStat>& mm) {
    std::snprintf(buf, sizeof buf, "%-10s %-13s %-13s %-18s %-13s\n", std::string(name).c_str(), pm(mm.at("auroc")).c_str(),
                  pm(mm.at("auprc")).c_str(), pm(mm.at("balanced_accuracy")).c_str(), pm(mm.at("f1_weighted")).c_str());
    os << buf;
  };
  row("overall", r.macro);
  for (const auto& [s, mm] : r.per_scenario) row(to_string(s), mm);
  if (!r.group_importance.empty()) {
    os << "\nfeature group shares:";
    for (const auto& [g, v] : r.group_importance) {
      std::snprintf(buf, sizeof buf, " %s %.3f", g.c_str(), v);
      os << buf;
    }
    os << '\n';
  }
  const auto unconverged = std::count_if(r.folds.begin(), r.folds.end(), [](const auto& f) { return !f.converged; });
  if (unconverged > 0) os << "\nwarning: " << unconverged << " fold model(s) hit max_iter before converging\n";
  return os.str();
}

}  // namespace gazesense::evaluation
