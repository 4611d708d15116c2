#include "gazesense/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <json.hpp>

#include "gazesense/error.hpp"
#include "json_util.hpp"
#include "text_util.hpp"

namespace gazesense::model {

using nlohmann::json;

namespace {

constexpr int kFormatVersion = 1;
constexpr int kMaxInnerSweeps = 2000;
constexpr int kMaxBacktracks = 60;
constexpr double kArmijo = 1e-4;
// The curvature matrix is the dominant cost (n p^2); between refreshes the
// last one is reused, which keeps every step a descent step.
constexpr int kHessianRefresh = 4;

double softplus(double z) { return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

double soft_threshold(double z, double g) {
  if (z > g) return z - g;
  if (z < -g) return z + g;
  return 0.0;
}

struct PenaltyWeights {
  double l1 = 0.0;
  double l2 = 0.0;
};

PenaltyWeights penalty_weights(const TrainConfig& cfg) {
  const double a = cfg.l1_ratio();
  return {a / cfg.C, (1.0 - a) / cfg.C};
}

double penalty_value(const Eigen::VectorXd& beta, const PenaltyWeights& pw) {
  return pw.l1 * beta.lpNorm<1>() + 0.5 * pw.l2 * beta.squaredNorm();
}

void check_problem(const Eigen::MatrixXd& x, const std::vector<int>& y) {
  if (x.rows() == 0 || x.cols() == 0) throw Error(ErrorCode::EmptyMatrix, "training matrix is empty");
  if (static_cast<std::size_t>(x.rows()) != y.size()) {
    throw Error(ErrorCode::LengthMismatch, "label count differs from training rows");
  }
}

// Weighted Gram matrix of [1 | X] under per-row curvature h: index 0 is the
// intercept. `scratch` is reused between calls.
void weighted_gram(const Eigen::MatrixXd& x, const Eigen::VectorXd& h, Eigen::MatrixXd& scratch,
                   Eigen::MatrixXd& gram) {
  const Eigen::Index p = x.cols();
  const Eigen::VectorXd sq = h.cwiseSqrt();
  scratch.resize(x.rows(), p);
  scratch = x.array().colwise() * sq.array();
  Eigen::MatrixXd inner = Eigen::MatrixXd::Zero(p, p);
  inner.selfadjointView<Eigen::Lower>().rankUpdate(scratch.transpose());
  gram.resize(p + 1, p + 1);
  gram(0, 0) = h.sum();
  const Eigen::VectorXd cross = x.transpose() * h;
  gram.block(1, 0, p, 1) = cross;
  gram.block(0, 1, 1, p) = cross.transpose();
  gram.block(1, 1, p, p) = inner.selfadjointView<Eigen::Lower>();
}

// Minimises the local model
//   G.d + d'Hd/2 + l1 ||beta + d_beta||_1 + l2/2 ||beta + d_beta||^2
// over d = (d_intercept, d_beta) by cyclic coordinate descent.
Eigen::VectorXd quadratic_cd(const Eigen::MatrixXd& H, const Eigen::VectorXd& G, const Eigen::VectorXd& beta,
                             const PenaltyWeights& pw, double tol) {
  const Eigen::Index q = H.rows();
  Eigen::VectorXd d = Eigen::VectorXd::Zero(q);
  Eigen::VectorXd hd = Eigen::VectorXd::Zero(q);
  for (int sweep = 0; sweep < kMaxInnerSweeps; ++sweep) {
    double max_step = 0.0;
    for (Eigen::Index j = 0; j < q; ++j) {
      const double a = H(j, j);
      const double grad = G(j) + hd(j);
      double step = 0.0;
      if (j == 0) {
        if (a > 0.0) step = -grad / a;
      } else {
        const double u0 = beta(j - 1) + d(j);
        const double denom = a + pw.l2;
        const double u = denom > 0.0 ? soft_threshold(a * u0 - grad, pw.l1) / denom : 0.0;
        step = u - u0;
      }
      if (step != 0.0) {
        d(j) += step;
        hd.noalias() += H.col(j) * step;
        max_step = std::max(max_step, std::abs(step));
      }
    }
    if (max_step < tol) break;
  }
  return d;
}

double weighted_logloss(const Eigen::VectorXd& eta, const std::vector<int>& y, const std::vector<double>& w) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < eta.size(); ++i) {
    s += w[static_cast<std::size_t>(i)] * (softplus(eta(i)) - (y[static_cast<std::size_t>(i)] == 1 ? eta(i) : 0.0));
  }
  return s;
}

// Row-wise log-sum-exp loss of the multinomial model.
double weighted_softmax_loss(const Eigen::MatrixXd& eta, const std::vector<int>& y, const std::vector<double>& w) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < eta.rows(); ++i) {
    const double mx = eta.row(i).maxCoeff();
    const double lse = mx + std::log((eta.row(i).array() - mx).exp().sum());
    s += w[static_cast<std::size_t>(i)] * (lse - eta(i, y[static_cast<std::size_t>(i)]));
  }
  return s;
}

void softmax_rows(const Eigen::MatrixXd& eta, Eigen::MatrixXd& prob) {
  prob.resize(eta.rows(), eta.cols());
  for (Eigen::Index i = 0; i < eta.rows(); ++i) {
    const double mx = eta.row(i).maxCoeff();
    prob.row(i) = (eta.row(i).array() - mx).exp();
    prob.row(i) /= prob.row(i).sum();
  }
}

struct StepResult {
  double t = 0.0;
  double objective = 0.0;
};

// Backtracking on f(t) = loss(t) + penalty(beta + t d_beta) with the
// proximal-Newton sufficient-decrease condition.
template <typename LossAt>
StepResult backtrack(LossAt&& loss_at, double f0, double decrease, const Eigen::VectorXd& beta,
                     const Eigen::VectorXd& d_beta, const PenaltyWeights& pw) {
  double t = 1.0;
  for (int k = 0; k < kMaxBacktracks; ++k, t *= 0.5) {
    const double f = loss_at(t) + penalty_value(beta + t * d_beta, pw);
    if (f <= f0 + kArmijo * t * decrease) return {t, f};
  }
  return {0.0, f0};
}

Eigen::MatrixXd to_matrix(const windowing::FeatureMatrix& m, const std::vector<std::size_t>& rows) {
  Eigen::MatrixXd x(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(m.cols()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto& v = m.rows.at(rows[r]).values;
    if (v.size() != m.cols()) throw Error(ErrorCode::LengthMismatch, "feature row width differs from the name list");
    for (std::size_t c = 0; c < v.size(); ++c) x(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = v[c];
  }
  return x;
}

}  // namespace

std::string_view to_string(Task t) {
  switch (t) {
    case Task::EarlyWarning: return "early_warning";
    case Task::AboveLimit: return "above_limit";
    case Task::Multiclass: return "multiclass";
  }
  return "early_warning";
}

Task parse_task(std::string_view s) {
  if (s == "early_warning") return Task::EarlyWarning;
  if (s == "above_limit") return Task::AboveLimit;
  if (s == "multiclass") return Task::Multiclass;
  throw Error(ErrorCode::BadConfig, "unknown task '" + std::string(s) + "'");
}

int label_of(Task task, const windowing::FeatureVector& row) {
  switch (task) {
    case Task::EarlyWarning: return row.bac_gdl > 0.0 ? 1 : 0;
    case Task::AboveLimit: return row.bac_gdl >= 0.05 ? 1 : 0;
    case Task::Multiclass: return static_cast<int>(row.block);
  }
  return 0;
}

int class_count(Task task) { return task == Task::Multiclass ? 3 : 2; }

std::string_view to_string(Penalty p) {
  switch (p) {
    case Penalty::L1: return "l1";
    case Penalty::L2: return "l2";
    case Penalty::ElasticNet: return "elastic_net";
  }
  return "l1";
}

std::string_view to_string(ClassWeight w) { return w == ClassWeight::Balanced ? "balanced" : "uniform"; }

Penalty parse_penalty(std::string_view s) {
  if (s == "l1") return Penalty::L1;
  if (s == "l2") return Penalty::L2;
  if (s == "elastic_net") return Penalty::ElasticNet;
  throw Error(ErrorCode::BadConfig, "unknown penalty '" + std::string(s) + "'");
}

ClassWeight parse_class_weight(std::string_view s) {
  if (s == "balanced") return ClassWeight::Balanced;
  if (s == "uniform") return ClassWeight::Uniform;
  throw Error(ErrorCode::BadConfig, "unknown class_weight '" + std::string(s) + "'");
}

double TrainConfig::l1_ratio() const {
  switch (penalty) {
    case Penalty::L1: return 1.0;
    case Penalty::L2: return 0.0;
    case Penalty::ElasticNet: return alpha;
  }
  return 1.0;
}

void TrainConfig::validate() const {
  if (!(C > 0.0) || !std::isfinite(C)) throw Error(ErrorCode::BadConfig, "C must be > 0");
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw Error(ErrorCode::BadConfig, "alpha must lie in [0, 1]");
  if (!(tol > 0.0)) throw Error(ErrorCode::BadConfig, "tol must be > 0");
  if (max_iter < 1) throw Error(ErrorCode::BadConfig, "max_iter must be >= 1");
}

Scaler fit_scaler(const Eigen::MatrixXd& x) {
  if (x.rows() == 0 || x.cols() == 0) throw Error(ErrorCode::EmptyMatrix, "cannot fit a scaler on no rows");
  Scaler s;
  const auto n = static_cast<double>(x.rows());
  s.means.resize(static_cast<std::size_t>(x.cols()));
  s.sds.resize(static_cast<std::size_t>(x.cols()));
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    const auto col = x.col(j);
    const double mean = col.sum() / n;
    const bool constant = (col.array() == col(0)).all();
    double sd = 0.0;
    if (!constant) sd = std::sqrt((col.array() - mean).square().sum() / n);
    s.means[static_cast<std::size_t>(j)] = constant ? col(0) : mean;
    s.sds[static_cast<std::size_t>(j)] = sd;
  }
  return s;
}

Scaler fit_scaler(const windowing::FeatureMatrix& m, const std::vector<std::size_t>& rows) {
  if (rows.empty() || m.cols() == 0) throw Error(ErrorCode::EmptyMatrix, "cannot fit a scaler on no rows");
  return fit_scaler(to_matrix(m, rows));
}

Eigen::MatrixXd Scaler::transform(const Eigen::MatrixXd& x) const {
  if (static_cast<std::size_t>(x.cols()) != means.size()) {
    throw Error(ErrorCode::LengthMismatch, "scaler width differs from the data");
  }
  Eigen::MatrixXd out(x.rows(), x.cols());
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    const auto k = static_cast<std::size_t>(j);
    out.col(j) = (x.col(j).array() - means[k]) / scale(k);
  }
  return out;
}

Eigen::MatrixXd Scaler::transform(const windowing::FeatureMatrix& m, const std::vector<std::size_t>& rows) const {
  Eigen::MatrixXd x = to_matrix(m, rows);
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    const auto k = static_cast<std::size_t>(j);
    x.col(j) = (x.col(j).array() - means[k]) / scale(k);
  }
  return x;
}

std::vector<double> class_weights(const std::vector<int>& y, int classes, ClassWeight mode) {
  std::vector<double> counts(static_cast<std::size_t>(classes), 0.0);
  for (int v : y) {
    if (v < 0 || v >= classes) throw Error(ErrorCode::BadParams, "label out of range");
    counts[static_cast<std::size_t>(v)] += 1.0;
  }
  std::vector<double> w(y.size(), 1.0);
  if (mode == ClassWeight::Uniform) return w;
  const auto n = static_cast<double>(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) {
    w[i] = n / (static_cast<double>(classes) * counts[static_cast<std::size_t>(y[i])]);
  }
  return w;
}

double logreg_objective(const Eigen::MatrixXd& x, const std::vector<int>& y, const std::vector<double>& w,
                        const Eigen::VectorXd& beta, double intercept, const TrainConfig& cfg) {
  const Eigen::VectorXd eta = (x * beta).array() + intercept;
  return weighted_logloss(eta, y, w) + penalty_value(beta, penalty_weights(cfg));
}

Eigen::VectorXd logreg_smooth_gradient(const Eigen::MatrixXd& x, const std::vector<int>& y,
                                       const std::vector<double>& w, const Eigen::VectorXd& beta,
                                       double intercept, const TrainConfig& cfg) {
  const Eigen::VectorXd eta = (x * beta).array() + intercept;
  Eigen::VectorXd g(eta.size());
  for (Eigen::Index i = 0; i < eta.size(); ++i) {
    const auto k = static_cast<std::size_t>(i);
    g(i) = w[k] * (sigmoid(eta(i)) - (y[k] == 1 ? 1.0 : 0.0));
  }
  Eigen::VectorXd out(beta.size() + 1);
  out(0) = g.sum();
  out.tail(beta.size()) = x.transpose() * g + penalty_weights(cfg).l2 * beta;
  return out;
}

LinearFit fit_logreg(const Eigen::MatrixXd& x, const std::vector<int>& y, const TrainConfig& cfg) {
  cfg.validate();
  check_problem(x, y);
  bool has0 = false, has1 = false;
  for (int v : y) {
    if (v != 0 && v != 1) throw Error(ErrorCode::BadParams, "binary labels must be 0 or 1");
    (v == 1 ? has1 : has0) = true;
  }
  if (!has0 || !has1) throw Error(ErrorCode::SingleClass, "training labels contain a single class");

  const auto w = class_weights(y, 2, cfg.class_weight);
  const PenaltyWeights pw = penalty_weights(cfg);
  const Eigen::Index n = x.rows();
  const Eigen::Index p = x.cols();
  const double inner_tol = std::max(cfg.tol * 1e-2, 1e-12);

  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
  double b = 0.0;
  Eigen::VectorXd eta = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd h(n), g(n);
  Eigen::MatrixXd scratch, gram;

  LinearFit fit;
  bool refresh = true;
  double f = weighted_logloss(eta, y, w);
  fit.objective_trace.push_back(f);
  for (int it = 1; it <= cfg.max_iter; ++it) {
    fit.iterations = it;
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto k = static_cast<std::size_t>(i);
      const double pr = sigmoid(eta(i));
      h(i) = w[k] * pr * (1.0 - pr);
      g(i) = w[k] * (pr - (y[k] == 1 ? 1.0 : 0.0));
    }
    if (refresh) weighted_gram(x, h, scratch, gram);
    Eigen::VectorXd grad(p + 1);
    grad(0) = g.sum();
    grad.tail(p) = x.transpose() * g;

    const Eigen::VectorXd d = quadratic_cd(gram, grad, beta, pw, inner_tol);
    const Eigen::VectorXd d_beta = d.tail(p);
    const double decrease = grad.dot(d) + pw.l2 * beta.dot(d_beta) + 0.5 * pw.l2 * d_beta.squaredNorm() +
                            pw.l1 * ((beta + d_beta).lpNorm<1>() - beta.lpNorm<1>());
    // Convergence is only declared on a freshly computed curvature matrix.
    const bool fresh = refresh;
    if (!(decrease < 0.0)) {
      if (fresh) {
        fit.converged = true;
        break;
      }
      refresh = true;
      continue;
    }
    const Eigen::VectorXd xd = (x * d_beta).array() + d(0);
    const auto step = backtrack([&](double t) { return weighted_logloss(eta + t * xd, y, w); }, f, decrease, beta,
                                d_beta, pw);
    if (step.t == 0.0) {
      if (fresh) {
        fit.converged = true;
        break;
      }
      refresh = true;
      continue;
    }
    beta += step.t * d_beta;
    b += step.t * d(0);
    eta += step.t * xd;
    f = step.objective;
    fit.objective_trace.push_back(f);
    refresh = it < 3 || step.t < 1.0 || it % kHessianRefresh == 0;
    if (step.t * d.cwiseAbs().maxCoeff() < cfg.tol) {
      if (fresh) {
        fit.converged = true;
        break;
      }
      refresh = true;
    }
  }
  fit.weights = beta.transpose();
  fit.intercepts = Eigen::VectorXd::Constant(1, b);
  return fit;
}

double multinomial_objective(const Eigen::MatrixXd& x, const std::vector<int>& y, const std::vector<double>& w,
                             const Eigen::MatrixXd& weights, const Eigen::VectorXd& intercepts,
                             const TrainConfig& cfg) {
  Eigen::MatrixXd eta = x * weights.transpose();
  eta.rowwise() += intercepts.transpose();
  const auto pw = penalty_weights(cfg);
  double pen = 0.0;
  for (Eigen::Index k = 0; k < weights.rows(); ++k) pen += penalty_value(weights.row(k).transpose(), pw);
  return weighted_softmax_loss(eta, y, w) + pen;
}

LinearFit fit_multinomial(const Eigen::MatrixXd& x, const std::vector<int>& y, int classes,
                          const TrainConfig& cfg) {
  cfg.validate();
  check_problem(x, y);
  if (classes < 2) throw Error(ErrorCode::BadParams, "multinomial needs >= 2 classes");
  std::vector<int> seen(static_cast<std::size_t>(classes), 0);
  for (int v : y) {
    if (v < 0 || v >= classes) throw Error(ErrorCode::BadParams, "label out of range");
    seen[static_cast<std::size_t>(v)] = 1;
  }
  for (int c = 0; c < classes; ++c) {
    if (!seen[static_cast<std::size_t>(c)]) {
      throw Error(ErrorCode::MissingClass, "class " + std::to_string(c) + " has no training rows");
    }
  }

  const auto w = class_weights(y, classes, cfg.class_weight);
  const PenaltyWeights pw = penalty_weights(cfg);
  const Eigen::Index n = x.rows();
  const Eigen::Index p = x.cols();
  const double inner_tol = std::max(cfg.tol * 1e-2, 1e-12);

  Eigen::MatrixXd W = Eigen::MatrixXd::Zero(classes, p);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(classes);
  Eigen::MatrixXd eta = Eigen::MatrixXd::Zero(n, classes);
  Eigen::MatrixXd prob;
  Eigen::VectorXd h(n), g(n);
  Eigen::MatrixXd scratch, gram;

  auto total_penalty = [&] {
    double s = 0.0;
    for (Eigen::Index k = 0; k < classes; ++k) s += penalty_value(W.row(k).transpose(), pw);
    return s;
  };

  LinearFit fit;
  double loss = weighted_softmax_loss(eta, y, w);
  fit.objective_trace.push_back(loss);
  for (int it = 1; it <= cfg.max_iter; ++it) {
    fit.iterations = it;
    double max_change = 0.0;
    for (Eigen::Index k = 0; k < classes; ++k) {
      softmax_rows(eta, prob);
      for (Eigen::Index i = 0; i < n; ++i) {
        const auto r = static_cast<std::size_t>(i);
        const double pr = prob(i, k);
        h(i) = w[r] * pr * (1.0 - pr);
        g(i) = w[r] * (pr - (y[r] == k ? 1.0 : 0.0));
      }
      weighted_gram(x, h, scratch, gram);
      Eigen::VectorXd grad(p + 1);
      grad(0) = g.sum();
      grad.tail(p) = x.transpose() * g;
      const Eigen::VectorXd beta = W.row(k).transpose();
      const Eigen::VectorXd d = quadratic_cd(gram, grad, beta, pw, inner_tol);
      const Eigen::VectorXd d_beta = d.tail(p);
      const double decrease = grad.dot(d) + pw.l2 * beta.dot(d_beta) + 0.5 * pw.l2 * d_beta.squaredNorm() +
                              pw.l1 * ((beta + d_beta).lpNorm<1>() - beta.lpNorm<1>());
      if (!(decrease < 0.0)) continue;

      const Eigen::VectorXd xd = (x * d_beta).array() + d(0);
      const double other_pen = total_penalty() - penalty_value(beta, pw);
      Eigen::MatrixXd trial = eta;
      const auto step = backtrack(
          [&](double t) {
            trial.col(k) = eta.col(k) + t * xd;
            return weighted_softmax_loss(trial, y, w) + other_pen;
          },
          loss + total_penalty(), decrease, beta, d_beta, pw);
      if (step.t == 0.0) continue;
      W.row(k) += step.t * d_beta.transpose();
      b(k) += step.t * d(0);
      eta.col(k) += step.t * xd;
      loss = weighted_softmax_loss(eta, y, w);
      max_change = std::max(max_change, step.t * d.cwiseAbs().maxCoeff());
    }
    // Softmax is invariant to a common intercept shift; keep them centred.
    const double shift = b.mean();
    b.array() -= shift;
    eta.array() -= shift;
    fit.objective_trace.push_back(loss + total_penalty());
    if (max_change < cfg.tol) {
      fit.converged = true;
      break;
    }
  }
  fit.weights = W;
  fit.intercepts = b;
  return fit;
}

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

TrainedModel train(const windowing::FeatureMatrix& m, const std::vector<std::size_t>& rows, Task task,
                   const TrainConfig& cfg, const std::vector<int>* labels_override) {
  cfg.validate();
  if (rows.empty() || m.cols() == 0) throw Error(ErrorCode::EmptyMatrix, "no training rows");
  std::vector<int> y(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    y[i] = labels_override ? labels_override->at(rows[i]) : label_of(task, m.rows.at(rows[i]));
  }
  TrainedModel model;
  model.feature_names = m.feature_names;
  model.task = task;
  model.config = cfg;
  Eigen::MatrixXd x = to_matrix(m, rows);
  model.scaler = fit_scaler(x);
  x = model.scaler.transform(x);
  const LinearFit fit = task == Task::Multiclass ? fit_multinomial(x, y, 3, cfg) : fit_logreg(x, y, cfg);
  model.weights = fit.weights;
  model.intercepts = fit.intercepts;
  model.iterations = fit.iterations;
  model.converged = fit.converged;
  return model;
}

std::vector<double> predict_class_proba(const TrainedModel& model, const std::vector<double>& values) {
  const auto p = static_cast<std::size_t>(model.weights.cols());
  if (values.size() != p) throw Error(ErrorCode::NameMismatch, "feature vector width differs from the model");
  std::vector<double> z(static_cast<std::size_t>(model.weights.rows()));
  for (Eigen::Index k = 0; k < model.weights.rows(); ++k) {
    double s = model.intercepts(k);
    for (std::size_t j = 0; j < p; ++j) {
      s += (values[j] - model.scaler.means[j]) / model.scaler.scale(j) * model.weights(k, static_cast<Eigen::Index>(j));
    }
    z[static_cast<std::size_t>(k)] = s;
  }
  if (model.binary()) {
    const double pr = sigmoid(z[0]);
    return {1.0 - pr, pr};
  }
  const double mx = *std::max_element(z.begin(), z.end());
  double sum = 0.0;
  for (auto& v : z) {
    v = std::exp(v - mx);
    sum += v;
  }
  for (auto& v : z) v /= sum;
  return z;
}

double predict_proba(const TrainedModel& model, const std::vector<double>& values) {
  if (!model.binary()) throw Error(ErrorCode::BadParams, "predict_proba needs a binary model");
  return predict_class_proba(model, values)[1];
}

std::vector<double> predict_matrix(const TrainedModel& model, const windowing::FeatureMatrix& m,
                                   const std::vector<std::size_t>& rows) {
  if (m.feature_names != model.feature_names) {
    throw Error(ErrorCode::NameMismatch, "feature names of the data differ from the model's");
  }
  std::vector<std::size_t> idx = rows;
  if (idx.empty()) {
    idx.resize(m.rows.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  }
  std::vector<double> out;
  out.reserve(idx.size() * (model.binary() ? 1 : static_cast<std::size_t>(model.weights.rows())));
  for (std::size_t r : idx) {
    const auto pr = predict_class_proba(model, m.rows.at(r).values);
    if (model.binary()) out.push_back(pr[1]);
    else out.insert(out.end(), pr.begin(), pr.end());
  }
  return out;
}

std::vector<Coefficient> coefficients(const TrainedModel& model) {
  std::vector<Coefficient> out;
  for (Eigen::Index k = 0; k < model.weights.rows(); ++k) {
    for (std::size_t j = 0; j < model.feature_names.size(); ++j) {
      out.push_back({model.feature_names[j], static_cast<int>(k), model.weights(k, static_cast<Eigen::Index>(j))});
    }
  }
  return out;
}

GroupImportance group_importance(const std::vector<Coefficient>& coefs,
                                 const std::function<std::string(std::string_view)>& grouping) {
  GroupImportance gi;
  double total = 0.0;
  for (const auto& c : coefs) {
    const std::string g = grouping(c.feature);
    auto it = std::find_if(gi.shares.begin(), gi.shares.end(), [&](const auto& s) { return s.first == g; });
    if (it == gi.shares.end()) {
      gi.shares.emplace_back(g, 0.0);
      it = std::prev(gi.shares.end());
    }
    it->second += std::abs(c.value);
    total += std::abs(c.value);
  }
  if (total == 0.0) {
    gi.degenerate = true;
    return gi;
  }
  for (auto& s : gi.shares) s.second /= total;
  return gi;
}

std::string model_to_json(const TrainedModel& model) {
  json j;
  j["format_version"] = kFormatVersion;
  j["task"] = to_string(model.task);
  j["feature_names"] = model.feature_names;
  j["means"] = model.scaler.means;
  j["sds"] = model.scaler.sds;
  json weights = json::array();
  for (Eigen::Index k = 0; k < model.weights.rows(); ++k) {
    std::vector<double> row(static_cast<std::size_t>(model.weights.cols()));
    for (Eigen::Index c = 0; c < model.weights.cols(); ++c) row[static_cast<std::size_t>(c)] = model.weights(k, c);
    weights.push_back(row);
  }
  j["weights"] = weights;
  j["intercepts"] = std::vector<double>(model.intercepts.data(), model.intercepts.data() + model.intercepts.size());
  j["config"] = detail::train_config_json(model.config);
  j["iterations"] = model.iterations;
  j["converged"] = model.converged;
  return j.dump(2);
}

TrainedModel model_from_json(const std::string& text) {
  try {
    const json j = json::parse(text);
    if (j.at("format_version").get<int>() != kFormatVersion) {
      throw Error(ErrorCode::BadConfig, "unsupported model format_version");
    }
    TrainedModel m;
    m.task = parse_task(j.at("task").get<std::string>());
    m.feature_names = j.at("feature_names").get<std::vector<std::string>>();
    m.scaler.means = j.at("means").get<std::vector<double>>();
    m.scaler.sds = j.at("sds").get<std::vector<double>>();
    const auto rows = j.at("weights").get<std::vector<std::vector<double>>>();
    const auto icpt = j.at("intercepts").get<std::vector<double>>();
    const std::size_t p = m.feature_names.size();
    if (rows.empty() || icpt.size() != rows.size() || m.scaler.means.size() != p || m.scaler.sds.size() != p) {
      throw Error(ErrorCode::BadConfig, "model arrays have inconsistent sizes");
    }
    m.weights.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(p));
    for (std::size_t k = 0; k < rows.size(); ++k) {
      if (rows[k].size() != p) throw Error(ErrorCode::BadConfig, "model weight row has the wrong width");
      for (std::size_t c = 0; c < p; ++c) m.weights(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(c)) = rows[k][c];
    }
    m.intercepts = Eigen::Map<const Eigen::VectorXd>(icpt.data(), static_cast<Eigen::Index>(icpt.size()));
    m.config = detail::train_config_from_json(j.at("config"));
    m.iterations = j.value("iterations", 0);
    m.converged = j.value("converged", true);
    return m;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::BadConfig, std::string("invalid model JSON: ") + e.what());
  }
}

void save_model(const std::filesystem::path& path, const TrainedModel& model) {
  detail::write_file(path, model_to_json(model) + "\n");
}

TrainedModel load_model(const std::filesystem::path& path) { return model_from_json(detail::read_file(path)); }

}  // namespace gazesense::model
