#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "gazesense/windowing.hpp"

namespace gazesense::model {

enum class Task { EarlyWarning, AboveLimit, Multiclass };

std::string_view to_string(Task t);
Task parse_task(std::string_view s);

// early_warning: bac > 0; above_limit: bac >= 0.05; multiclass: block index
// (no_alcohol 0, moderate 1, severe 2).
int label_of(Task task, const windowing::FeatureVector& row);
int class_count(Task task);

enum class Penalty { L1, L2, ElasticNet };
enum class ClassWeight { Balanced, Uniform };

std::string_view to_string(Penalty p);
std::string_view to_string(ClassWeight w);
Penalty parse_penalty(std::string_view s);
ClassWeight parse_class_weight(std::string_view s);

struct TrainConfig {
  Penalty penalty = Penalty::L1;
  // Share of the penalty that is L1 (elastic_net only; l1 implies 1, l2 implies 0).
  double alpha = 0.5;
  double C = 1.0;
  ClassWeight class_weight = ClassWeight::Balanced;
  double tol = 1e-6;
  int max_iter = 10000;
  std::uint64_t seed = 0;

  double l1_ratio() const;
  void validate() const;
  bool operator==(const TrainConfig&) const = default;
};

// Column means and population standard deviations of the training rows.
// Zero-sd (constant) columns are divided by 1 at transform time.
struct Scaler {
  std::vector<double> means;
  std::vector<double> sds;

  double scale(std::size_t j) const { return sds[j] > 0.0 ? sds[j] : 1.0; }
  Eigen::MatrixXd transform(const windowing::FeatureMatrix& m, const std::vector<std::size_t>& rows) const;
  Eigen::MatrixXd transform(const Eigen::MatrixXd& x) const;
};

Scaler fit_scaler(const windowing::FeatureMatrix& m, const std::vector<std::size_t>& rows);
Scaler fit_scaler(const Eigen::MatrixXd& x);

// Solver output on already standardised features. For binary problems
// `weights` has one row; multinomial fits have one row per class.
struct LinearFit {
  Eigen::MatrixXd weights;      // classes x features (1 x p for binary)
  Eigen::VectorXd intercepts;   // per class (size 1 for binary)
  int iterations = 0;
  bool converged = false;
  // Penalised objective after every outer sweep, starting from the all-zero model.
  std::vector<double> objective_trace;
};

// Per-sample weights for labels in [0, classes): balanced gives w_c = n / (k n_c).
std::vector<double> class_weights(const std::vector<int>& y, int classes, ClassWeight mode);

// Binary objective: sum_i w_i logloss_i + (1/C) [a ||beta||_1 + (1 - a)/2 ||beta||^2],
// intercept unpenalised.
double logreg_objective(const Eigen::MatrixXd& x, const std::vector<int>& y, const std::vector<double>& w,
                        const Eigen::VectorXd& beta, double intercept, const TrainConfig& cfg);

// Gradient of the smooth part (weighted log loss plus the L2 term) with
// respect to (intercept, beta...).
Eigen::VectorXd logreg_smooth_gradient(const Eigen::MatrixXd& x, const std::vector<int>& y,
                                       const std::vector<double>& w, const Eigen::VectorXd& beta,
                                       double intercept, const TrainConfig& cfg);

// Proximal Newton: each outer sweep forms the weighted Gram matrix of the
// local quadratic model, minimises it by cyclic coordinate descent with soft
// thresholding, then backtracks on the true objective. Stops when the largest
// coefficient change of a sweep falls below cfg.tol.
LinearFit fit_logreg(const Eigen::MatrixXd& x, const std::vector<int>& y, const TrainConfig& cfg);

double multinomial_objective(const Eigen::MatrixXd& x, const std::vector<int>& y, const std::vector<double>& w,
                             const Eigen::MatrixXd& weights, const Eigen::VectorXd& intercepts,
                             const TrainConfig& cfg);

// Softmax regression with the same penalty applied to each class's weights;
// sweeps cycle over the classes. Throws MissingClass if a label in
// [0, classes) has no rows.
LinearFit fit_multinomial(const Eigen::MatrixXd& x, const std::vector<int>& y, int classes,
                          const TrainConfig& cfg);

struct TrainedModel {
  std::vector<std::string> feature_names;
  Scaler scaler;
  Task task = Task::EarlyWarning;
  TrainConfig config;
  Eigen::MatrixXd weights;
  Eigen::VectorXd intercepts;
  int iterations = 0;
  bool converged = false;

  bool binary() const { return weights.rows() == 1; }
};

// Scaler and solver fitted on `rows` of the matrix. Throws SingleClass /
// MissingClass when the rows do not cover every class.
TrainedModel train(const windowing::FeatureMatrix& m, const std::vector<std::size_t>& rows, Task task,
                   const TrainConfig& cfg, const std::vector<int>* labels_override = nullptr);

// P(positive) for binary models, computed from raw (unscaled) values.
double predict_proba(const TrainedModel& model, const std::vector<double>& values);
// Class probabilities (size 2 for binary models: {1 - p, p}).
std::vector<double> predict_class_proba(const TrainedModel& model, const std::vector<double>& values);
// Checks feature names, then scores the given rows (all rows when empty).
// Binary: one probability per row; multiclass: row-major classes per row.
std::vector<double> predict_matrix(const TrainedModel& model, const windowing::FeatureMatrix& m,
                                   const std::vector<std::size_t>& rows = {});

double sigmoid(double z);

struct Coefficient {
  std::string feature;
  int cls = 0;
  double value = 0.0;
};

// All weights in class-major order (binary models have a single class 0).
std::vector<Coefficient> coefficients(const TrainedModel& model);

struct GroupImportance {
  std::vector<std::pair<std::string, double>> shares;  // group -> share, first-appearance order
  bool degenerate = false;                             // every coefficient was zero
};

GroupImportance group_importance(const std::vector<Coefficient>& coefs,
                                 const std::function<std::string(std::string_view)>& grouping =
                                     windowing::feature_group);

std::string model_to_json(const TrainedModel& model);
TrainedModel model_from_json(const std::string& text);
void save_model(const std::filesystem::path& path, const TrainedModel& model);
TrainedModel load_model(const std::filesystem::path& path);

}  // namespace gazesense::model
