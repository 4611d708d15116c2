#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "gazesense/model.hpp"
#include "gazesense/windowing.hpp"

namespace gazesense::evaluation {

enum class Scheme { Loso, LosoLodso };

std::string_view to_string(Scheme s);
Scheme parse_scheme(std::string_view s);

struct Fold {
  std::string participant;
  std::optional<Scenario> scenario;  // set for loso_lodso
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

// One fold per participant, in sorted participant order.
std::vector<Fold> loso_folds(const windowing::FeatureMatrix& m);
// One fold per (participant, scenario): train on the other participants'
// rows from the other scenarios.
std::vector<Fold> loso_lodso_folds(const windowing::FeatureMatrix& m);
std::vector<Fold> make_folds(const windowing::FeatureMatrix& m, Scheme scheme);

// True when no training row shares the test participant (and, for
// loso_lodso folds, the test scenario).
bool fold_is_clean(const windowing::FeatureMatrix& m, const Fold& fold);

// P(score+ > score-) + P(tie)/2 via mid-ranks. Labels are 0/1.
double auroc(const std::vector<double>& scores, const std::vector<int>& labels);
// Step-wise average precision; tied scores enter the curve together.
double auprc(const std::vector<double>& scores, const std::vector<int>& labels);
// Mean per-class recall over the classes present in `labels`.
double balanced_accuracy(const std::vector<int>& preds, const std::vector<int>& labels);
double f1_weighted(const std::vector<int>& preds, const std::vector<int>& labels);

struct Metrics {
  double auroc = 0.0;
  double auprc = 0.0;
  double balanced_accuracy = 0.0;
  double f1_weighted = 0.0;
};

inline constexpr std::array<std::string_view, 4> kMetricNames{"auroc", "auprc", "balanced_accuracy", "f1_weighted"};
double metric_value(const Metrics& m, std::string_view name);

// Binary scores: one probability per row, thresholded at 0.5 (ties positive).
// Multiclass scores: `classes` probabilities per row; decisions by argmax and
// ranking metrics as one-vs-rest macro averages.
Metrics compute_metrics(const std::vector<double>& scores, const std::vector<int>& labels, int classes);

struct MacroStat {
  double mean = 0.0;
  double sd = 0.0;  // sample sd, 0 for a single value
  std::size_t n = 0;
};
MacroStat macro(const std::vector<double>& values);

struct ScoredRow {
  std::size_t fold = 0;
  std::string participant_id;
  std::string trip_id;
  Scenario scenario = Scenario::Highway;
  Block block = Block::NoAlcohol;
  double bac_gdl = 0.0;
  double window_end_s = 0.0;
  int label = 0;
  std::vector<double> scores;  // 1 entry (binary) or one per class
};

struct FoldResult {
  std::string participant;
  std::optional<Scenario> scenario;
  std::size_t train_rows = 0;
  std::size_t test_rows = 0;
  Metrics metrics;
  std::map<Scenario, Metrics> per_scenario;  // only slices holding every class
  Eigen::MatrixXd weights;
  Eigen::VectorXd intercepts;
  int iterations = 0;
  bool converged = true;
};

// Counts and row-normalised rates; rows are actual labels (or actual block
// levels), columns predicted classes.
struct Confusion {
  std::vector<std::string> row_labels;
  std::vector<std::string> col_labels;
  std::vector<std::vector<double>> counts;
  std::vector<std::vector<double>> rates;
};

struct EvaluationReport {
  static constexpr int kSchemaVersion = 1;
  Scheme scheme = Scheme::Loso;
  model::Task task = model::Task::EarlyWarning;
  model::TrainConfig config;
  bool permuted_labels = false;
  std::vector<std::string> feature_names;
  std::vector<FoldResult> folds;
  std::map<std::string, MacroStat> macro;
  std::map<Scenario, std::map<std::string, MacroStat>> per_scenario;
  Confusion confusion;          // actual label x predicted label
  Confusion confusion_actual;   // actual block level x predicted label
  std::vector<std::pair<std::string, double>> group_importance;  // mean share over folds
  std::vector<ScoredRow> scores;
};

struct EvaluateOptions {
  Scheme scheme = Scheme::Loso;
  model::Task task = model::Task::EarlyWarning;
  model::TrainConfig config;
  // Shuffle window labels across the whole matrix before training (null model).
  bool permute_labels = false;
  std::uint64_t seed = 42;
  unsigned jobs = 0;
};

// Fits scaler and model on each fold's training rows only, scores the test
// rows and aggregates. Folds run concurrently; the result does not depend on
// `jobs`. Throws SingleClass / MissingClass when a fold cannot be scored.
EvaluationReport evaluate(const windowing::FeatureMatrix& m, const EvaluateOptions& opts);

std::string report_to_json(const EvaluationReport& r);
EvaluationReport report_from_json(const std::string& text);
void save_report(const std::filesystem::path& path, const EvaluationReport& r);
EvaluationReport load_report(const std::filesystem::path& path);
// One row per fold plus a "macro" row: scheme,task,participant,scenario,<metrics>.
std::string report_to_csv(const EvaluationReport& r);
// Macro table, per-scenario table and group shares formatted "0.88 ± 0.09".
std::string report_summary(const EvaluationReport& r);

}  // namespace gazesense::evaluation
