#pragma once

#include <array>
#include <map>
#include <cstdint>
#include <string>
#include <vector>

#include "gazesense/evaluation.hpp"

namespace gazesense::decision {

struct TripScoreSeries {
  std::string trip_id;
  std::string participant_id;
  std::size_t fold = 0;
  Scenario scenario = Scenario::Highway;
  Block block = Block::NoAlcohol;
  int label = 0;
  std::vector<double> window_end_s;  // strictly increasing
  std::vector<double> prob;

  void validate() const;
};

// Groups binary report scores by trip, ordered by window end time. Trips are
// returned in order of first appearance. Throws MissingScores when the report
// carries none and BadParams for multiclass reports.
std::vector<TripScoreSeries> trip_series(const evaluation::EvaluationReport& report);

// out[i] = mean(prob[0..=i]), same timestamps.
TripScoreSeries cumulative_moving_average(const TripScoreSeries& s);

struct CurvePoint {
  double t_s = 0.0;
  double balanced_accuracy = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
};

struct CurveOptions {
  double first_t_s = 60.0;  // window length: nothing is known before the first window closes
  int resamples = 1000;
  double confidence = 0.95;
  std::uint64_t seed = 42;
};

// At every integer second from first_t_s to the last window end, each trip's
// latest CMA value (windows ending at or before t) is thresholded at 0.5 and
// balanced accuracy is taken across trips. The interval is a percentile
// bootstrap over participants; resamples missing a class are skipped.
std::vector<CurvePoint> decision_time_curve(const std::vector<TripScoreSeries>& cma, const CurveOptions& opts = {});

struct GroupRow {
  std::size_t first_window = 0;
  std::size_t size = 0;
  double window_end_s = 0.0;  // end of the last window in the group
  double score = 0.0;         // mean probability
  int votes = 0;              // windows at or above 0.5
  int decision = 0;           // majority vote, ties positive
};

// Non-overlapping consecutive groups; the final partial group is kept.
std::vector<GroupRow> majority_vote_groups(const TripScoreSeries& s, int group_size);

inline constexpr std::array<int, 8> kSweepGroupSizes{1, 5, 30, 60, 90, 120, 150, 180};

struct SweepRow {
  int group_size = 1;
  std::map<std::string, evaluation::MacroStat> macro;  // metric -> mean/sd over folds
};

// For each group size, group every trip, pool the groups of each fold, score
// them (group score for AUROC/AUPRC, vote for the thresholded metrics) and
// macro-average across folds. Folds lacking a class are skipped.
std::vector<SweepRow> majority_vote_sweep(const std::vector<TripScoreSeries>& series,
                                          const std::vector<int>& group_sizes = {kSweepGroupSizes.begin(),
                                                                                 kSweepGroupSizes.end()});

std::string curve_to_csv(const std::vector<CurvePoint>& curve);
std::string sweep_to_csv(const std::vector<SweepRow>& sweep);
std::string decision_to_json(const std::vector<CurvePoint>& curve, const std::vector<SweepRow>& sweep);

}  // namespace gazesense::decision
