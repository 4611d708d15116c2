#pragma once

#include <array>
#include <span>
#include <string_view>

namespace gazesense {

// The seven window aggregates, in feature order.
struct StatSummary {
  double mean = 0.0;
  double sd = 0.0;
  double q05 = 0.0;
  double q95 = 0.0;
  double skewness = 0.0;
  double kurtosis = 0.0;
  double power = 0.0;

  std::array<double, 7> as_array() const { return {mean, sd, q05, q95, skewness, kurtosis, power}; }
};

inline constexpr std::array<std::string_view, 7> kStatNames = {"mean",     "sd",       "q05",  "q95",
                                                               "skewness", "kurtosis", "power"};

// mean; sample sd (n-1, 0 for n = 1); quantiles by linear interpolation at
// h = (n-1)p; population skewness and excess kurtosis (both 0 on constant
// input); power = sum(v^2)/n. Non-finite values are ignored.
StatSummary aggregate_stats(std::span<const double> values);

// Same aggregates over values already sorted ascending (all finite).
StatSummary aggregate_sorted(std::span<const double> sorted);

// Linear-interpolation quantile of sorted data.
double quantile_sorted(std::span<const double> sorted, double p);

}  // namespace gazesense
