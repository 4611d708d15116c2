#include "gazesense/stats.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "gazesense/error.hpp"

namespace gazesense {

double quantile_sorted(std::span<const double> sorted, double p) {
  if (sorted.empty()) throw Error(ErrorCode::EmptyInput, "quantile of empty input");
  const double h = static_cast<double>(sorted.size() - 1) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  if (lo + 1 >= sorted.size()) return sorted.back();
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[lo + 1] - sorted[lo]);
}

StatSummary aggregate_sorted(std::span<const double> v) {
  if (v.empty()) throw Error(ErrorCode::EmptyInput, "aggregate_stats needs at least one value");
  const auto n = static_cast<double>(v.size());
  StatSummary s;
  double sum = 0.0;
  double sq = 0.0;
  for (double x : v) {
    sum += x;
    sq += x * x;
  }
  s.mean = sum / n;
  s.power = sq / n;
  s.q05 = quantile_sorted(v, 0.05);
  s.q95 = quantile_sorted(v, 0.95);
  if (v.front() == v.back()) return s;

  double m2 = 0.0;
  double m3 = 0.0;
  double m4 = 0.0;
  for (double x : v) {
    const double d = x - s.mean;
    const double d2 = d * d;
    m2 += d2;
    m3 += d2 * d;
    m4 += d2 * d2;
  }
  s.sd = v.size() > 1 ? std::sqrt(m2 / (n - 1.0)) : 0.0;
  m2 /= n;
  m3 /= n;
  m4 /= n;
  if (m2 > 0.0) {
    s.skewness = m3 / std::pow(m2, 1.5);
    s.kurtosis = m4 / (m2 * m2) - 3.0;
  }
  return s;
}

StatSummary aggregate_stats(std::span<const double> values) {
  std::vector<double> sorted;
  sorted.reserve(values.size());
  for (double x : values) {
    if (std::isfinite(x)) sorted.push_back(x + 0.0);
  }
  std::sort(sorted.begin(), sorted.end());
  return aggregate_sorted(sorted);
}

}  // namespace gazesense
