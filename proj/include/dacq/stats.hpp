#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

namespace dacq {

struct Estimate {
  double value = 0.0;
  double se = 0.0;
  std::size_t n = 0;
};

inline double mean_of(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v;
  return x.empty() ? 0.0 : s / static_cast<double>(x.size());
}

/// Standard error of the mean assuming independent draws.
inline double iid_standard_error(std::span<const double> x) {
  if (x.size() < 2) return 0.0;
  const double m = mean_of(x);
  double ss = 0.0;
  for (double v : x) ss += (v - m) * (v - m);
  return std::sqrt(ss / static_cast<double>(x.size() - 1) / static_cast<double>(x.size()));
}

/// Batch-means standard error; absorbs autocorrelation of a chain's output.
inline double batch_means_standard_error(std::span<const double> x, std::size_t batches = 32) {
  const std::size_t len = x.size() / batches;
  if (len < 2) return iid_standard_error(x);
  std::vector<double> means;
  means.reserve(batches);
  for (std::size_t b = 0; b < batches; ++b) means.push_back(mean_of(x.subspan(b * len, len)));
  return iid_standard_error(means);
}

/// Mean of a correlated series with SE = max(iid, batch means).
inline Estimate chain_estimate(std::span<const double> x) {
  return {mean_of(x), std::max(iid_standard_error(x), batch_means_standard_error(x)), x.size()};
}

/// Mean of independent replica values.
inline Estimate replica_estimate(std::span<const double> x) {
  return {mean_of(x), iid_standard_error(x), x.size()};
}

/// a - b for independent estimates.
inline Estimate difference(const Estimate& a, const Estimate& b) {
  return {a.value - b.value, std::hypot(a.se, b.se), std::min(a.n, b.n)};
}

}  // namespace dacq
