#pragma once

// Parameters of the DaC(q) model: bond density p, cluster weight q and the
// color law a = (a_1..a_s). Colors are 1-based throughout the library.

#include <cmath>
#include <limits>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace dacq {

/// |a_i - 1/q| below this puts color i in S_{1/q}.
inline constexpr double kInverseQTolerance = 1e-12;

struct ModelParams {
  double p = 0.5;
  double q = 1.0;
  std::vector<double> a;

  int s() const { return static_cast<int>(a.size()); }
  double a_of(int color) const { return a.at(static_cast<std::size_t>(color - 1)); }

  void validate() const {
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("ModelParams: p must lie in [0,1]");
    if (!(q > 0.0) || !std::isfinite(q)) throw std::invalid_argument("ModelParams: q must be > 0");
    if (a.size() < 2) throw std::invalid_argument("ModelParams: need s >= 2 colors");
    double sum = 0.0;
    for (double x : a) {
      if (!(x > 0.0 && x < 1.0)) throw std::invalid_argument("ModelParams: every a_i must lie in (0,1)");
      sum += x;
    }
    if (std::abs(sum - 1.0) > 1e-12) {
      std::ostringstream os;
      os << "ModelParams: color probabilities sum to " << sum << ", not 1";
      throw std::invalid_argument(os.str());
    }
  }

  bool in_inverse_q_set(int color) const {
    return std::abs(a_of(color) - 1.0 / q) <= kInverseQTolerance;
  }

  /// S = S_{1/q}: the Potts random-cluster representation.
  bool is_potts() const {
    for (int i = 1; i <= s(); ++i)
      if (!in_inverse_q_set(i)) return false;
    return true;
  }

  /// Smallest color minimizing a_i over S \ S_{1/q}; empty in the Potts case.
  std::optional<int> ell() const {
    std::optional<int> best;
    for (int i = 1; i <= s(); ++i) {
      if (in_inverse_q_set(i)) continue;
      if (!best || a_of(i) < a_of(*best)) best = i;
    }
    return best;
  }

  double min_a() const {
    double m = std::numeric_limits<double>::infinity();
    for (double x : a) m = std::min(m, x);
    return m;
  }
};

/// Conditional open probability of an edge whose endpoints are not otherwise
/// connected, for a random-cluster measure with parameters (p, q).
inline double isolated_open_probability(double p, double q) {
  if (p <= 0.0) return 0.0;
  if (p >= 1.0) return 1.0;
  return p / (p + (1.0 - p) * q);
}

}  // namespace dacq
