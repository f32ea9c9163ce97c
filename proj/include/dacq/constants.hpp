#pragma once

#include <cmath>
#include <stdexcept>

#include "dacq/params.hpp"

namespace dacq {

struct RatioConstants {
  double c1 = 0.0;  // u1 and u2 connected off the center
  double c2 = 0.0;  // not connected
};

/// Closed-form ratio P(xi(v)=i | .) / P(xi(v)=j | .) at a vertex with two
/// i-colored and 2d-2 j-colored neighbors.
inline RatioConstants ratio_constants(const ModelParams& params, int d, int i, int j) {
  if (i == j) throw std::invalid_argument("ratio_constants: colors must differ");
  const double p = params.p, qi = params.q * params.a_of(i), qj = params.q * params.a_of(j);
  const double tail = (params.a_of(i) / params.a_of(j)) * std::pow((1 - p) * qj / (p + (1 - p) * qj), 2 * d - 2);
  const double denom = (1 - p) * (1 - p) * qi * qi;
  const double common = 2 * p * (1 - p) * qi + (1 - p) * (1 - p) * qi * qi;
  return {(p * p * qi + common) / denom * tail, (p * p + common) / denom * tail};
}

}  // namespace dacq
