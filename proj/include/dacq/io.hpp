#pragma once

#include <string>

#include "dacq/graph.hpp"
#include "dacq/graph_io.hpp"
#include "dacq/params.hpp"
#include "json.hpp"

namespace dacq {

inline nlohmann::json params_to_json(const ModelParams& params) {
  return {{"p", params.p}, {"q", params.q}, {"a", params.a}, {"s", params.s()}};
}

/// One exported oracle quantity: {params, graph, quantity, value, tolerance}.
inline nlohmann::json oracle_result_json(const ModelParams& params, const FiniteGraph& g, const std::string& quantity,
                                         double value, double tolerance) {
  return {{"params", params_to_json(params)},
          {"graph", graph_to_json(g)},
          {"quantity", quantity},
          {"value", value},
          {"tolerance", tolerance}};
}

}  // namespace dacq
