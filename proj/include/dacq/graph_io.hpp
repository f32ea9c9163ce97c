#pragma once

// JSON form of graphs: {"dimension": d, "radius": n} for boxes, or
// {"vertices": [[...]], "edges": [[i, j], ...], "boundary": [...]} otherwise.

#include <stdexcept>
#include <string>

#include "dacq/graph.hpp"
#include "json.hpp"

namespace dacq {

inline nlohmann::json graph_to_json(const FiniteGraph& g) {
  if (auto n = g.box_radius()) return {{"dimension", g.dimension()}, {"radius", *n}};
  nlohmann::json vertices = nlohmann::json::array();
  for (int v = 0; v < g.num_vertices(); ++v) vertices.push_back(g.coords(v));
  nlohmann::json edges = nlohmann::json::array();
  for (const Edge& e : g.edges()) edges.push_back({e.u, e.v});
  return {{"vertices", vertices}, {"edges", edges}, {"boundary", g.boundary_vertices()}};
}

inline FiniteGraph graph_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw std::invalid_argument("graph json: expected an object");
  if (j.contains("dimension") || j.contains("radius")) {
    for (auto it = j.begin(); it != j.end(); ++it)
      if (it.key() != "dimension" && it.key() != "radius")
        throw std::invalid_argument("graph json: unknown field '" + it.key() + "'");
    return build_box(j.at("dimension").get<int>(), j.at("radius").get<int>());
  }
  for (auto it = j.begin(); it != j.end(); ++it)
    if (it.key() != "vertices" && it.key() != "edges" && it.key() != "boundary")
      throw std::invalid_argument("graph json: unknown field '" + it.key() + "'");
  auto vertices = j.at("vertices").get<std::vector<Coord>>();
  std::vector<std::pair<int, int>> edges;
  for (const auto& e : j.at("edges")) {
    if (!e.is_array() || e.size() != 2) throw std::invalid_argument("graph json: edge must be [i, j]");
    edges.emplace_back(e[0].get<int>(), e[1].get<int>());
  }
  VertexSet boundary;
  if (j.contains("boundary")) boundary = j.at("boundary").get<VertexSet>();
  return FiniteGraph(std::move(vertices), edges, std::move(boundary));
}

}  // namespace dacq
