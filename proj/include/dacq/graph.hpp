#pragma once

// Finite graphs for the divide-and-color toolkit: hypercubic boxes
// G_n = (Lambda_n u dLambda_n, E_n), rectangular grids and hand-built graphs.
//
// Vertices and edges carry dense integer ids fixed at construction. Edges are
// always stored in lexicographic order of (smaller endpoint coords, larger
// endpoint coords); every sweep and exploration in the library walks edges in
// this order.

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace dacq {

using Coord = std::vector<int>;
using VertexSet = std::vector<int>;  // sorted, unique vertex ids
using EdgeSet = std::vector<int>;    // sorted, unique edge ids

struct Edge {
  int u = 0;  // endpoint with lexicographically smaller coords
  int v = 0;
};

/// Per-edge open/closed states (1 = open).
class BondConfig {
 public:
  BondConfig() = default;
  explicit BondConfig(std::size_t num_edges, bool open = false)
      : states_(num_edges, open ? 1 : 0) {}
  explicit BondConfig(std::vector<std::uint8_t> states) : states_(std::move(states)) {}

  static BondConfig from_mask(std::uint64_t mask, std::size_t num_edges) {
    BondConfig c(num_edges);
    for (std::size_t e = 0; e < num_edges; ++e) c.states_[e] = (mask >> e) & 1u;
    return c;
  }

  std::uint64_t mask() const {
    if (states_.size() > 64) throw std::length_error("BondConfig::mask: more than 64 edges");
    std::uint64_t m = 0;
    for (std::size_t e = 0; e < states_.size(); ++e)
      if (states_[e]) m |= (std::uint64_t{1} << e);
    return m;
  }

  std::size_t size() const { return states_.size(); }
  bool open(int e) const { return states_[static_cast<std::size_t>(e)] != 0; }
  void set(int e, bool open) { states_[static_cast<std::size_t>(e)] = open ? 1 : 0; }
  std::size_t count_open() const {
    return static_cast<std::size_t>(std::count(states_.begin(), states_.end(), std::uint8_t{1}));
  }
  const std::vector<std::uint8_t>& raw() const { return states_; }

  friend bool operator==(const BondConfig&, const BondConfig&) = default;

 private:
  std::vector<std::uint8_t> states_;
};

/// Per-vertex colors in {1..s}; 0 marks a vertex outside the domain.
class SpinConfig {
 public:
  static constexpr int kUndefined = 0;

  SpinConfig() = default;
  explicit SpinConfig(std::size_t num_vertices, int color = kUndefined)
      : colors_(num_vertices, color) {}
  explicit SpinConfig(std::vector<int> colors) : colors_(std::move(colors)) {}

  std::size_t size() const { return colors_.size(); }
  int operator[](int v) const { return colors_[static_cast<std::size_t>(v)]; }
  bool defined(int v) const { return colors_[static_cast<std::size_t>(v)] != kUndefined; }
  void set(int v, int color) { colors_[static_cast<std::size_t>(v)] = color; }
  void clear(int v) { colors_[static_cast<std::size_t>(v)] = kUndefined; }
  bool total() const {
    return std::none_of(colors_.begin(), colors_.end(), [](int c) { return c == kUndefined; });
  }
  VertexSet domain() const {
    VertexSet d;
    for (std::size_t v = 0; v < colors_.size(); ++v)
      if (colors_[v] != kUndefined) d.push_back(static_cast<int>(v));
    return d;
  }
  const std::vector<int>& raw() const { return colors_; }

  friend bool operator==(const SpinConfig&, const SpinConfig&) = default;

 private:
  std::vector<int> colors_;
};

class FiniteGraph {
 public:
  FiniteGraph() = default;

  /// Builds a graph from vertex coordinates and endpoint pairs. Edge ids are
  /// assigned after sorting into the canonical lexicographic order.
  FiniteGraph(std::vector<Coord> vertices, const std::vector<std::pair<int, int>>& edges,
              VertexSet boundary = {})
      : coords_(std::move(vertices)), boundary_(std::move(boundary)) {
    const int n = static_cast<int>(coords_.size());
    if (n == 0) throw std::invalid_argument("FiniteGraph: no vertices");
    dimension_ = static_cast<int>(coords_.front().size());
    for (int v = 0; v < n; ++v) {
      if (static_cast<int>(coords_[v].size()) != dimension_)
        throw std::invalid_argument("FiniteGraph: inconsistent coordinate dimension");
      if (!index_.emplace(coords_[v], v).second)
        throw std::invalid_argument("FiniteGraph: duplicate vertex coordinates");
    }
    for (auto [a, b] : edges) {
      if (a < 0 || b < 0 || a >= n || b >= n || a == b)
        throw std::invalid_argument("FiniteGraph: bad edge endpoints");
      if (coords_[b] < coords_[a]) std::swap(a, b);
      edges_.push_back({a, b});
    }
    std::sort(edges_.begin(), edges_.end(), [this](const Edge& x, const Edge& y) {
      if (coords_[x.u] != coords_[y.u]) return coords_[x.u] < coords_[y.u];
      return coords_[x.v] < coords_[y.v];
    });
    for (std::size_t e = 1; e < edges_.size(); ++e)
      if (edges_[e].u == edges_[e - 1].u && edges_[e].v == edges_[e - 1].v)
        throw std::invalid_argument("FiniteGraph: duplicate edge");

    incident_offsets_.assign(static_cast<std::size_t>(n) + 1, 0);
    for (const Edge& e : edges_) {
      ++incident_offsets_[e.u + 1];
      ++incident_offsets_[e.v + 1];
    }
    for (int v = 0; v < n; ++v) incident_offsets_[v + 1] += incident_offsets_[v];
    incident_.resize(incident_offsets_.back());
    std::vector<int> fill(incident_offsets_.begin(), incident_offsets_.end() - 1);
    for (int e = 0; e < static_cast<int>(edges_.size()); ++e) {
      incident_[fill[edges_[e].u]++] = e;
      incident_[fill[edges_[e].v]++] = e;
    }

    std::sort(boundary_.begin(), boundary_.end());
    boundary_.erase(std::unique(boundary_.begin(), boundary_.end()), boundary_.end());
    is_boundary_.assign(static_cast<std::size_t>(n), 0);
    for (int v : boundary_) {
      if (v < 0 || v >= n) throw std::invalid_argument("FiniteGraph: bad boundary vertex");
      is_boundary_[v] = 1;
    }
  }

  int dimension() const { return dimension_; }
  int num_vertices() const { return static_cast<int>(coords_.size()); }
  int num_edges() const { return static_cast<int>(edges_.size()); }

  const Coord& coords(int v) const { return coords_[static_cast<std::size_t>(v)]; }
  const Edge& edge(int e) const { return edges_[static_cast<std::size_t>(e)]; }
  const std::vector<Edge>& edges() const { return edges_; }

  std::span<const int> incident(int v) const {
    return {incident_.data() + incident_offsets_[v],
            static_cast<std::size_t>(incident_offsets_[v + 1] - incident_offsets_[v])};
  }
  int degree(int v) const { return incident_offsets_[v + 1] - incident_offsets_[v]; }
  int other(int e, int v) const {
    const Edge& ed = edge(e);
    return ed.u == v ? ed.v : ed.u;
  }

  const VertexSet& boundary_vertices() const { return boundary_; }
  bool is_boundary(int v) const { return is_boundary_[static_cast<std::size_t>(v)] != 0; }

  std::optional<int> find_vertex(const Coord& c) const {
    auto it = index_.find(c);
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }
  int vertex(const Coord& c) const {
    auto v = find_vertex(c);
    if (!v) throw std::out_of_range("FiniteGraph: no vertex at given coordinates");
    return *v;
  }
  std::optional<int> find_edge(int a, int b) const {
    for (int e : incident(a))
      if (other(e, a) == b) return e;
    return std::nullopt;
  }

  /// Radius n when built by build_box, otherwise empty.
  std::optional<int> box_radius() const { return box_radius_; }

 private:
  friend FiniteGraph build_box(int d, int n);

  int dimension_ = 0;
  std::vector<Coord> coords_;
  std::vector<Edge> edges_;
  std::vector<int> incident_offsets_;
  std::vector<int> incident_;
  VertexSet boundary_;
  std::vector<std::uint8_t> is_boundary_;
  std::map<Coord, int> index_;
  std::optional<int> box_radius_;
};

inline int sup_norm(const Coord& c) {
  int m = 0;
  for (int x : c) m = std::max(m, std::abs(x));
  return m;
}

inline int l1_norm(const Coord& c) {
  int m = 0;
  for (int x : c) m += std::abs(x);
  return m;
}

/// G_n for the d-dimensional lattice: Lambda_n = {-n..n}^d plus its outer
/// vertex boundary, with every lattice edge between those vertices.
inline FiniteGraph build_box(int d, int n) {
  if (d < 1) throw std::invalid_argument("build_box: dimension must be >= 1");
  if (n < 1) throw std::invalid_argument("build_box: radius must be >= 1");
  std::vector<Coord> vertices;
  VertexSet boundary;
  Coord c(static_cast<std::size_t>(d), -(n + 1));
  // Lexicographic walk over {-(n+1)..n+1}^d keeping Lambda_n and its boundary.
  while (true) {
    int outside = 0;
    for (int x : c)
      if (std::abs(x) == n + 1) ++outside;
    if (outside == 0) {
      vertices.push_back(c);
    } else if (outside == 1) {
      boundary.push_back(static_cast<int>(vertices.size()));
      vertices.push_back(c);
    }
    int i = d - 1;
    while (i >= 0 && c[i] == n + 1) c[i--] = -(n + 1);
    if (i < 0) break;
    ++c[i];
  }
  std::map<Coord, int> index;
  for (int v = 0; v < static_cast<int>(vertices.size()); ++v) index.emplace(vertices[v], v);
  std::vector<std::pair<int, int>> edges;
  for (int v = 0; v < static_cast<int>(vertices.size()); ++v) {
    for (int axis = 0; axis < d; ++axis) {
      Coord w = vertices[v];
      ++w[axis];
      auto it = index.find(w);
      if (it != index.end()) edges.emplace_back(v, it->second);
    }
  }
  FiniteGraph g(std::move(vertices), edges, std::move(boundary));
  g.box_radius_ = n;
  return g;
}

/// Rectangular grid {0..L_1-1} x ... x {0..L_d-1}; vertices on an outer face
/// form the boundary set.
inline FiniteGraph build_grid(const std::vector<int>& extents) {
  if (extents.empty()) throw std::invalid_argument("build_grid: no extents");
  for (int L : extents)
    if (L < 1) throw std::invalid_argument("build_grid: extents must be >= 1");
  const int d = static_cast<int>(extents.size());
  std::vector<Coord> vertices;
  VertexSet boundary;
  Coord c(static_cast<std::size_t>(d), 0);
  while (true) {
    bool on_face = false;
    for (int i = 0; i < d; ++i)
      if (c[i] == 0 || c[i] == extents[i] - 1) on_face = true;
    if (on_face) boundary.push_back(static_cast<int>(vertices.size()));
    vertices.push_back(c);
    int i = d - 1;
    while (i >= 0 && c[i] == extents[i] - 1) c[i--] = 0;
    if (i < 0) break;
    ++c[i];
  }
  std::map<Coord, int> index;
  for (int v = 0; v < static_cast<int>(vertices.size()); ++v) index.emplace(vertices[v], v);
  std::vector<std::pair<int, int>> edges;
  for (int v = 0; v < static_cast<int>(vertices.size()); ++v)
    for (int axis = 0; axis < d; ++axis) {
      Coord w = vertices[v];
      ++w[axis];
      auto it = index.find(w);
      if (it != index.end()) edges.emplace_back(v, it->second);
    }
  return FiniteGraph(std::move(vertices), edges, std::move(boundary));
}

namespace detail {

inline std::vector<std::uint8_t> to_mask(int size, std::span<const int> ids) {
  std::vector<std::uint8_t> m(static_cast<std::size_t>(size), 0);
  for (int i : ids) m[static_cast<std::size_t>(i)] = 1;
  return m;
}

inline std::vector<int> from_mask(const std::vector<std::uint8_t>& m) {
  std::vector<int> ids;
  for (std::size_t i = 0; i < m.size(); ++i)
    if (m[i]) ids.push_back(static_cast<int>(i));
  return ids;
}

}  // namespace detail

/// dH: vertices outside H adjacent to some vertex of H.
inline VertexSet vertex_boundary(const FiniteGraph& g, std::span<const int> H) {
  auto in_h = detail::to_mask(g.num_vertices(), H);
  std::vector<std::uint8_t> out(static_cast<std::size_t>(g.num_vertices()), 0);
  for (int v : H)
    for (int e : g.incident(v)) {
      int w = g.other(e, v);
      if (!in_h[w]) out[w] = 1;
    }
  return detail::from_mask(out);
}

/// Vertices at graph distance 1..k from H.
inline VertexSet k_neighborhood(const FiniteGraph& g, std::span<const int> H, int k) {
  if (k < 1) throw std::invalid_argument("k_neighborhood: k must be >= 1");
  std::vector<int> dist(static_cast<std::size_t>(g.num_vertices()), -1);
  std::vector<int> frontier;
  for (int v : H) {
    if (dist[v] < 0) frontier.push_back(v);
    dist[v] = 0;
  }
  for (int level = 1; level <= k && !frontier.empty(); ++level) {
    std::vector<int> next;
    for (int v : frontier)
      for (int e : g.incident(v)) {
        int w = g.other(e, v);
        if (dist[w] < 0) {
          dist[w] = level;
          next.push_back(w);
        }
      }
    frontier = std::move(next);
  }
  VertexSet out;
  for (int v = 0; v < g.num_vertices(); ++v)
    if (dist[v] >= 1) out.push_back(v);
  return out;
}

/// Edges with exactly one endpoint in W.
inline EdgeSet edge_boundary(const FiniteGraph& g, std::span<const int> W) {
  auto in_w = detail::to_mask(g.num_vertices(), W);
  EdgeSet out;
  for (int e = 0; e < g.num_edges(); ++e)
    if (in_w[g.edge(e).u] != in_w[g.edge(e).v]) out.push_back(e);
  return out;
}

/// Edges with both endpoints in W.
inline EdgeSet induced_edges(const FiniteGraph& g, std::span<const int> W) {
  auto in_w = detail::to_mask(g.num_vertices(), W);
  EdgeSet out;
  for (int e = 0; e < g.num_edges(); ++e)
    if (in_w[g.edge(e).u] && in_w[g.edge(e).v]) out.push_back(e);
  return out;
}

}  // namespace dacq
