#pragma once

// Connectivity primitives: union-find cluster labeling, early-exit
// bidirectional BFS and barrier (separating edge set) detection.

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

#include "dacq/graph.hpp"

namespace dacq {

class UnionFind {
 public:
  explicit UnionFind(std::size_t n) : parent_(n), size_(n, 1) {
    std::iota(parent_.begin(), parent_.end(), 0);
  }

  int find(int x) {
    int root = x;
    while (parent_[root] != root) root = parent_[root];
    while (parent_[x] != root) {
      int next = parent_[x];
      parent_[x] = root;
      x = next;
    }
    return root;
  }

  bool unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    if (size_[a] < size_[b]) std::swap(a, b);
    parent_[b] = a;
    size_[a] += size_[b];
    return true;
  }

  int component_size(int x) { return size_[find(x)]; }

 private:
  std::vector<int> parent_;
  std::vector<int> size_;
};

struct ClusterLabeling {
  std::vector<int> component_id;  // dense ids 0..component_count-1, in order of first vertex
  int component_count = 0;
  std::vector<std::vector<int>> members;

  int largest_size() const {
    std::size_t m = 0;
    for (const auto& c : members) m = std::max(m, c.size());
    return static_cast<int>(m);
  }
};

/// Components of the graph restricted to edges accepted by `keep`.
template <class EdgePredicate>
ClusterLabeling label_components(const FiniteGraph& g, EdgePredicate&& keep) {
  UnionFind uf(static_cast<std::size_t>(g.num_vertices()));
  for (int e = 0; e < g.num_edges(); ++e)
    if (keep(e)) uf.unite(g.edge(e).u, g.edge(e).v);
  ClusterLabeling out;
  out.component_id.assign(static_cast<std::size_t>(g.num_vertices()), -1);
  std::vector<int> root_label(static_cast<std::size_t>(g.num_vertices()), -1);
  for (int v = 0; v < g.num_vertices(); ++v) {
    int r = uf.find(v);
    if (root_label[r] < 0) {
      root_label[r] = out.component_count++;
      out.members.emplace_back();
    }
    out.component_id[v] = root_label[r];
    out.members[root_label[r]].push_back(v);
  }
  return out;
}

/// FK clusters of eta; k(eta) is the component count.
inline ClusterLabeling label_clusters(const FiniteGraph& g, const BondConfig& eta) {
  return label_components(g, [&](int e) { return eta.open(e); });
}

/// Reusable scratch space for repeated connectivity queries on one graph.
/// Optionally a vertex set can be "wired": all its members count as
/// mutually adjacent.
class ConnectivityProbe {
 public:
  explicit ConnectivityProbe(const FiniteGraph& g)
      : g_(&g),
        seen_(static_cast<std::size_t>(g.num_vertices()), 0),
        wired_(static_cast<std::size_t>(g.num_vertices()), 0) {}

  void set_wired(std::span<const int> vertices) {
    std::fill(wired_.begin(), wired_.end(), 0);
    wired_list_.assign(vertices.begin(), vertices.end());
    for (int v : vertices) wired_[v] = 1;
  }

  /// True iff x and y are joined by a path of edges accepted by `passable`.
  /// Both sides grow alternately (smaller frontier first) and stop at the
  /// first meeting.
  template <class EdgePredicate>
  bool connected(int x, int y, EdgePredicate&& passable) {
    if (x == y) return true;
    if (!wired_list_.empty() && wired_[x] && wired_[y]) return true;
    advance_stamp();
    const std::uint32_t side_a = stamp_, side_b = stamp_ + 1;
    queue_a_.clear();
    queue_b_.clear();
    wired_done_a_ = wired_done_b_ = false;
    std::size_t head_a = 0, head_b = 0;
    seen_[x] = side_a;
    queue_a_.push_back(x);
    seen_[y] = side_b;
    queue_b_.push_back(y);
    while (head_a < queue_a_.size() && head_b < queue_b_.size()) {
      const bool grow_a = (queue_a_.size() - head_a) <= (queue_b_.size() - head_b);
      auto& queue = grow_a ? queue_a_ : queue_b_;
      std::size_t& head = grow_a ? head_a : head_b;
      bool& wired_done = grow_a ? wired_done_a_ : wired_done_b_;
      const std::uint32_t mine = grow_a ? side_a : side_b;
      const std::uint32_t theirs = grow_a ? side_b : side_a;
      const int v = queue[head++];
      for (int e : g_->incident(v)) {
        if (!passable(e)) continue;
        const int w = g_->other(e, v);
        if (seen_[w] == theirs) return true;
        if (seen_[w] != mine) {
          seen_[w] = mine;
          queue.push_back(w);
        }
      }
      if (!wired_done && wired_[v]) {
        wired_done = true;
        for (int w : wired_list_) {
          if (seen_[w] == theirs) return true;
          if (seen_[w] != mine) {
            seen_[w] = mine;
            queue.push_back(w);
          }
        }
      }
    }
    return false;
  }

  /// Vertices reachable from `sources` through passable edges.
  template <class EdgePredicate>
  std::vector<int> reach(std::span<const int> sources, EdgePredicate&& passable) {
    advance_stamp();
    const std::uint32_t mark = stamp_;
    std::vector<int> out;
    bool wired_done = false;
    for (int s : sources)
      if (seen_[s] != mark) {
        seen_[s] = mark;
        out.push_back(s);
      }
    for (std::size_t head = 0; head < out.size(); ++head) {
      const int v = out[head];
      for (int e : g_->incident(v)) {
        if (!passable(e)) continue;
        const int w = g_->other(e, v);
        if (seen_[w] != mark) {
          seen_[w] = mark;
          out.push_back(w);
        }
      }
      if (!wired_done && !wired_list_.empty() && wired_[v]) {
        wired_done = true;
        for (int w : wired_list_)
          if (seen_[w] != mark) {
            seen_[w] = mark;
            out.push_back(w);
          }
      }
    }
    return out;
  }

 private:
  void advance_stamp() {
    if (stamp_ >= 0xFFFFFFF0u) {
      std::fill(seen_.begin(), seen_.end(), 0);
      stamp_ = 1;
    } else {
      stamp_ += 2;
    }
  }

  const FiniteGraph* g_;
  std::vector<std::uint32_t> seen_;
  std::uint32_t stamp_ = 1;
  std::vector<int> queue_a_, queue_b_;
  bool wired_done_a_ = false, wired_done_b_ = false;
  std::vector<std::uint8_t> wired_;
  std::vector<int> wired_list_;
};

/// Open path between x and y that uses none of the excluded edges.
inline bool connected_excluding(const FiniteGraph& g, const BondConfig& eta, int x, int y,
                                std::span<const int> excluded) {
  auto skip = detail::to_mask(g.num_edges(), excluded);
  ConnectivityProbe probe(g);
  return probe.connected(x, y, [&](int e) { return eta.open(e) && !skip[e]; });
}

struct Barrier {
  EdgeSet edges;
  VertexSet interior_vertices;
  EdgeSet interior_edges;
  VertexSet exterior_vertices;
  EdgeSet exterior_edges;

  /// Largest sup-norm of an interior vertex.
  int radius(const FiniteGraph& g) const {
    int r = 0;
    for (int v : interior_vertices) r = std::max(r, sup_norm(g.coords(v)));
    return r;
  }
};

/// Checks whether removing B separates some vertices from the boundary set.
/// The exterior is the union of components meeting boundary_vertices; the
/// remaining components form the interior. Graphs without boundary vertices
/// have no exterior and yield no barrier.
inline std::optional<Barrier> is_barrier(const FiniteGraph& g, std::span<const int> B) {
  if (g.boundary_vertices().empty()) return std::nullopt;
  auto in_b = detail::to_mask(g.num_edges(), B);
  ConnectivityProbe probe(g);
  auto outside = probe.reach(g.boundary_vertices(), [&](int e) { return !in_b[e]; });
  std::vector<std::uint8_t> ext(static_cast<std::size_t>(g.num_vertices()), 0);
  for (int v : outside) ext[v] = 1;
  if (static_cast<int>(outside.size()) == g.num_vertices()) return std::nullopt;
  Barrier b;
  b.edges = detail::from_mask(in_b);
  for (int v = 0; v < g.num_vertices(); ++v)
    (ext[v] ? b.exterior_vertices : b.interior_vertices).push_back(v);
  for (int e = 0; e < g.num_edges(); ++e) {
    if (in_b[e]) continue;
    (ext[g.edge(e).u] ? b.exterior_edges : b.interior_edges).push_back(e);
  }
  return b;
}

/// Subgraph induced by a vertex subset, with maps back to parent ids.
struct InducedSubgraph {
  FiniteGraph graph;
  std::vector<int> parent_vertex;  // sub id -> parent id
  std::vector<int> parent_edge;    // sub id -> parent id
};

inline InducedSubgraph induced_subgraph(const FiniteGraph& g, std::span<const int> vertices) {
  InducedSubgraph out;
  std::vector<int> local(static_cast<std::size_t>(g.num_vertices()), -1);
  std::vector<Coord> coords;
  VertexSet boundary;
  for (int v : vertices) {
    local[v] = static_cast<int>(coords.size());
    out.parent_vertex.push_back(v);
    if (g.is_boundary(v)) boundary.push_back(local[v]);
    coords.push_back(g.coords(v));
  }
  std::vector<std::pair<int, int>> edges;
  for (int e = 0; e < g.num_edges(); ++e) {
    int a = local[g.edge(e).u], b = local[g.edge(e).v];
    if (a >= 0 && b >= 0) edges.emplace_back(a, b);
  }
  out.graph = FiniteGraph(std::move(coords), edges, std::move(boundary));
  // Canonical order is shared with the parent, so sub edges map in sequence.
  for (int e = 0; e < g.num_edges(); ++e)
    if (local[g.edge(e).u] >= 0 && local[g.edge(e).v] >= 0) out.parent_edge.push_back(e);
  return out;
}

}  // namespace dacq
