#pragma once

// Single-bond heat-bath dynamics for random-cluster measures. Each update
// reads one uniform addressed by (seed, sweep, edge), so a trajectory is a
// pure function of the seed.

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <vector>

#include "dacq/clusters.hpp"
#include "dacq/exact.hpp"
#include "dacq/graph.hpp"
#include "dacq/params.hpp"
#include "dacq/rng.hpp"
#include "dacq/stats.hpp"

namespace dacq {

enum class BoundaryMode { kFree, kWired };

/// Edges with both endpoints in the boundary set; frozen open in wired mode.
inline EdgeSet boundary_ring_edges(const FiniteGraph& g) {
  EdgeSet out;
  for (int e = 0; e < g.num_edges(); ++e)
    if (g.is_boundary(g.edge(e).u) && g.is_boundary(g.edge(e).v)) out.push_back(e);
  return out;
}

/// Open probability of an edge under a random-cluster measure given the rest.
inline double heat_bath_open_probability(double p, double q, bool connected_off_e) {
  return connected_off_e ? p : isolated_open_probability(p, q);
}

class RcChain {
 public:
  RcChain(const FiniteGraph& g, double p, double q, std::uint64_t seed, BoundaryMode mode = BoundaryMode::kFree,
          const EdgeConstraint& forced = {})
      : g_(&g),
        p_(p),
        q_edge_(static_cast<std::size_t>(g.num_edges()), q),
        state_(static_cast<std::size_t>(g.num_edges()), mode == BoundaryMode::kWired),
        frozen_(static_cast<std::size_t>(g.num_edges()), 0),
        rng_(seed),
        probe_(g) {
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("RcChain: p must lie in [0,1]");
    if (!(q > 0.0)) throw std::invalid_argument("RcChain: q must be > 0");
    auto closed = detail::to_mask(g.num_edges(), forced.forced_closed);
    for (int e : forced.forced_open)
      if (closed[e]) throw std::invalid_argument("RcChain: forced_open and forced_closed overlap");
    if (mode == BoundaryMode::kWired)
      for (int e : boundary_ring_edges(g)) freeze(e, true);
    for (int e : forced.forced_open) freeze(e, true);
    for (int e : forced.forced_closed) freeze(e, false);
  }

  /// Treat every boundary vertex as joined when testing connectivity.
  void wire_boundary() { probe_.set_wired(g_->boundary_vertices()); }

  /// Per-edge cluster weight; lets one chain run several color classes.
  void set_edge_q(std::vector<double> q_edge) {
    if (q_edge.size() != q_edge_.size()) throw std::invalid_argument("RcChain: q vector size mismatch");
    q_edge_ = std::move(q_edge);
  }

  void freeze(int e, bool open) {
    frozen_[e] = 1;
    state_.set(e, open);
  }
  bool frozen(int e) const { return frozen_[e] != 0; }

  void set_state(const BondConfig& eta) {
    for (int e = 0; e < g_->num_edges(); ++e)
      if (!frozen_[e]) state_.set(e, eta.open(e));
  }

  /// P(eta(e) = 1 | current state off e).
  double open_probability(int e) {
    const double q = q_edge_[e];
    if (q == 1.0 || p_ <= 0.0 || p_ >= 1.0) return heat_bath_open_probability(p_, q, false);
    const auto [u, v] = g_->edge(e);
    const bool linked = probe_.connected(u, v, [&](int f) { return f != e && state_.open(f); });
    return heat_bath_open_probability(p_, q, linked);
  }

  /// One heat-bath update of edge e driven by the given uniform.
  void update(int e, double u) {
    if (frozen_[e]) throw std::logic_error("RcChain: cannot update a frozen edge");
    state_.set(e, u < open_probability(e));
  }

  void heat_bath_step(int e) { update(e, rng_.uniform(Stream::kBond, kStepTag | steps_++, static_cast<std::uint32_t>(e))); }

  /// Every non-frozen edge once, in edge order.
  void sweep() {
    for (int e = 0; e < g_->num_edges(); ++e)
      if (!frozen_[e]) update(e, rng_.uniform(Stream::kBond, sweeps_, static_cast<std::uint32_t>(e)));
    ++sweeps_;
  }

  const BondConfig& state() const { return state_; }
  const FiniteGraph& graph() const { return *g_; }
  std::uint64_t sweeps() const { return sweeps_; }

 private:
  static constexpr std::uint64_t kStepTag = std::uint64_t{1} << 63;

  const FiniteGraph* g_;
  double p_;
  std::vector<double> q_edge_;
  BondConfig state_;
  std::vector<std::uint8_t> frozen_;
  CounterRng rng_;
  std::uint64_t sweeps_ = 0;
  std::uint64_t steps_ = 0;
  ConnectivityProbe probe_;
};

struct ChainOptions {
  std::uint64_t burn_in = 100;
  std::uint64_t samples = 100;
  std::uint64_t thinning = 1;
  bool keep_samples = true;
};

struct ChainStats {
  std::vector<std::uint64_t> sweep;
  std::vector<double> open_density;
  std::vector<double> largest_cluster_fraction;
  std::vector<std::uint8_t> origin_boundary_connected;
};

struct ChainRun {
  std::vector<BondConfig> samples;
  ChainStats stats;
};

/// Vertex at the coordinate origin, if the graph has one.
inline int origin_vertex(const FiniteGraph& g) {
  auto v = g.find_vertex(Coord(static_cast<std::size_t>(g.dimension()), 0));
  return v ? *v : -1;
}

inline void record_stats(const FiniteGraph& g, const BondConfig& eta, std::uint64_t sweep, int origin, ChainStats& st) {
  auto labels = label_clusters(g, eta);
  st.sweep.push_back(sweep);
  st.open_density.push_back(g.num_edges() ? static_cast<double>(eta.count_open()) / g.num_edges() : 0.0);
  st.largest_cluster_fraction.push_back(static_cast<double>(labels.largest_size()) / g.num_vertices());
  bool hit = false;
  if (origin >= 0)
    for (int b : g.boundary_vertices())
      if (labels.component_id[b] == labels.component_id[origin]) {
        hit = true;
        break;
      }
  st.origin_boundary_connected.push_back(hit ? 1 : 0);
}

/// Runs a chain from the extremal start (free: all closed, wired: all open)
/// and calls `visit` on each recorded state after burn-in.
inline void run_chain_visit(RcChain& chain, const ChainOptions& opt,
                            const std::function<void(const BondConfig&, std::uint64_t)>& visit) {
  if (opt.thinning == 0) throw std::invalid_argument("run_chain: thinning must be >= 1");
  for (std::uint64_t i = 0; i < opt.burn_in; ++i) chain.sweep();
  for (std::uint64_t s = 0; s < opt.samples; ++s) {
    for (std::uint64_t t = 0; t < opt.thinning; ++t) chain.sweep();
    visit(chain.state(), chain.sweeps());
  }
}

inline ChainRun run_chain(const FiniteGraph& g, double p, double q, BoundaryMode mode, std::uint64_t seed,
                          const ChainOptions& opt, const EdgeConstraint& forced = {}) {
  RcChain chain(g, p, q, seed, mode, forced);
  ChainRun run;
  const int origin = origin_vertex(g);
  run_chain_visit(chain, opt, [&](const BondConfig& eta, std::uint64_t sweep) {
    record_stats(g, eta, sweep, origin, run.stats);
    if (opt.keep_samples) run.samples.push_back(eta);
  });
  return run;
}

/// Free-boundary chain with some edges pinned open or closed.
inline ChainRun run_conditioned_chain(const FiniteGraph& g, double p, double q, const EdgeSet& forced_closed,
                                      const EdgeSet& forced_open, std::uint64_t seed, const ChainOptions& opt) {
  return run_chain(g, p, q, BoundaryMode::kFree, seed, opt, EdgeConstraint{forced_open, forced_closed});
}

/// Frequency of an open path between the vertex sets X and Y.
inline Estimate estimate_connection(const FiniteGraph& g, const std::vector<BondConfig>& samples, const VertexSet& X,
                                    const VertexSet& Y) {
  if (samples.empty()) throw std::invalid_argument("estimate_connection: no samples");
  std::vector<double> hits;
  hits.reserve(samples.size());
  for (const auto& eta : samples) {
    auto labels = label_clusters(g, eta);
    std::vector<std::uint8_t> in_x(static_cast<std::size_t>(labels.component_count), 0);
    for (int x : X) in_x[labels.component_id[x]] = 1;
    bool hit = false;
    for (int y : Y) hit = hit || in_x[labels.component_id[y]];
    hits.push_back(hit ? 1.0 : 0.0);
  }
  return chain_estimate(hits);
}

inline Estimate estimate_connection(const FiniteGraph& g, const std::vector<BondConfig>& samples, int x, int y) {
  return estimate_connection(g, samples, VertexSet{x}, VertexSet{y});
}

}  // namespace dacq
