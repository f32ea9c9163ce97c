#pragma once

// Stochastic domination tools: the dominating bond measure, edgewise
// (Holley) comparisons, Strassen feasibility by max-flow, and the
// edge-by-edge exploration coupling of two conditioned DaC measures with a
// dominating measure.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <queue>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "dacq/clusters.hpp"
#include "dacq/dac_sampler.hpp"
#include "dacq/exact.hpp"
#include "dacq/graph.hpp"
#include "dacq/parallel.hpp"
#include "dacq/params.hpp"
#include "dacq/rc_sampler.hpp"
#include "dacq/rng.hpp"
#include "dacq/stats.hpp"

namespace dacq {

enum class DominatingKind { kWiredRc, kProductBernoulli };

struct DominatingSpec {
  DominatingKind kind = DominatingKind::kProductBernoulli;
  double p_effective = 0.0;
  double q_effective = 1.0;
  int ell = 0;
};

inline void require_coupling_regime(const ModelParams& params) {
  params.validate();
  if (params.q < 1.0) throw std::domain_error("domination: requires q >= 1");
  if (params.is_potts()) throw std::domain_error("domination: every color lies in S_{1/q}; no dominating measure needed");
}

inline DominatingSpec dominating_spec(const ModelParams& params) {
  require_coupling_regime(params);
  const int ell = *params.ell();
  const double qa = params.q * params.a_of(ell);
  if (qa > 1.0) return {DominatingKind::kWiredRc, params.p, qa, ell};
  return {DominatingKind::kProductBernoulli, isolated_open_probability(params.p, qa), 1.0, ell};
}

enum class EdgeContext { kDiffering, kSameColor, kConnectedOffEdge };

struct HolleyPair {
  double dominating = 0.0;
  double dominated = 0.0;
  bool holds() const { return dominating >= dominated; }
};

/// Conditional open probabilities of one edge under the dominating measure
/// and under the modified bond field given spins. For kSameColor and
/// kConnectedOffEdge both endpoints carry color j; the dominating side is
/// taken in its least favorable state consistent with the context.
inline HolleyPair holley_edge_check(const ModelParams& params, EdgeContext ctx, int j) {
  const auto spec = dominating_spec(params);
  const bool connected = ctx == EdgeContext::kConnectedOffEdge;
  HolleyPair out;
  out.dominating = spec.kind == DominatingKind::kProductBernoulli
                       ? spec.p_effective
                       : heat_bath_open_probability(params.p, spec.q_effective, connected);
  if (ctx == EdgeContext::kDiffering || params.in_inverse_q_set(j)) {
    out.dominated = 0.0;
  } else {
    out.dominated = heat_bath_open_probability(params.p, params.q * params.a_of(j), connected);
  }
  return out;
}

namespace detail {

// Edmonds-Karp on an adjacency-matrix network; capacities are integers.
inline std::int64_t max_flow(std::vector<std::vector<std::int64_t>> cap, int source, int sink) {
  const int n = static_cast<int>(cap.size());
  std::int64_t flow = 0;
  std::vector<int> parent(static_cast<std::size_t>(n));
  while (true) {
    std::fill(parent.begin(), parent.end(), -1);
    parent[source] = source;
    std::queue<int> bfs;
    bfs.push(source);
    while (!bfs.empty() && parent[sink] < 0) {
      const int u = bfs.front();
      bfs.pop();
      for (int v = 0; v < n; ++v)
        if (parent[v] < 0 && cap[u][v] > 0) {
          parent[v] = u;
          bfs.push(v);
        }
    }
    if (parent[sink] < 0) return flow;
    std::int64_t push = std::numeric_limits<std::int64_t>::max();
    for (int v = sink; v != source; v = parent[v]) push = std::min(push, cap[parent[v]][v]);
    for (int v = sink; v != source; v = parent[v]) {
      cap[parent[v]][v] -= push;
      cap[v][parent[v]] += push;
    }
    flow += push;
  }
}

}  // namespace detail

inline constexpr double kStrassenScale = 1e9;
inline constexpr int kMaxStrassenEdges = 6;

/// True iff a monotone coupling of the two bond laws (indexed by mask) exists:
/// max-flow from the high side to the low side along arcs high >= low must
/// carry all mass, up to the rounding of probabilities to multiples of 1e-9.
inline bool strassen_feasible(std::span<const double> high, std::span<const double> low, int num_edges) {
  if (num_edges > kMaxStrassenEdges) throw SizeError("strassen_feasible: at most 6 edges");
  const std::size_t states = std::size_t{1} << num_edges;
  if (high.size() != states || low.size() != states) throw std::invalid_argument("strassen_feasible: size mismatch");
  const int n = static_cast<int>(2 * states + 2);
  const int source = n - 2, sink = n - 1;
  std::vector<std::vector<std::int64_t>> cap(static_cast<std::size_t>(n), std::vector<std::int64_t>(static_cast<std::size_t>(n), 0));
  std::int64_t total_high = 0, total_low = 0;
  const std::int64_t inf = std::int64_t{1} << 40;
  for (std::size_t s = 0; s < states; ++s) {
    const auto h = static_cast<std::int64_t>(std::llround(high[s] * kStrassenScale));
    const auto l = static_cast<std::int64_t>(std::llround(low[s] * kStrassenScale));
    cap[source][s] = h;
    cap[states + s][sink] = l;
    total_high += h;
    total_low += l;
    for (std::size_t t = 0; t < states; ++t)
      if ((s & t) == t) cap[s][states + t] = inf;
  }
  const std::int64_t flow = detail::max_flow(std::move(cap), source, sink);
  return flow >= std::min(total_high, total_low) - static_cast<std::int64_t>(states);
}

inline bool strassen_feasible(const FkExact& high, const FkExact& low) {
  if (high.num_edges != low.num_edges) throw std::invalid_argument("strassen_feasible: edge counts differ");
  return strassen_feasible(high.probabilities(), low.probabilities(), high.num_edges);
}

/// Domination checked on every increasing event (at most 4 edges).
inline bool dominates_by_events(std::span<const double> high, std::span<const double> low, int num_edges,
                                double tol = 1e-9) {
  for (const auto& ev : monotone_events_exhaustive(num_edges))
    if (event_probability(high, ev) < event_probability(low, ev) - tol) return false;
  return true;
}

// ---------------------------------------------------------------------------
// Exploration coupling.

enum class CouplingEnd { kBarrier, kCrossing };

struct CouplingStep {
  int edge = -1;
  double u = 0.0;
  std::uint8_t hat = 0;
  std::uint8_t hat_prime = 0;
  std::uint8_t dom = 0;
  std::size_t frontier = 0;
};

struct CouplingTranscript {
  std::vector<CouplingStep> steps;
  CouplingEnd end = CouplingEnd::kBarrier;
  std::optional<Barrier> barrier;
  EdgeSet crossing_path;  // dominating-open path from the box boundary to dW
  std::vector<int> x_w;
  std::vector<int> x_w_prime;

  bool x_equal() const { return x_w == x_w_prime; }
  bool explored(int e) const {
    return std::any_of(steps.begin(), steps.end(), [e](const CouplingStep& s) { return s.edge == e; });
  }
};

/// Case-split open probability of the modified field at e given spins s
/// (vertices flagged in `free_vertex` count as any color) and the revealed
/// part of `field`: 0 for unequal spins or a color in S_{1/q}; p if x and y
/// are joined by revealed open edges and unrevealed edges of their color;
/// p/(p+(1-p)q a_j) otherwise.
inline double modified_edge_probability(const FiniteGraph& g, const ModelParams& params, const SpinConfig& s,
                                        const std::vector<std::uint8_t>& free_vertex,
                                        const std::vector<std::uint8_t>& revealed,
                                        const std::vector<std::uint8_t>& field, int e, ConnectivityProbe& probe) {
  const auto [x, y] = g.edge(e);
  if (free_vertex[x] || free_vertex[y]) throw std::invalid_argument("modified_edge_probability: endpoint spin unknown");
  if (s[x] != s[y] || params.in_inverse_q_set(s[x])) return 0.0;
  const int j = s[x];
  auto colored = [&](int v) { return free_vertex[v] || s[v] == j; };
  const bool linked = probe.connected(x, y, [&](int f) {
    if (f == e) return false;
    if (revealed[f]) return field[f] != 0;
    return colored(g.edge(f).u) && colored(g.edge(f).v);
  });
  return heat_bath_open_probability(params.p, params.q * params.a_of(j), linked);
}

/// Open probability of e under the dominating measure given its revealed
/// part, unrevealed edges counted open; `probe` should wire the boundary.
inline double dominating_edge_probability(const FiniteGraph& g, const DominatingSpec& spec,
                                          const std::vector<std::uint8_t>& revealed,
                                          const std::vector<std::uint8_t>& dom, int e, ConnectivityProbe& probe) {
  if (spec.kind == DominatingKind::kProductBernoulli) return spec.p_effective;
  const auto [x, y] = g.edge(e);
  const bool linked = probe.connected(x, y, [&](int f) { return f != e && (!revealed[f] || dom[f]); });
  return heat_bath_open_probability(spec.p_effective, spec.q_effective, linked);
}

struct CouplingOptions {
  std::uint64_t gibbs_sweeps = 50;
};

namespace detail {

inline VertexSet with_boundary(const FiniteGraph& g, const VertexSet& W) {
  VertexSet out = W;
  auto dw = vertex_boundary(g, W);
  out.insert(out.end(), dw.begin(), dw.end());
  std::sort(out.begin(), out.end());
  return out;
}

// Spins on W after `sweeps` conditional Gibbs steps from sigma off W.
inline std::vector<int> draw_window(const FiniteGraph& g, const ModelParams& params, const SpinConfig& sigma,
                                    const VertexSet& W, std::uint64_t seed, std::uint64_t sweeps) {
  ConditionalSpinGibbs gibbs(g, params, sigma, W, seed);
  for (std::uint64_t i = 0; i < sweeps; ++i) gibbs.step();
  std::vector<int> out;
  for (int w : W) out.push_back(gibbs.spins()[w]);
  return out;
}

}  // namespace detail

/// Explores edges from the box boundary inward, one uniform per edge, and
/// stops at a dominating-closed barrier around W u dW or at a
/// dominating-open crossing to dW. The modified fields use the per-edge case
/// split given the revealed context; vertices of W count as any color.
inline CouplingTranscript run_three_way_coupling(const FiniteGraph& g, const ModelParams& params,
                                                 const SpinConfig& sigma, const SpinConfig& sigma_prime,
                                                 const VertexSet& W, std::uint64_t seed,
                                                 const CouplingOptions& opt = {}) {
  const auto spec = dominating_spec(params);
  const int nv = g.num_vertices(), ne = g.num_edges();
  if (W.empty()) throw std::invalid_argument("run_three_way_coupling: W must be nonempty");
  const auto in_w = detail::to_mask(nv, W);
  const VertexSet core = detail::with_boundary(g, W);
  const auto in_core = detail::to_mask(nv, core);
  for (int v : core)
    if (g.is_boundary(v)) throw std::invalid_argument("run_three_way_coupling: W and dW must avoid the box boundary");
  for (int v = 0; v < nv; ++v) {
    if (in_w[v]) continue;
    if (!sigma.defined(v) || !sigma_prime.defined(v))
      throw std::invalid_argument("run_three_way_coupling: spins must be given off W");
    if (!g.is_boundary(v) && sigma[v] != sigma_prime[v])
      throw std::invalid_argument("run_three_way_coupling: sigma and sigma' must agree inside the box off W");
  }

  CounterRng rng(seed);
  std::vector<std::uint8_t> revealed(static_cast<std::size_t>(ne), 0), hat(revealed), hat2(revealed), dom(revealed);
  std::vector<std::uint8_t> active(static_cast<std::size_t>(nv), 0);
  std::priority_queue<int, std::vector<int>, std::greater<>> frontier;
  auto activate = [&](int v) {
    if (active[v]) return;
    active[v] = 1;
    for (int e : g.incident(v))
      if (!revealed[e]) frontier.push(e);
  };
  ConnectivityProbe probe(g), dom_probe(g);
  dom_probe.set_wired(g.boundary_vertices());

  auto hat_probability = [&](const SpinConfig& s, const std::vector<std::uint8_t>& field, int e) {
    const auto [x, y] = g.edge(e);
    if (in_w[x] || in_w[y]) throw std::logic_error("run_three_way_coupling: explored an edge touching W");
    return modified_edge_probability(g, params, s, in_w, revealed, field, e, probe);
  };
  auto dom_probability = [&](int e) { return dominating_edge_probability(g, spec, revealed, dom, e, dom_probe); };

  CouplingTranscript tr;
  for (int b : g.boundary_vertices()) activate(b);
  bool done = false;
  while (!done) {
    if (frontier.empty()) throw std::logic_error("run_three_way_coupling: exploration ended without a terminal event");
    const int e = frontier.top();
    frontier.pop();
    if (revealed[e]) continue;
    const double u = rng.uniform(Stream::kCoupling, 0, static_cast<std::uint32_t>(e));
    const double ph = hat_probability(sigma, hat, e);
    const double ph2 = hat_probability(sigma_prime, hat2, e);
    const double pd = dom_probability(e);
    revealed[e] = 1;
    hat[e] = u < ph;
    hat2[e] = u < ph2;
    dom[e] = u < pd;
    if (hat[e] > dom[e] || hat2[e] > dom[e]) throw std::logic_error("run_three_way_coupling: domination violated");
    tr.steps.push_back({e, u, hat[e], hat2[e], dom[e], frontier.size()});
    const auto [x, y] = g.edge(e);
    if (dom[e]) {
      if (in_core[x] || in_core[y]) {
        tr.end = CouplingEnd::kCrossing;
        done = true;
      }
      activate(x);
      activate(y);
    } else {
      auto reached = probe.reach(core, [&](int f) { return !(revealed[f] && !dom[f]); });
      if (std::none_of(reached.begin(), reached.end(), [&](int v) { return g.is_boundary(v); })) {
        std::sort(reached.begin(), reached.end());
        tr.barrier = is_barrier(g, edge_boundary(g, reached));
        if (!tr.barrier) throw std::logic_error("run_three_way_coupling: separating set is not a barrier");
        tr.end = CouplingEnd::kBarrier;
        done = true;
      }
    }
  }

  const std::uint64_t gibbs_seed = derive_seed(seed, static_cast<std::uint64_t>(Stream::kSpin), 0);
  if (tr.end == CouplingEnd::kBarrier) {
    const auto& region = tr.barrier->interior_vertices;
    for (int v : region)
      if (!in_w[v] && sigma[v] != sigma_prime[v]) throw std::logic_error("run_three_way_coupling: spins differ inside B");
    auto sub = induced_subgraph(g, region);
    SpinConfig local(region.size());
    VertexSet local_w;
    for (std::size_t i = 0; i < region.size(); ++i) {
      if (in_w[region[i]]) {
        local_w.push_back(static_cast<int>(i));
      } else {
        local.set(static_cast<int>(i), sigma[region[i]]);
      }
    }
    tr.x_w = detail::draw_window(sub.graph, params, local, local_w, gibbs_seed, opt.gibbs_sweeps);
    tr.x_w_prime = tr.x_w;
  } else {
    // Dominating-open path from the boundary to dW, by BFS over revealed open edges.
    std::vector<int> parent_edge(static_cast<std::size_t>(nv), -2);
    std::queue<int> bfs;
    for (int b : g.boundary_vertices()) {
      parent_edge[b] = -1;
      bfs.push(b);
    }
    int hit = -1;
    while (!bfs.empty() && hit < 0) {
      const int v = bfs.front();
      bfs.pop();
      for (int f : g.incident(v)) {
        if (!revealed[f] || !dom[f]) continue;
        const int w = g.other(f, v);
        if (parent_edge[w] != -2) continue;
        parent_edge[w] = f;
        if (in_core[w]) {
          hit = w;
          break;
        }
        bfs.push(w);
      }
    }
    for (int v = hit; v >= 0 && parent_edge[v] >= 0; v = g.other(parent_edge[v], v)) tr.crossing_path.push_back(parent_edge[v]);
    std::reverse(tr.crossing_path.begin(), tr.crossing_path.end());
    tr.x_w = detail::draw_window(g, params, sigma, W, gibbs_seed, opt.gibbs_sweeps);
    tr.x_w_prime = detail::draw_window(g, params, sigma_prime, W, gibbs_seed, opt.gibbs_sweeps);
  }
  return tr;
}

/// Boundary pair for coupling experiments: i.i.d.(a) spins inside the box
/// off W, the box boundary all ell in sigma and all m in sigma'.
inline std::pair<SpinConfig, SpinConfig> coupling_spin_pair(const FiniteGraph& g, const ModelParams& params,
                                                            const VertexSet& W, int ell, int m, std::uint64_t seed) {
  const auto in_w = detail::to_mask(g.num_vertices(), W);
  SpinConfig s(static_cast<std::size_t>(g.num_vertices())), sp(s);
  RngStream stream(seed, Stream::kSpin);
  for (int v = 0; v < g.num_vertices(); ++v) {
    if (in_w[v]) continue;
    if (g.is_boundary(v)) {
      s.set(v, ell);
      sp.set(v, m);
    } else {
      const int c = stream.categorical(params.a);
      s.set(v, c);
      sp.set(v, c);
    }
  }
  return {s, sp};
}

struct CouplingSummaryRow {
  std::uint64_t replica = 0;
  CouplingEnd end = CouplingEnd::kBarrier;
  int barrier_radius = -1;
  bool x_equal = true;
  std::size_t explored = 0;
};

/// Replica r: boundary ell for sigma and m != ell for sigma', i.i.d. spins
/// inside, both seeds derived from (seed, r).
inline CouplingTranscript run_coupling_replica(const FiniteGraph& g, const ModelParams& params, const VertexSet& W,
                                               std::uint64_t seed, std::uint64_t r, const CouplingOptions& opt = {}) {
  const int ell = dominating_spec(params).ell;
  const int m = ell == 1 ? 2 : 1;
  const auto [s, sp] = coupling_spin_pair(g, params, W, ell, m, derive_seed(seed, static_cast<std::uint64_t>(Stream::kSpin), r));
  return run_three_way_coupling(g, params, s, sp, W, derive_seed(seed, static_cast<std::uint64_t>(Stream::kCoupling), r), opt);
}

/// Independent coupling replicas, each with its own spin pair and seed.
inline std::vector<CouplingSummaryRow> run_coupling_replicas(const FiniteGraph& g, const ModelParams& params,
                                                             const VertexSet& W, std::uint64_t seed,
                                                             std::uint64_t replicas, unsigned threads,
                                                             const CouplingOptions& opt = {}) {
  dominating_spec(params);
  return parallel_map(static_cast<std::size_t>(replicas), threads, [&](std::size_t r) {
    auto tr = run_coupling_replica(g, params, W, seed, r, opt);
    CouplingSummaryRow row;
    row.replica = r;
    row.end = tr.end;
    row.barrier_radius = tr.barrier ? tr.barrier->radius(g) : -1;
    row.x_equal = tr.x_equal();
    row.explored = tr.steps.size();
    return row;
  });
}

struct CrossingOptions {
  std::uint64_t burn_in = 200;
  std::uint64_t chains = 8;
  unsigned threads = 1;
};

/// Probability of an open path from dW to the boundary of the box under the
/// dominating measure: direct Bernoulli draws, or wired heat-bath chains.
inline Estimate crossing_estimate(const DominatingSpec& spec, const FiniteGraph& g, const VertexSet& W,
                                  std::uint64_t seed, std::uint64_t replicas, const CrossingOptions& opt = {}) {
  if (replicas == 0) throw std::invalid_argument("crossing_estimate: replicas must be positive");
  auto dw = vertex_boundary(g, W);
  for (int v : W)
    if (g.is_boundary(v)) throw std::invalid_argument("crossing_estimate: W must lie inside the box");
  auto hits_boundary = [&](ConnectivityProbe& probe, auto&& open) {
    auto reached = probe.reach(dw, open);
    return std::any_of(reached.begin(), reached.end(), [&](int v) { return g.is_boundary(v); });
  };
  if (spec.kind == DominatingKind::kProductBernoulli) {
    CounterRng rng(seed);
    auto hits = parallel_map(static_cast<std::size_t>(replicas), opt.threads, [&](std::size_t r) {
      ConnectivityProbe probe(g);
      const bool hit = hits_boundary(probe, [&](int e) {
        return rng.uniform(Stream::kBernoulli, r, static_cast<std::uint32_t>(e)) < spec.p_effective;
      });
      return hit ? 1.0 : 0.0;
    });
    return replica_estimate(hits);
  }
  const std::uint64_t chains = std::min<std::uint64_t>(opt.chains, replicas);
  const std::uint64_t per_chain = (replicas + chains - 1) / chains;
  auto parts = parallel_map(static_cast<std::size_t>(chains), opt.threads, [&](std::size_t c) {
    RcChain chain(g, spec.p_effective, spec.q_effective, derive_seed(seed, static_cast<std::uint64_t>(Stream::kSampling), c),
                  BoundaryMode::kWired);
    chain.wire_boundary();
    ConnectivityProbe probe(g);
    std::vector<double> hits;
    run_chain_visit(chain, ChainOptions{opt.burn_in, per_chain, 1, false}, [&](const BondConfig& eta, std::uint64_t) {
      hits.push_back(hits_boundary(probe, [&](int e) { return eta.open(e); }) ? 1.0 : 0.0);
    });
    return chain_estimate(hits);
  });
  Estimate out;
  double var = 0.0;
  for (const auto& part : parts) {
    out.value += part.value;
    var += part.se * part.se;
    out.n += part.n;
  }
  out.value /= static_cast<double>(parts.size());
  out.se = std::sqrt(var) / static_cast<double>(parts.size());
  return out;
}

}  // namespace dacq
