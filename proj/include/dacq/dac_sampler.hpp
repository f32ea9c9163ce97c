#pragma once

// The divide-and-color layer on top of the bond sampler: cluster coloring,
// bond resampling given spins, the hat transform, barrier predicates and a
// Gibbs sampler for spins in a window given spins outside it.

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "dacq/clusters.hpp"
#include "dacq/graph.hpp"
#include "dacq/parallel.hpp"
#include "dacq/params.hpp"
#include "dacq/rc_sampler.hpp"
#include "dacq/rng.hpp"

namespace dacq {

struct DacSample {
  SpinConfig xi;
  BondConfig eta;
  BondConfig eta_hat;
};

inline int categorical_from_uniform(double u, std::span<const double> a) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    acc += a[i];
    if (u < acc) return static_cast<int>(i) + 1;
  }
  return static_cast<int>(a.size());
}

/// One categorical(a) draw per component, shared by all its members.
/// Component c reads the uniform at (kColor, step, c).
inline SpinConfig color_clusters(const ClusterLabeling& labels, std::span<const double> a, const CounterRng& rng,
                                 std::uint64_t step = 0) {
  SpinConfig xi(labels.component_id.size());
  std::vector<int> color(static_cast<std::size_t>(labels.component_count));
  for (int c = 0; c < labels.component_count; ++c)
    color[c] = categorical_from_uniform(rng.uniform(Stream::kColor, step, static_cast<std::uint32_t>(c)), a);
  for (std::size_t v = 0; v < labels.component_id.size(); ++v) xi.set(static_cast<int>(v), color[labels.component_id[v]]);
  return xi;
}

/// Throws if an open edge joins unequal spins.
inline void check_consistent(const FiniteGraph& g, const SpinConfig& xi, const BondConfig& eta) {
  for (int e = 0; e < g.num_edges(); ++e)
    if (eta.open(e) && xi[g.edge(e).u] != xi[g.edge(e).v])
      throw std::logic_error("DaC sample: open edge between unequal spins");
}

/// eta with every open edge inside an S_{1/q}-colored cluster closed.
inline BondConfig hat_transform(const FiniteGraph& g, const SpinConfig& xi, const BondConfig& eta,
                                const ModelParams& params) {
  BondConfig hat = eta;
  for (int e = 0; e < g.num_edges(); ++e) {
    if (!eta.open(e)) continue;
    const int cu = xi[g.edge(e).u], cv = xi[g.edge(e).v];
    if (cu == cv && params.in_inverse_q_set(cu)) hat.set(e, false);
  }
  return hat;
}

/// Every open barrier edge joins equal spins from S_{1/q}.
inline bool is_quasi_closed(const FiniteGraph& g, const SpinConfig& xi, const BondConfig& eta, const Barrier& b,
                            const ModelParams& params) {
  for (int e : b.edges) {
    if (!eta.open(e)) continue;
    const int cu = xi[g.edge(e).u], cv = xi[g.edge(e).v];
    if (cu != cv || !params.in_inverse_q_set(cu)) return false;
  }
  return true;
}

/// Grows W' = monochromatic spin components touching dW (outside W). If W u W'
/// avoids the graph boundary its edge boundary is a closed barrier for every
/// bond configuration consistent with sigma; otherwise returns nothing.
inline std::optional<Barrier> find_closed_spin_barrier(const FiniteGraph& g, const SpinConfig& sigma, const VertexSet& W) {
  auto in_w = detail::to_mask(g.num_vertices(), W);
  for (int w : W)
    if (g.is_boundary(w)) throw std::invalid_argument("find_closed_spin_barrier: W meets the graph boundary");
  auto dw = vertex_boundary(g, W);
  ConnectivityProbe probe(g);
  auto grown = probe.reach(dw, [&](int e) {
    const auto [u, v] = g.edge(e);
    return !in_w[u] && !in_w[v] && sigma[u] == sigma[v];
  });
  VertexSet region(W.begin(), W.end());
  region.insert(region.end(), grown.begin(), grown.end());
  std::sort(region.begin(), region.end());
  for (int v : region)
    if (g.is_boundary(v)) return std::nullopt;
  return is_barrier(g, edge_boundary(g, region));
}

/// Runs the bond chain and colors each recorded state; visit gets
/// (sample, sweep). Coloring of the k-th recorded state reads step k.
inline void run_dac_chain(const FiniteGraph& g, const ModelParams& params, BoundaryMode mode, std::uint64_t seed,
                          const ChainOptions& opt, const std::function<void(const DacSample&, std::uint64_t)>& visit) {
  params.validate();
  RcChain chain(g, params.p, params.q, seed, mode);
  CounterRng color_rng(derive_seed(seed, static_cast<std::uint64_t>(Stream::kColor), 0));
  std::uint64_t k = 0;
  run_chain_visit(chain, opt, [&](const BondConfig& eta, std::uint64_t sweep) {
    DacSample s;
    s.eta = eta;
    s.xi = color_clusters(label_clusters(g, eta), params.a, color_rng, k++);
    check_consistent(g, s.xi, s.eta);
    s.eta_hat = hat_transform(g, s.xi, s.eta, params);
    visit(s, sweep);
  });
}

/// One sample after `burn_in` sweeps.
inline DacSample sample_dac(const FiniteGraph& g, const ModelParams& params, BoundaryMode mode, std::uint64_t seed,
                            std::uint64_t burn_in) {
  DacSample out;
  ChainOptions opt{burn_in > 0 ? burn_in - 1 : 0, 1, 1, false};
  run_dac_chain(g, params, mode, seed, opt, [&](const DacSample& s, std::uint64_t) { out = s; });
  return out;
}

/// Bonds given total spins: edges between unequal spins closed, each maximal
/// monochromatic component of color i an independent heat-bath chain for the
/// random-cluster measure with parameters (p, q a_i), seeded by component id.
inline BondConfig conditional_bonds_given_spins(const FiniteGraph& g, const ModelParams& params, const SpinConfig& sigma,
                                                std::uint64_t seed, std::uint64_t sweeps = 50, unsigned threads = 1) {
  if (!sigma.total()) throw std::invalid_argument("conditional_bonds_given_spins: sigma must be total");
  auto mono = label_components(g, [&](int e) { return sigma[g.edge(e).u] == sigma[g.edge(e).v]; });
  auto states = parallel_map(static_cast<std::size_t>(mono.component_count), threads, [&](std::size_t c) {
    const auto& members = mono.members[c];
    std::vector<std::pair<int, std::uint8_t>> result;
    if (members.size() < 2) return result;
    auto sub = induced_subgraph(g, members);
    const double qc = params.q * params.a_of(sigma[members.front()]);
    RcChain chain(sub.graph, params.p, qc, derive_seed(seed, static_cast<std::uint64_t>(Stream::kBond), c));
    for (std::uint64_t i = 0; i < sweeps; ++i) chain.sweep();
    for (int e = 0; e < sub.graph.num_edges(); ++e) result.emplace_back(sub.parent_edge[e], chain.state().open(e));
    return result;
  });
  BondConfig eta(static_cast<std::size_t>(g.num_edges()));
  for (const auto& comp : states)
    for (auto [e, open] : comp) eta.set(e, open != 0);
  return eta;
}

/// Gibbs sampler for (spins on W, all bonds) given spins sigma off W.
/// One step is a heat-bath sweep over every edge given the spins, then a
/// cluster recoloring: clusters meeting a vertex off W take its spin, the
/// rest draw a fresh color from a.
class ConditionalSpinGibbs {
 public:
  ConditionalSpinGibbs(const FiniteGraph& g, const ModelParams& params, const SpinConfig& sigma, VertexSet W,
                       std::uint64_t seed, int initial_color = 0)
      : g_(&g),
        params_(params),
        W_(std::move(W)),
        in_w_(detail::to_mask(g.num_vertices(), W_)),
        xi_(sigma),
        eta_(static_cast<std::size_t>(g.num_edges())),
        rng_(seed),
        probe_(g) {
    params_.validate();
    for (int v = 0; v < g.num_vertices(); ++v)
      if (!in_w_[v] && !sigma.defined(v)) throw std::invalid_argument("ConditionalSpinGibbs: sigma must be total off W");
    for (int w : W_) xi_.set(w, initial_color > 0 ? initial_color : params_.ell().value_or(1));
    forced_.assign(static_cast<std::size_t>(g.num_vertices()), 0);
    refresh_forced();
  }

  void bond_sweep() {
    for (int e = 0; e < g_->num_edges(); ++e) {
      const auto [u, v] = g_->edge(e);
      if (xi_[u] != xi_[v]) {
        eta_.set(e, false);
        continue;
      }
      const double qc = params_.q * params_.a_of(xi_[u]);
      double prob;
      if (qc == 1.0 || params_.p <= 0.0 || params_.p >= 1.0) {
        prob = isolated_open_probability(params_.p, qc);
      } else {
        const bool linked = probe_.connected(u, v, [&](int f) { return f != e && eta_.open(f); });
        prob = heat_bath_open_probability(params_.p, qc, linked);
      }
      eta_.set(e, rng_.uniform(Stream::kBond, steps_, static_cast<std::uint32_t>(e)) < prob);
    }
    refresh_forced();
  }

  void spin_update() {
    for (std::size_t i = 0; i < W_.size(); ++i) {
      const int w = W_[i];
      if (forced_[w]) {
        xi_.set(w, forced_[w]);
        continue;
      }
      const int root = cluster_root_[w];
      if (root != w) {
        xi_.set(w, xi_[root]);
        continue;
      }
      xi_.set(w, categorical_from_uniform(rng_.uniform(Stream::kSpin, steps_, static_cast<std::uint32_t>(i)), params_.a));
    }
  }

  void step() {
    bond_sweep();
    spin_update();
    ++steps_;
  }

  /// P(xi(w) = c | current bonds, sigma off W).
  double rb_probability(int w, int c) const {
    if (forced_[w]) return forced_[w] == c ? 1.0 : 0.0;
    return params_.a_of(c);
  }

  const SpinConfig& spins() const { return xi_; }
  const BondConfig& bonds() const { return eta_; }
  const VertexSet& window() const { return W_; }

 private:
  // For every W vertex: the spin forced by an off-W cluster member (0 if none)
  // and a representative W vertex of its cluster (the first in W order).
  void refresh_forced() {
    auto labels = label_clusters(*g_, eta_);
    std::vector<int> color(static_cast<std::size_t>(labels.component_count), 0);
    std::vector<int> rep(static_cast<std::size_t>(labels.component_count), -1);
    for (int w : W_) {
      const int c = labels.component_id[w];
      if (rep[c] < 0) {
        rep[c] = w;
        for (int v : labels.members[c])
          if (!in_w_[v]) {
            color[c] = xi_[v];
            break;
          }
      }
    }
    cluster_root_.assign(static_cast<std::size_t>(g_->num_vertices()), -1);
    for (int w : W_) {
      forced_[w] = color[labels.component_id[w]];
      cluster_root_[w] = rep[labels.component_id[w]];
    }
  }

  const FiniteGraph* g_;
  ModelParams params_;
  VertexSet W_;
  std::vector<std::uint8_t> in_w_;
  SpinConfig xi_;
  BondConfig eta_;
  CounterRng rng_;
  ConnectivityProbe probe_;
  std::vector<int> forced_;
  std::vector<int> cluster_root_;
  std::uint64_t steps_ = 0;
};

}  // namespace dacq
