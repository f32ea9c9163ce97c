#pragma once

// Brute-force ground truth for random-cluster and DaC(q) measures on tiny
// graphs. Everything is computed in log space by full enumeration; hard size
// guards keep it off production paths.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "dacq/clusters.hpp"
#include "dacq/graph.hpp"
#include "dacq/params.hpp"
#include "dacq/rng.hpp"

namespace dacq {

struct SizeError : std::length_error {
  using std::length_error::length_error;
};

inline constexpr int kMaxFkEdges = 20;
inline constexpr int kMaxDacEdges = 16;
inline constexpr double kMaxDacStates = 1e7;
inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

namespace detail {

inline double lse2(double x, double y) {
  if (x == kNegInf) return y;
  if (y == kNegInf) return x;
  const double m = std::max(x, y);
  return m + std::log(std::exp(x - m) + std::exp(y - m));
}

inline double lse_range(std::span<const double> v) {
  if (v.empty()) return kNegInf;
  if (v.size() == 1) return v[0];
  const std::size_t half = v.size() / 2;
  return lse2(lse_range(v.subspan(0, half)), lse_range(v.subspan(half)));
}

/// k(eta) for a bond mask, via a small union-find.
inline int cluster_count(const FiniteGraph& g, std::uint64_t mask) {
  UnionFind uf(static_cast<std::size_t>(g.num_vertices()));
  int k = g.num_vertices();
  for (int e = 0; e < g.num_edges(); ++e)
    if ((mask >> e) & 1u)
      if (uf.unite(g.edge(e).u, g.edge(e).v)) --k;
  return k;
}

inline std::uint64_t ipow(std::uint64_t base, int exp) {
  std::uint64_t r = 1;
  for (int i = 0; i < exp; ++i) r *= base;
  return r;
}

}  // namespace detail

/// log of sum exp(x_i), reduced by a fixed pairwise tree so results do not
/// depend on how the terms were produced.
inline double log_sum_exp(std::span<const double> v) { return detail::lse_range(v); }

template <class State>
struct ExactDistribution {
  std::vector<State> support;
  std::vector<double> log_weights;
  double log_Z = kNegInf;

  std::size_t size() const { return support.size(); }
  double probability(std::size_t i) const {
    return log_weights[i] == kNegInf ? 0.0 : std::exp(log_weights[i] - log_Z);
  }
  template <class Pred>
  double probability_of(Pred&& pred) const {
    double total = 0.0;
    for (std::size_t i = 0; i < support.size(); ++i)
      if (pred(support[i])) total += probability(i);
    return total;
  }
  double total_mass() const {
    double t = 0.0;
    for (std::size_t i = 0; i < support.size(); ++i) t += probability(i);
    return t;
  }
  void normalize() { log_Z = log_sum_exp(log_weights); }
};

/// Random-cluster distribution; support[i] == i is the bond mask (bit e = edge e).
struct FkExact : ExactDistribution<std::uint32_t> {
  int num_edges = 0;
  double probability_of_mask(std::uint32_t mask) const { return probability(mask); }
  double edge_marginal(int e) const {
    return probability_of([e](std::uint32_t m) { return ((m >> e) & 1u) != 0; });
  }
  std::vector<double> probabilities() const {
    std::vector<double> out(size());
    for (std::size_t i = 0; i < size(); ++i) out[i] = probability(i);
    return out;
  }
};

/// log of q^{k(eta)} prod_e p^{eta(e)} (1-p)^{1-eta(e)}; p in {0,1} gives a
/// point mass (weight -inf off the forced configuration).
inline double fk_log_weight_k(int k, int open, int closed, double p, double q) {
  if (!(q > 0.0)) throw std::invalid_argument("fk_log_weight: q must be > 0");
  if (p <= 0.0) return open > 0 ? kNegInf : k * std::log(q);
  if (p >= 1.0) return closed > 0 ? kNegInf : k * std::log(q);
  return k * std::log(q) + open * std::log(p) + closed * std::log1p(-p);
}

inline double fk_log_weight(const FiniteGraph& g, const BondConfig& eta, double p, double q) {
  if (static_cast<int>(eta.size()) != g.num_edges())
    throw std::invalid_argument("fk_log_weight: configuration size mismatch");
  const int k = label_clusters(g, eta).component_count;
  const int open = static_cast<int>(eta.count_open());
  return fk_log_weight_k(k, open, g.num_edges() - open, p, q);
}

struct EdgeConstraint {
  EdgeSet forced_open;
  EdgeSet forced_closed;
};

/// Random-cluster measure on g, optionally conditioned on fixed edge states.
inline FkExact fk_exact(const FiniteGraph& g, double p, double q, const EdgeConstraint& constraint = {}) {
  if (!(q > 0.0)) throw std::invalid_argument("fk_exact: q must be > 0");
  const int m = g.num_edges();
  if (m > kMaxFkEdges)
    throw SizeError("fk_exact: " + std::to_string(m) + " edges exceeds the limit of " +
                    std::to_string(kMaxFkEdges));
  std::uint32_t must_open = 0, must_close = 0;
  for (int e : constraint.forced_open) must_open |= (1u << e);
  for (int e : constraint.forced_closed) must_close |= (1u << e);
  if (must_open & must_close) throw std::invalid_argument("fk_exact: edge both forced open and closed");
  FkExact d;
  d.num_edges = m;
  const std::uint32_t count = 1u << m;
  d.support.resize(count);
  d.log_weights.resize(count);
  for (std::uint32_t mask = 0; mask < count; ++mask) {
    d.support[mask] = mask;
    if ((mask & must_open) != must_open || (mask & must_close) != 0) {
      d.log_weights[mask] = kNegInf;
      continue;
    }
    const int open = std::popcount(mask);
    d.log_weights[mask] = fk_log_weight_k(detail::cluster_count(g, mask), open, m - open, p, q);
  }
  d.normalize();
  return d;
}

/// P(eta(e) = 1 | eta off e = zeta), read off the enumerated joint law.
inline double fk_conditional_edge(const FkExact& dist, int e, const BondConfig& zeta) {
  std::uint32_t base = static_cast<std::uint32_t>(zeta.mask()) & ~(1u << e);
  const double closed = dist.probability_of_mask(base);
  const double open = dist.probability_of_mask(base | (1u << e));
  if (open + closed <= 0.0) throw std::domain_error("fk_conditional_edge: conditioning event has probability 0");
  return open / (open + closed);
}

inline double fk_conditional_edge(const FiniteGraph& g, double p, double q, int e, const BondConfig& zeta) {
  return fk_conditional_edge(fk_exact(g, p, q), e, zeta);
}

/// log P(xi, eta) up to the global normalizer: FK weight times a_i per
/// cluster of color i; -inf when an open edge joins unequal spins.
inline double dac_joint_log_weight(const FiniteGraph& g, const SpinConfig& xi, const BondConfig& eta,
                                   const ModelParams& params) {
  if (!xi.total()) throw std::invalid_argument("dac_joint_log_weight: spin configuration must be total");
  for (int e = 0; e < g.num_edges(); ++e)
    if (eta.open(e) && xi[g.edge(e).u] != xi[g.edge(e).v]) return kNegInf;
  auto labels = label_clusters(g, eta);
  const int open = static_cast<int>(eta.count_open());
  double lw = fk_log_weight_k(labels.component_count, open, g.num_edges() - open, params.p, params.q);
  for (const auto& members : labels.members) lw += std::log(params.a_of(xi[members.front()]));
  return lw;
}

/// Joint configuration of the DaC model: spins packed base s (vertex 0 is the
/// least significant digit) and the bond mask.
struct DacState {
  std::uint64_t spins = 0;
  std::uint32_t bonds = 0;
};

struct DacExact : ExactDistribution<DacState> {
  int s = 0;
  int num_vertices = 0;
  int num_edges = 0;

  int spin_at(std::uint64_t code, int v) const {
    for (int i = 0; i < v; ++i) code /= static_cast<std::uint64_t>(s);
    return static_cast<int>(code % static_cast<std::uint64_t>(s)) + 1;
  }
  SpinConfig decode_spins(std::uint64_t code) const {
    SpinConfig xi(static_cast<std::size_t>(num_vertices));
    for (int v = 0; v < num_vertices; ++v) {
      xi.set(v, static_cast<int>(code % static_cast<std::uint64_t>(s)) + 1);
      code /= static_cast<std::uint64_t>(s);
    }
    return xi;
  }
  std::uint64_t encode_spins(const SpinConfig& xi) const {
    std::uint64_t code = 0;
    for (int v = num_vertices - 1; v >= 0; --v) code = code * static_cast<std::uint64_t>(s) + (xi[v] - 1);
    return code;
  }
  std::uint64_t spin_state_count() const { return detail::ipow(static_cast<std::uint64_t>(s), num_vertices); }

  /// mu(xi) for every spin code.
  std::vector<double> spin_marginal_table() const {
    std::vector<double> table(spin_state_count(), 0.0);
    for (std::size_t i = 0; i < size(); ++i) table[support[i].spins] += probability(i);
    return table;
  }

  std::vector<double> vertex_marginal(int v) const {
    std::vector<double> out(static_cast<std::size_t>(s), 0.0);
    for (std::size_t i = 0; i < size(); ++i) out[spin_at(support[i].spins, v) - 1] += probability(i);
    return out;
  }
};

inline void check_dac_size(const FiniteGraph& g, int s) {
  const double states = std::pow(static_cast<double>(s), g.num_vertices()) * std::ldexp(1.0, g.num_edges());
  if (g.num_edges() > kMaxDacEdges || states > kMaxDacStates)
    throw SizeError("dac_exact: s^|V| * 2^|E| = " + std::to_string(states) + " exceeds the enumeration limit");
}

/// Full joint law of (spins, bonds): each FK cluster colored i.i.d. with law a.
inline DacExact dac_exact(const FiniteGraph& g, const ModelParams& params) {
  params.validate();
  check_dac_size(g, params.s());
  DacExact d;
  d.s = params.s();
  d.num_vertices = g.num_vertices();
  d.num_edges = g.num_edges();
  std::vector<double> log_a(params.a.size());
  for (std::size_t i = 0; i < params.a.size(); ++i) log_a[i] = std::log(params.a[i]);
  const std::uint32_t masks = 1u << g.num_edges();
  for (std::uint32_t mask = 0; mask < masks; ++mask) {
    const int open = std::popcount(mask);
    BondConfig eta = BondConfig::from_mask(mask, static_cast<std::size_t>(g.num_edges()));
    auto labels = label_clusters(g, eta);
    const double fk = fk_log_weight_k(labels.component_count, open, g.num_edges() - open, params.p, params.q);
    if (fk == kNegInf) continue;
    const int k = labels.component_count;
    std::vector<int> colors(static_cast<std::size_t>(k), 0);  // 0-based colors per cluster
    while (true) {
      std::uint64_t code = 0;
      double lw = fk;
      for (int c = 0; c < k; ++c) lw += log_a[colors[c]];
      for (int v = g.num_vertices() - 1; v >= 0; --v)
        code = code * static_cast<std::uint64_t>(d.s) + static_cast<std::uint64_t>(colors[labels.component_id[v]]);
      d.support.push_back({code, mask});
      d.log_weights.push_back(lw);
      int c = 0;
      while (c < k && colors[c] == d.s - 1) colors[c++] = 0;
      if (c == k) break;
      ++colors[c];
    }
  }
  d.normalize();
  return d;
}

/// P(xi(v) = . | xi off v = sigma) from a table of spin probabilities.
inline std::vector<double> conditional_spin_law(const DacExact& d, const std::vector<double>& table, int v,
                                                const SpinConfig& sigma) {
  SpinConfig full = sigma;
  std::vector<double> out(static_cast<std::size_t>(d.s), 0.0);
  double total = 0.0;
  for (int c = 1; c <= d.s; ++c) {
    full.set(v, c);
    out[c - 1] = table[d.encode_spins(full)];
    total += out[c - 1];
  }
  if (total <= 0.0) throw std::domain_error("conditional_spin_law: conditioning event has probability 0");
  for (double& x : out) x /= total;
  return out;
}

/// 1{diff edges closed} prod_i Phi^{G^{sigma,i}}_{p, q a_i}(eta) for every bond mask.
inline std::vector<double> edge_factorization_law(const FiniteGraph& g, const ModelParams& params,
                                               const SpinConfig& sigma) {
  if (!sigma.total()) throw std::invalid_argument("edge_factorization_law: sigma must be total");
  if (g.num_edges() > kMaxFkEdges) throw SizeError("edge_factorization_law: too many edges");
  struct Factor {
    FkExact dist;
    std::vector<int> parent_edge;
  };
  std::vector<Factor> factors;
  std::uint32_t diff_mask = 0;
  for (int e = 0; e < g.num_edges(); ++e)
    if (sigma[g.edge(e).u] != sigma[g.edge(e).v]) diff_mask |= (1u << e);
  for (int color = 1; color <= params.s(); ++color) {
    VertexSet vs;
    for (int v = 0; v < g.num_vertices(); ++v)
      if (sigma[v] == color) vs.push_back(v);
    if (vs.empty()) continue;
    auto sub = induced_subgraph(g, vs);
    if (sub.graph.num_edges() == 0) continue;
    factors.push_back({fk_exact(sub.graph, params.p, params.q * params.a_of(color)), sub.parent_edge});
  }
  const std::uint32_t masks = 1u << g.num_edges();
  std::vector<double> law(masks, 0.0);
  for (std::uint32_t mask = 0; mask < masks; ++mask) {
    if (mask & diff_mask) continue;
    double product = 1.0;
    for (const auto& f : factors) {
      std::uint32_t local = 0;
      for (std::size_t i = 0; i < f.parent_edge.size(); ++i)
        if ((mask >> f.parent_edge[i]) & 1u) local |= (1u << i);
      product *= f.dist.probability_of_mask(local);
    }
    law[mask] = product;
  }
  return law;
}

/// Max |P(eta | xi = sigma) - 1{diff edges closed} prod_i Phi^{G^{sigma,i}}_{p, q a_i}(eta)|
/// over all bond configurations, the left side read off the joint weights.
inline double verify_edge_factorization(const FiniteGraph& g, const ModelParams& params, const SpinConfig& sigma) {
  params.validate();
  if (!sigma.total()) throw std::invalid_argument("verify_edge_factorization: sigma must be total");
  if (g.num_edges() > kMaxFkEdges) throw SizeError("verify_edge_factorization: too many edges");
  const std::uint32_t masks = 1u << g.num_edges();
  ExactDistribution<std::uint32_t> cond;
  for (std::uint32_t mask = 0; mask < masks; ++mask) {
    cond.support.push_back(mask);
    cond.log_weights.push_back(
        dac_joint_log_weight(g, sigma, BondConfig::from_mask(mask, static_cast<std::size_t>(g.num_edges())), params));
  }
  cond.normalize();
  auto product = edge_factorization_law(g, params, sigma);
  double worst = 0.0;
  for (std::uint32_t mask = 0; mask < masks; ++mask)
    worst = std::max(worst, std::abs(cond.probability(mask) - product[mask]));
  return worst;
}

/// Max deviation between P^G(. | C(B, sigma)) and the product of the two
/// conditioned half-measures times independent Bernoulli(p) on B \ B0.
/// V1 lists one side of the vertex partition; sigma is defined on W1 u W2.
inline double verify_barrier_factorization(const FiniteGraph& g, const VertexSet& V1, const EdgeSet& B0, const SpinConfig& sigma,
                             const ModelParams& params) {
  params.validate();
  check_dac_size(g, params.s());
  const int n = g.num_vertices();
  auto side1 = detail::to_mask(n, V1);
  VertexSet V2;
  for (int v = 0; v < n; ++v)
    if (!side1[v]) V2.push_back(v);
  if (V1.empty() || V2.empty()) throw std::invalid_argument("verify_barrier_factorization: both sides of the partition must be nonempty");
  auto in_b0 = detail::to_mask(g.num_edges(), B0);
  std::vector<std::uint8_t> in_w(static_cast<std::size_t>(n), 0);
  std::uint32_t b0_mask = 0;
  std::vector<int> free_cut;  // B \ B0
  for (int e = 0; e < g.num_edges(); ++e) {
    const auto [u, v] = g.edge(e);
    if (side1[u] == side1[v]) {
      if (in_b0[e]) throw std::invalid_argument("verify_barrier_factorization: B0 must be a subset of the cut");
      continue;
    }
    if (in_b0[e]) {
      b0_mask |= (1u << e);
    } else {
      free_cut.push_back(e);
      in_w[u] = in_w[v] = 1;
    }
  }
  for (int v = 0; v < n; ++v) {
    if (!in_w[v]) continue;
    if (!sigma.defined(v)) throw std::invalid_argument("verify_barrier_factorization: sigma must be defined on W1 u W2");
    if (!params.in_inverse_q_set(sigma[v]))
      throw std::invalid_argument("verify_barrier_factorization: sigma may only use colors from S_{1/q}");
  }
  for (int e : free_cut)
    if (sigma[g.edge(e).u] != sigma[g.edge(e).v])
      throw std::invalid_argument("verify_barrier_factorization: sigma must agree across every edge of B \\ B0");

  const int s = params.s();
  auto matches = [&](const SpinConfig& xi, const std::vector<int>& parent_vertex) {
    for (std::size_t i = 0; i < parent_vertex.size(); ++i)
      if (in_w[parent_vertex[i]] && xi[static_cast<int>(i)] != sigma[parent_vertex[i]]) return false;
    return true;
  };
  auto decode = [&](std::uint64_t code, int count) {
    SpinConfig xi(static_cast<std::size_t>(count));
    for (int v = 0; v < count; ++v) {
      xi.set(v, static_cast<int>(code % static_cast<std::uint64_t>(s)) + 1);
      code /= static_cast<std::uint64_t>(s);
    }
    return xi;
  };

  // Conditioned half-measure tables indexed by spin code * 2^|E_i| + mask.
  struct Half {
    InducedSubgraph sub;
    std::vector<double> prob;
  };
  auto half_table = [&](const VertexSet& vs) {
    Half h{induced_subgraph(g, vs), {}};
    const int nv = h.sub.graph.num_vertices(), ne = h.sub.graph.num_edges();
    const std::uint64_t codes = detail::ipow(static_cast<std::uint64_t>(s), nv);
    const std::uint32_t masks = 1u << ne;
    std::vector<double> lw(codes * masks, kNegInf);
    for (std::uint64_t code = 0; code < codes; ++code) {
      auto xi = decode(code, nv);
      if (!matches(xi, h.sub.parent_vertex)) continue;
      for (std::uint32_t mask = 0; mask < masks; ++mask)
        lw[code * masks + mask] =
            dac_joint_log_weight(h.sub.graph, xi, BondConfig::from_mask(mask, static_cast<std::size_t>(ne)), params);
    }
    const double z = log_sum_exp(lw);
    h.prob.resize(lw.size());
    for (std::size_t i = 0; i < lw.size(); ++i) h.prob[i] = lw[i] == kNegInf ? 0.0 : std::exp(lw[i] - z);
    return h;
  };
  Half h1 = half_table(V1), h2 = half_table(V2);

  const std::uint64_t codes = detail::ipow(static_cast<std::uint64_t>(s), n);
  const std::uint32_t masks = 1u << g.num_edges();
  std::vector<double> lhs(codes * masks, kNegInf);
  for (std::uint64_t code = 0; code < codes; ++code) {
    auto xi = decode(code, n);
    bool ok = true;
    for (int v = 0; v < n && ok; ++v)
      if (in_w[v] && xi[v] != sigma[v]) ok = false;
    if (!ok) continue;
    for (std::uint32_t mask = 0; mask < masks; ++mask) {
      if (mask & b0_mask) continue;
      lhs[code * masks + mask] =
          dac_joint_log_weight(g, xi, BondConfig::from_mask(mask, static_cast<std::size_t>(g.num_edges())), params);
    }
  }
  const double z = log_sum_exp(lhs);

  auto half_index = [&](const Half& h, const SpinConfig& xi, std::uint32_t mask) {
    std::uint64_t code = 0;
    for (int i = static_cast<int>(h.sub.parent_vertex.size()) - 1; i >= 0; --i)
      code = code * static_cast<std::uint64_t>(s) + static_cast<std::uint64_t>(xi[h.sub.parent_vertex[i]] - 1);
    std::uint32_t local = 0;
    for (std::size_t i = 0; i < h.sub.parent_edge.size(); ++i)
      if ((mask >> h.sub.parent_edge[i]) & 1u) local |= (1u << i);
    return code * (std::uint64_t{1} << h.sub.parent_edge.size()) + local;
  };

  double worst = 0.0;
  for (std::uint64_t code = 0; code < codes; ++code) {
    auto xi = decode(code, n);
    for (std::uint32_t mask = 0; mask < masks; ++mask) {
      const double left = lhs[code * masks + mask] == kNegInf ? 0.0 : std::exp(lhs[code * masks + mask] - z);
      double right = 0.0;
      if ((mask & b0_mask) == 0) {
        right = h1.prob[half_index(h1, xi, mask)] * h2.prob[half_index(h2, xi, mask)];
        for (int e : free_cut) right *= ((mask >> e) & 1u) ? params.p : 1.0 - params.p;
      }
      worst = std::max(worst, std::abs(left - right));
    }
  }
  return worst;
}

/// Increasing events on {0,1}^E as membership tables over bond masks.
using Event = std::vector<std::uint8_t>;

/// Every up-set of {0,1}^E for |E| <= 4 (Dedekind number many: 168 for |E| = 4).
inline std::vector<Event> monotone_events_exhaustive(int num_edges) {
  if (num_edges > 4) throw SizeError("monotone_events_exhaustive: at most 4 edges");
  const std::uint32_t states = 1u << num_edges;
  std::vector<Event> out;
  for (std::uint64_t subset = 0; subset < (std::uint64_t{1} << states); ++subset) {
    bool up = true;
    for (std::uint32_t m = 0; m < states && up; ++m) {
      if (!((subset >> m) & 1u)) continue;
      for (int e = 0; e < num_edges; ++e)
        if (!((subset >> (m | (1u << e))) & 1u)) {
          up = false;
          break;
        }
    }
    if (!up) continue;
    Event ev(states, 0);
    for (std::uint32_t m = 0; m < states; ++m) ev[m] = (subset >> m) & 1u;
    out.push_back(std::move(ev));
  }
  return out;
}

/// Up-closure of a set of generating configurations.
inline Event up_closure(int num_edges, std::span<const std::uint32_t> generators) {
  const std::uint32_t states = 1u << num_edges;
  Event ev(states, 0);
  for (std::uint32_t m = 0; m < states; ++m)
    for (std::uint32_t gmask : generators)
      if ((m & gmask) == gmask) {
        ev[m] = 1;
        break;
      }
  return ev;
}

inline double event_probability(std::span<const double> probs, const Event& ev) {
  double t = 0.0;
  for (std::size_t m = 0; m < probs.size(); ++m)
    if (ev[m]) t += probs[m];
  return t;
}

struct FkgResult {
  double worst = 0.0;  // min over tested pairs of P(A1 n A2 | B) - P(A1 | B) P(A2 | B)
  std::size_t pairs_tested = 0;
  bool exhaustive = false;
};

/// FKG check conditioned on the cylinder {eta_E = zeta}: exhaustive over all
/// increasing events for |E| <= 4, otherwise over `samples` seeded random
/// pairs of up-closures of small antichains (|E| <= 10).
inline FkgResult fkg_check(const FiniteGraph& g, double p, double q, const EdgeConstraint& cylinder,
                           std::uint64_t seed = 1, int samples = 4000) {
  if (q < 1.0) throw std::domain_error("fkg_check: the FKG inequality is only claimed for q >= 1");
  const int m = g.num_edges();
  if (m > 10) throw SizeError("fkg_check: at most 10 edges");
  auto dist = fk_exact(g, p, q, cylinder);
  auto probs = dist.probabilities();
  FkgResult r;
  auto test_pair = [&](const Event& a1, const Event& a2) {
    Event both(a1.size());
    for (std::size_t i = 0; i < a1.size(); ++i) both[i] = a1[i] & a2[i];
    const double cov = event_probability(probs, both) - event_probability(probs, a1) * event_probability(probs, a2);
    if (r.pairs_tested == 0 || cov < r.worst) r.worst = cov;
    ++r.pairs_tested;
  };
  if (m <= 4) {
    r.exhaustive = true;
    auto events = monotone_events_exhaustive(m);
    for (std::size_t i = 0; i < events.size(); ++i)
      for (std::size_t j = i; j < events.size(); ++j) test_pair(events[i], events[j]);
    return r;
  }
  RngStream rng(seed, Stream::kSampling);
  const std::uint32_t states = 1u << m;
  auto random_event = [&] {
    const int gens = 1 + static_cast<int>(rng.uniform() * 4);
    std::vector<std::uint32_t> generators;
    for (int i = 0; i < gens; ++i)
      generators.push_back(static_cast<std::uint32_t>(rng.uniform() * states) % states);
    return up_closure(m, generators);
  };
  for (int i = 0; i < samples; ++i) test_pair(random_event(), random_event());
  return r;
}

/// epsilon = (min_i a_i) (min{1-p, 1 - p/(p+(1-p) q min_i a_i)})^{2d}: a floor
/// for every single-site conditional spin probability.
inline double nonnull_epsilon(const ModelParams& params, int d) {
  const double amin = params.min_a();
  const double isolated = 1.0 - isolated_open_probability(params.p, params.q * amin);
  return amin * std::pow(std::min(1.0 - params.p, isolated), 2 * d);
}

struct NonnullFloor {
  double floor = 1.0;
  int vertex = -1;
  int color = 0;
};

/// Exact min over non-boundary v, colors m and spins sigma off v of
/// P(xi(v) = m | xi off v = sigma).
inline NonnullFloor nonnull_floor(const FiniteGraph& g, const ModelParams& params) {
  auto d = dac_exact(g, params);
  auto table = d.spin_marginal_table();
  NonnullFloor out;
  const std::uint64_t s = static_cast<std::uint64_t>(d.s);
  for (int v = 0; v < g.num_vertices(); ++v) {
    if (g.is_boundary(v)) continue;
    const std::uint64_t stride = detail::ipow(s, v);
    for (std::uint64_t code = 0; code < table.size(); ++code) {
      if ((code / stride) % s != 0) continue;
      double total = 0.0;
      for (std::uint64_t c = 0; c < s; ++c) total += table[code + c * stride];
      if (total <= 0.0) continue;
      for (std::uint64_t c = 0; c < s; ++c) {
        const double pr = table[code + c * stride] / total;
        if (pr < out.floor) out = {pr, v, static_cast<int>(c) + 1};
      }
    }
  }
  return out;
}

struct RatioCheck {
  double ratio = 0.0;             // P(xi(v)=i | .) / P(xi(v)=j | .)
  bool u1_u2_connected = false;   // the two i-neighbors are joined in zeta
};

/// Exact ratio P(xi(v)=i | sigma, zeta) / P(xi(v)=j | sigma, zeta) where sigma
/// fixes spins off v and zeta fixes bonds off the edges at v. Requires v to
/// have 2d neighbors, exactly two of them colored i and the rest colored j,
/// with no two j-neighbors connected in zeta.
inline RatioCheck ratio_check(const FiniteGraph& g, int v, const SpinConfig& sigma, const BondConfig& zeta,
                              const ModelParams& params, int i, int j) {
  params.validate();
  if (i == j) throw std::invalid_argument("ratio_check: colors must differ");
  const int d = g.dimension();
  if (g.degree(v) != 2 * d || g.is_boundary(v))
    throw std::invalid_argument("ratio_check: v must be an interior vertex with 2d neighbors");
  for (int w = 0; w < g.num_vertices(); ++w)
    if (w != v && !sigma.defined(w)) throw std::invalid_argument("ratio_check: sigma must be total off v");
  auto incident = g.incident(v);
  auto at_v = detail::to_mask(g.num_edges(), incident);
  std::vector<int> ui, uj;
  for (int e : incident) {
    const int w = g.other(e, v);
    if (sigma[w] == i) ui.push_back(w);
    else if (sigma[w] == j) uj.push_back(w);
    else throw std::invalid_argument("ratio_check: every neighbor must be colored i or j");
  }
  if (ui.size() != 2) throw std::invalid_argument("ratio_check: exactly two neighbors must be colored i");
  for (int e = 0; e < g.num_edges(); ++e)
    if (!at_v[e] && zeta.open(e) && sigma[g.edge(e).u] != sigma[g.edge(e).v])
      throw std::invalid_argument("ratio_check: zeta opens an edge between unequal spins");
  ConnectivityProbe probe(g);
  auto off_v = [&](int e) { return !at_v[e] && zeta.open(e); };
  for (std::size_t a = 0; a < uj.size(); ++a)
    for (std::size_t b = a + 1; b < uj.size(); ++b)
      if (probe.connected(uj[a], uj[b], off_v))
        throw std::invalid_argument("ratio_check: two j-colored neighbors are connected in zeta");

  auto log_mass = [&](int color) {
    SpinConfig xi = sigma;
    xi.set(v, color);
    BondConfig eta = zeta;
    std::vector<double> terms;
    const int deg = static_cast<int>(incident.size());
    for (std::uint32_t local = 0; local < (1u << deg); ++local) {
      for (int k = 0; k < deg; ++k) eta.set(incident[k], (local >> k) & 1u);
      terms.push_back(dac_joint_log_weight(g, xi, eta, params));
    }
    return log_sum_exp(terms);
  };
  RatioCheck out;
  out.ratio = std::exp(log_mass(i) - log_mass(j));
  out.u1_u2_connected = probe.connected(ui[0], ui[1], off_v);
  return out;
}

}  // namespace dacq
