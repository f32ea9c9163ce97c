#pragma once

// Counterexample configurations around the origin, estimates of the
// connection event that drives the spin gap at the origin, and direct Gibbs
// estimates of that gap.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include "dacq/clusters.hpp"
#include "dacq/constants.hpp"
#include "dacq/dac_sampler.hpp"
#include "dacq/exact.hpp"
#include "dacq/graph.hpp"
#include "dacq/parallel.hpp"
#include "dacq/params.hpp"
#include "dacq/rc_sampler.hpp"
#include "dacq/rng.hpp"
#include "dacq/stats.hpp"

namespace dacq {

struct CounterexampleFamily {
  int d = 0;
  int k = 0;
  int ell = 0;
  int m = 0;
  int origin = -1;
  SpinConfig sigma_star;   // on the box, origin undefined
  SpinConfig sigma_k_ell;
  SpinConfig sigma_k_m;
  VertexSet u;             // u[0] = +x1 neighbor, u[1] = -x1 neighbor, then the rest
  EdgeSet e;               // e[i] joins the origin and u[i]
  EdgeSet E_dk;            // edges at the origin or at an m-vertex of sigma_k_ell
};

namespace detail {

inline bool star_is_m(const Coord& x) {
  int rest = 0;
  for (std::size_t i = 1; i < x.size(); ++i) rest += std::abs(x[i]);
  return (x[0] == 0 && rest == 1) || (x[0] == -1 && rest > 1);
}

}  // namespace detail

/// Configurations for arbitrary colors ell != m on a box built by build_box.
inline CounterexampleFamily counterexample_configs(const FiniteGraph& g, int k, int ell, int m) {
  const auto n = g.box_radius();
  if (!n) throw std::invalid_argument("counterexample: graph must come from build_box");
  const int d = g.dimension();
  if (d < 2) throw std::invalid_argument("counterexample: d must be >= 2");
  if (k < 1) throw std::invalid_argument("counterexample: k must be >= 1");
  if (k > *n) throw std::invalid_argument("counterexample: box radius must be >= k");
  if (ell == m) throw std::invalid_argument("counterexample: colors must differ");
  CounterexampleFamily f;
  f.d = d;
  f.k = k;
  f.ell = ell;
  f.m = m;
  f.origin = origin_vertex(g);
  const auto nv = static_cast<std::size_t>(g.num_vertices());
  f.sigma_star = SpinConfig(nv);
  f.sigma_k_ell = SpinConfig(nv);
  f.sigma_k_m = SpinConfig(nv);
  for (int v = 0; v < g.num_vertices(); ++v) {
    if (v == f.origin) continue;
    const Coord& x = g.coords(v);
    const int star = detail::star_is_m(x) ? m : ell;
    const int r = sup_norm(x);
    f.sigma_star.set(v, star);
    f.sigma_k_ell.set(v, r <= k ? star : ell);
    f.sigma_k_m.set(v, r == k + 1 ? m : f.sigma_k_ell[v]);
  }
  Coord c(static_cast<std::size_t>(d), 0);
  std::vector<Coord> order;
  for (int axis = 0; axis < d; ++axis)
    for (int sgn : {1, -1}) {
      Coord x = c;
      x[axis] = sgn;
      order.push_back(x);
    }
  for (const auto& x : order) {
    const int v = g.vertex(x);
    f.u.push_back(v);
    f.e.push_back(*g.find_edge(f.origin, v));
  }
  std::vector<std::uint8_t> pick(static_cast<std::size_t>(g.num_edges()), 0);
  for (int ed = 0; ed < g.num_edges(); ++ed) {
    const auto [a, b] = g.edge(ed);
    auto marked = [&](int v) { return v == f.origin || f.sigma_k_ell[v] == m; };
    if (marked(a) || marked(b)) pick[ed] = 1;
  }
  f.E_dk = detail::from_mask(pick);
  return f;
}

/// Second color: the smallest index different from ell.
inline int second_color(int ell) { return ell == 1 ? 2 : 1; }

/// (ell, m) for the probe; (1, 2) in the Potts case.
inline std::pair<int, int> probe_colors(const ModelParams& params) {
  const int ell = params.ell().value_or(1);
  return {ell, second_color(ell)};
}

inline CounterexampleFamily build_counterexample(const FiniteGraph& g, int k, const ModelParams& params) {
  params.validate();
  const auto ell = params.ell();
  if (!ell) throw std::domain_error("build_counterexample: every color is in S_{1/q} (Potts case)");
  return counterexample_configs(g, k, *ell, second_color(*ell));
}

inline CounterexampleFamily build_counterexample(int d, int k, const ModelParams& params, int n) {
  return build_counterexample(build_box(d, n), k, params);
}

/// Event A: u1 and u2 joined by open edges other than e1..e_{2d}.
template <class Open>
bool connection_event(const FiniteGraph& g, const CounterexampleFamily& f, ConnectivityProbe& probe, Open&& open) {
  auto at_origin = [&](int ed) { return g.edge(ed).u == f.origin || g.edge(ed).v == f.origin; };
  return probe.connected(f.u[0], f.u[1], [&](int ed) { return !at_origin(ed) && open(ed); });
}

inline double lower_density(const ModelParams& params) {
  const double qa = params.q * params.a_of(probe_colors(params).first);
  return qa >= 1.0 ? isolated_open_probability(params.p, qa) : params.p;
}

/// Bernoulli(p~) bonds on G_n with E_dk closed; frequency of A.
inline Estimate estimate_connection_lower(const ModelParams& params, int d, int k, int n, std::uint64_t seed,
                                          std::uint64_t replicas, unsigned threads = 1) {
  if (n <= k + 1) throw std::invalid_argument("estimate_connection_lower: need n > k + 1");
  if (replicas == 0) throw std::invalid_argument("estimate_connection_lower: replicas must be positive");
  params.validate();
  auto g = build_box(d, n);
  const auto [ell, m] = probe_colors(params);
  auto f = counterexample_configs(g, k, ell, m);
  const double pt = lower_density(params);
  auto closed = detail::to_mask(g.num_edges(), f.E_dk);
  CounterRng rng(seed);
  auto hits = parallel_map(static_cast<std::size_t>(replicas), threads, [&](std::size_t r) {
    ConnectivityProbe probe(g);
    const bool hit = connection_event(g, f, probe, [&](int ed) {
      return !closed[ed] && rng.uniform(Stream::kBernoulli, r, static_cast<std::uint32_t>(ed)) < pt;
    });
    return hit ? 1.0 : 0.0;
  });
  return replica_estimate(hits);
}

struct RcBudget {
  std::uint64_t burn_in = 200;
  std::uint64_t chains = 8;
  unsigned threads = 1;
};

/// Free random-cluster chains at (p, q a_ell) with E_dk closed; frequency of A.
inline Estimate estimate_connection_rc(const FiniteGraph& g, const CounterexampleFamily& f, const ModelParams& params,
                                       std::uint64_t seed, std::uint64_t replicas, const RcBudget& budget = {}) {
  if (replicas == 0) throw std::invalid_argument("estimate_connection_rc: replicas must be positive");
  const double qa = params.q * params.a_of(f.ell);
  if (!(qa > 1.0)) throw std::domain_error("estimate_connection_rc: requires a_ell > 1/q");
  const std::uint64_t chains = std::max<std::uint64_t>(1, std::min(budget.chains, replicas));
  const std::uint64_t per_chain = (replicas + chains - 1) / chains;
  auto parts = parallel_map(static_cast<std::size_t>(chains), budget.threads, [&](std::size_t c) {
    RcChain chain(g, params.p, qa, derive_seed(seed, static_cast<std::uint64_t>(Stream::kSampling), c),
                  BoundaryMode::kFree, EdgeConstraint{{}, f.E_dk});
    ConnectivityProbe probe(g);
    std::vector<double> hits;
    run_chain_visit(chain, ChainOptions{budget.burn_in, per_chain, 1, false}, [&](const BondConfig& eta, std::uint64_t) {
      hits.push_back(connection_event(g, f, probe, [&](int ed) { return eta.open(ed); }) ? 1.0 : 0.0);
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

inline Estimate estimate_connection_rc(const ModelParams& params, int d, int k, int n, std::uint64_t seed,
                                       std::uint64_t replicas, const RcBudget& budget = {}) {
  if (n <= k + 1) throw std::invalid_argument("estimate_connection_rc: need n > k + 1");
  auto g = build_box(d, n);
  return estimate_connection_rc(g, build_counterexample(g, k, params), params, seed, replicas, budget);
}

struct GibbsOptions {
  std::uint64_t burn_in = 100;
  std::uint64_t sweeps = 2000;
  std::uint64_t chains = 4;
  unsigned threads = 1;
};

/// Rao-Blackwellized estimates of P(xi(v) = c | sigma off v), one per color,
/// pooled over independent chains.
inline std::vector<Estimate> gibbs_spin_marginals(const FiniteGraph& g, const ModelParams& params,
                                                  const SpinConfig& sigma, int v, std::uint64_t seed,
                                                  const GibbsOptions& opt) {
  if (opt.sweeps == 0 || opt.chains == 0) throw std::invalid_argument("gibbs_spin_marginals: empty budget");
  const int s = params.s();
  auto parts = parallel_map(static_cast<std::size_t>(opt.chains), opt.threads, [&](std::size_t c) {
    ConditionalSpinGibbs gibbs(g, params, sigma, VertexSet{v},
                               derive_seed(seed, static_cast<std::uint64_t>(Stream::kSpin), c));
    for (std::uint64_t i = 0; i < opt.burn_in; ++i) gibbs.step();
    std::vector<std::vector<double>> series(static_cast<std::size_t>(s));
    for (std::uint64_t i = 0; i < opt.sweeps; ++i) {
      gibbs.step();
      for (int col = 1; col <= s; ++col) series[col - 1].push_back(gibbs.rb_probability(v, col));
    }
    std::vector<Estimate> est;
    for (const auto& x : series) est.push_back(chain_estimate(x));
    return est;
  });
  // SE: the larger of the pooled within-chain SE and the between-chain SE.
  std::vector<Estimate> out(static_cast<std::size_t>(s));
  for (int col = 0; col < s; ++col) {
    double var = 0.0;
    std::vector<double> means;
    for (const auto& part : parts) {
      means.push_back(part[col].value);
      var += part[col].se * part[col].se;
      out[col].n += part[col].n;
    }
    out[col].value = mean_of(means);
    out[col].se = std::max(std::sqrt(var) / static_cast<double>(parts.size()), iid_standard_error(means));
  }
  return out;
}

struct GapEstimates {
  Estimate p_ell_L, p_ell_M, p_m_L, p_m_M;
  Estimate gap_ell;  // P(ell | L) - P(ell | M)
  Estimate gap_m;    // P(m | L) - P(m | M)
  Estimate lhs;      // 2 |gap_ell| + |gap_m|, SE added linearly
};

/// Spin law at the origin under sigma_k_ell (L) and sigma_k_m (M). In the
/// Potts case the colors default to (1, 2).
inline GapEstimates direct_gap_gibbs(const ModelParams& params, int d, int k, int n, std::uint64_t seed,
                                     const GibbsOptions& opt) {
  params.validate();
  if (n < k + 2) throw std::invalid_argument("direct_gap_gibbs: need n >= k + 2");
  auto g = build_box(d, n);
  const auto [ell, m] = probe_colors(params);
  auto f = counterexample_configs(g, k, ell, m);
  auto L = gibbs_spin_marginals(g, params, f.sigma_k_ell, f.origin, derive_seed(seed, 0x4c, 0), opt);
  auto M = gibbs_spin_marginals(g, params, f.sigma_k_m, f.origin, derive_seed(seed, 0x4d, 0), opt);
  GapEstimates out;
  out.p_ell_L = L[f.ell - 1];
  out.p_ell_M = M[f.ell - 1];
  out.p_m_L = L[f.m - 1];
  out.p_m_M = M[f.m - 1];
  out.gap_ell = difference(out.p_ell_L, out.p_ell_M);
  out.gap_m = difference(out.p_m_L, out.p_m_M);
  out.lhs = {2.0 * std::abs(out.gap_ell.value) + std::abs(out.gap_m.value), 2.0 * out.gap_ell.se + out.gap_m.se,
             std::min(out.gap_ell.n, out.gap_m.n)};
  return out;
}

struct GapReport {
  int k = 0;
  Estimate pA_lower;
  std::optional<Estimate> pA_rc;
  double c1 = 0.0;
  double c2 = 0.0;
  double delta = 0.0;
  Estimate bound;
  std::optional<GapEstimates> direct;

  /// Direct left side not below the bound by more than 3 combined SE.
  std::optional<bool> direct_consistent() const {
    if (!direct) return std::nullopt;
    return direct->lhs.value >= bound.value - 3.0 * std::hypot(direct->lhs.se, bound.se);
  }
};

struct GapInputs {
  ModelParams params;
  int d = 2;
  int k = 1;
  Estimate pA_lower;
  std::optional<Estimate> pA_rc;
  std::optional<GapEstimates> direct;
};

/// bound = delta |c1/(c1+1) - c2/(c2+1)| P(A), delta = 2 epsilon; P(A) from
/// the random-cluster regime when available. Zero in the Potts case.
inline GapReport assemble_gap_bound(const GapInputs& in) {
  in.params.validate();
  const auto [ell, m] = probe_colors(in.params);
  GapReport r;
  r.k = in.k;
  r.pA_lower = in.pA_lower;
  r.pA_rc = in.pA_rc;
  r.direct = in.direct;
  const auto c = ratio_constants(in.params, in.d, ell, m);
  r.c1 = c.c1;
  r.c2 = c.c2;
  r.delta = 2.0 * nonnull_epsilon(in.params, in.d);
  const double factor = r.delta * std::abs(c.c1 / (c.c1 + 1.0) - c.c2 / (c.c2 + 1.0));
  const Estimate& pa = in.pA_rc ? *in.pA_rc : in.pA_lower;
  r.bound = {factor * pa.value, factor * pa.se, pa.n};
  return r;
}

struct ExactGapChain {
  double p_ell_L = 0.0, p_ell_M = 0.0, p_m_L = 0.0, p_m_M = 0.0;
  double p_O_L = 0.0, p_O_M = 0.0;
  double p_A = 0.0;            // P(A | O, L)
  double p_ell_OLA = 0.0;      // P(ell | O, L, A)
  double p_ell_OLAc = 0.0;     // P(ell | O, L, not A)
  double p_ell_OM = 0.0;       // P(ell | O, M)
  double c1 = 0.0, c2 = 0.0, delta = 0.0;
  double lhs = 0.0, rhs = 0.0;
};

/// Six-vertex fixture: a center with four neighbors u1..u4 plus a vertex w
/// adjacent to u1 and u2. u1, u2 carry ell, u3, u4 carry m; w carries ell
/// under L and m under M.
inline FiniteGraph gap_fixture_graph() {
  return FiniteGraph({{0, 0}, {1, 0}, {-1, 0}, {0, 1}, {0, -1}, {2, 2}},
                     {{0, 1}, {0, 2}, {0, 3}, {0, 4}, {1, 5}, {2, 5}});
}

/// Exact evaluation of both sides of the gap inequality on the fixture.
inline ExactGapChain exact_gap_chain(const ModelParams& params) {
  params.validate();
  const auto ell_opt = params.ell();
  if (!ell_opt) throw std::domain_error("exact_gap_chain: Potts case has no ell");
  const int ell = *ell_opt, m = second_color(ell);
  auto g = gap_fixture_graph();
  const int center = 0, w = 5;
  auto dist = dac_exact(g, params);
  auto table = dist.spin_marginal_table();
  SpinConfig L(6), M(6);
  for (int v : {1, 2}) L.set(v, ell);
  for (int v : {3, 4}) L.set(v, m);
  M = L;
  L.set(w, ell);
  M.set(w, m);
  auto law_L = conditional_spin_law(dist, table, center, L);
  auto law_M = conditional_spin_law(dist, table, center, M);
  ExactGapChain r;
  r.p_ell_L = law_L[ell - 1];
  r.p_ell_M = law_M[ell - 1];
  r.p_m_L = law_L[m - 1];
  r.p_m_M = law_M[m - 1];
  r.p_O_L = r.p_ell_L + r.p_m_L;
  r.p_O_M = r.p_ell_M + r.p_m_M;

  const int e1w = *g.find_edge(1, w), e2w = *g.find_edge(2, w);
  auto matches = [&](const DacState& st, const SpinConfig& sigma) {
    for (int v = 1; v < 6; ++v)
      if (dist.spin_at(st.spins, v) != sigma[v]) return false;
    return true;
  };
  auto has_a = [&](const DacState& st) { return ((st.bonds >> e1w) & 1u) && ((st.bonds >> e2w) & 1u); };
  double ola = 0.0, olac = 0.0, ola_ell = 0.0, olac_ell = 0.0, om = 0.0, om_ell = 0.0;
  for (std::size_t i = 0; i < dist.size(); ++i) {
    const auto& st = dist.support[i];
    const int c0 = dist.spin_at(st.spins, center);
    if (c0 != ell && c0 != m) continue;
    const double pr = dist.probability(i);
    if (matches(st, L)) {
      if (has_a(st)) {
        ola += pr;
        if (c0 == ell) ola_ell += pr;
      } else {
        olac += pr;
        if (c0 == ell) olac_ell += pr;
      }
    } else if (matches(st, M)) {
      om += pr;
      if (c0 == ell) om_ell += pr;
    }
  }
  r.p_A = ola / (ola + olac);
  r.p_ell_OLA = ola_ell / ola;
  r.p_ell_OLAc = olac_ell / olac;
  r.p_ell_OM = om_ell / om;
  const auto c = ratio_constants(params, 2, ell, m);
  r.c1 = c.c1;
  r.c2 = c.c2;
  r.delta = 2.0 * nonnull_epsilon(params, 2);
  r.lhs = 2.0 * std::abs(r.p_ell_L - r.p_ell_M) + std::abs(r.p_m_L - r.p_m_M);
  r.rhs = r.delta * std::abs(c.c1 / (c.c1 + 1.0) - c.c2 / (c.c2 + 1.0)) * r.p_A;
  return r;
}

struct BarrierSurvey {
  std::vector<std::uint64_t> radius_histogram;  // index = radius
  std::uint64_t failures = 0;
  std::uint64_t replicas = 0;
  Estimate failure_rate;
};

/// Containment radius of the spin barrier around W, or nothing on failure.
inline std::optional<int> barrier_radius(const FiniteGraph& g, const SpinConfig& sigma, const VertexSet& W) {
  auto b = find_closed_spin_barrier(g, sigma, W);
  if (!b) return std::nullopt;
  return b->radius(g);
}

struct SurveyOptions {
  std::uint64_t burn_in = 50;
  unsigned threads = 1;
};

/// Spins from free-boundary DaC samples on G_n; one barrier search each.
inline BarrierSurvey barrier_radius_survey(const ModelParams& params, int d, int n, const VertexSet& W,
                                           std::uint64_t seed, std::uint64_t replicas, const SurveyOptions& opt = {}) {
  if (replicas == 0) throw std::invalid_argument("barrier_radius_survey: replicas must be positive");
  auto g = build_box(d, n);
  for (int v : W) {
    if (v < 0 || v >= g.num_vertices()) throw std::invalid_argument("barrier_radius_survey: bad vertex");
    if (2 * sup_norm(g.coords(v)) > n) throw std::invalid_argument("barrier_radius_survey: W must lie in Lambda_{n/2}");
  }
  auto radii = parallel_map(static_cast<std::size_t>(replicas), opt.threads, [&](std::size_t r) {
    auto s = sample_dac(g, params, BoundaryMode::kFree, derive_seed(seed, static_cast<std::uint64_t>(Stream::kSampling), r),
                        opt.burn_in);
    return barrier_radius(g, s.xi, W).value_or(-1);
  });
  BarrierSurvey out;
  out.replicas = replicas;
  out.radius_histogram.assign(static_cast<std::size_t>(n) + 2, 0);
  std::vector<double> fail;
  for (int r : radii) {
    if (r < 0) {
      ++out.failures;
      fail.push_back(1.0);
    } else {
      ++out.radius_histogram[static_cast<std::size_t>(r)];
      fail.push_back(0.0);
    }
  }
  out.failure_rate = replica_estimate(fail);
  return out;
}

}  // namespace dacq
