#pragma once

// The exact-enumeration battery behind `dacq verify`. Each check reports the
// worst deviation it saw against a pinned tolerance.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "dacq/clusters.hpp"
#include "dacq/constants.hpp"
#include "dacq/exact.hpp"
#include "dacq/graph.hpp"
#include "dacq/params.hpp"
#include "dacq/rng.hpp"
#include "json.hpp"

namespace dacq {

struct CheckResult {
  std::string name;
  double deviation = 0.0;
  double tolerance = 0.0;
  std::uint64_t cases = 0;
  bool passed = true;
  std::string detail;
};

struct VerifyOptions {
  std::uint64_t seed = 1;
  std::uint64_t trichotomy_draws = 10000;
  std::string fault_injection;  // "" or "ratio_c1"
  std::vector<FiniteGraph> corpus;  // empty: builtin_corpus()
};

struct VerifyReport {
  std::vector<CheckResult> checks;
  bool passed() const {
    return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.passed; });
  }
};

/// Small graphs with at most 9 edges.
inline std::vector<FiniteGraph> builtin_corpus() {
  std::vector<FiniteGraph> out;
  out.push_back(FiniteGraph({{0}, {1}}, {{0, 1}}));
  out.push_back(FiniteGraph({{0}, {1}, {2}}, {{0, 1}, {1, 2}}));
  out.push_back(FiniteGraph({{0, 0}, {1, 0}, {0, 1}}, {{0, 1}, {1, 2}, {0, 2}}));
  out.push_back(build_grid({2, 2}));
  out.push_back(FiniteGraph({{0, 0}, {1, 0}, {0, 1}, {1, 1}}, {{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}}));
  out.push_back(FiniteGraph({{0, 0}, {1, 0}, {-1, 0}, {0, 1}, {0, -1}}, {{0, 1}, {0, 2}, {0, 3}, {0, 4}}));
  out.push_back(FiniteGraph({{0, 0}, {1, 1}, {1, -1}, {2, 0}, {3, 1}, {3, -1}},
                            {{0, 1}, {0, 2}, {1, 2}, {1, 3}, {2, 3}, {3, 4}, {3, 5}}));
  out.push_back(build_grid({2, 3}));
  return out;
}

namespace detail {

inline CheckResult finish(CheckResult c) {
  c.passed = c.deviation <= c.tolerance;
  return c;
}

inline bool joined_off(const FiniteGraph& g, const BondConfig& eta, int a, int b, std::span<const int> excluded) {
  auto skip = to_mask(g.num_edges(), excluded);
  ConnectivityProbe probe(g);
  return probe.connected(a, b, [&](int e) { return !skip[e] && eta.open(e); });
}

}  // namespace detail

/// Enumerated single-edge conditionals against the two-case formula.
inline CheckResult check_edge_conditionals(const std::vector<FiniteGraph>& corpus) {
  CheckResult c{"fk_two_case", 0.0, 1e-12, 0, true, ""};
  for (const auto& g : corpus) {
    if (g.num_edges() > 9) continue;
    for (int pi = 1; pi <= 9; ++pi)
      for (double q : {1.0, 1.5, 2.0, 4.0}) {
        const double p = pi / 10.0;
        auto d = fk_exact(g, p, q);
        for (std::uint32_t m = 0; m < d.size(); ++m) {
          auto zeta = BondConfig::from_mask(m, static_cast<std::size_t>(g.num_edges()));
          for (int e = 0; e < g.num_edges(); ++e) {
            if (zeta.open(e)) continue;
            const auto [u, v] = g.edge(e);
            const int skip[1] = {e};
            const double formula = detail::joined_off(g, zeta, u, v, skip) ? p : p / (p + (1 - p) * q);
            c.deviation = std::max(c.deviation, std::abs(fk_conditional_edge(d, e, zeta) - formula));
            ++c.cases;
          }
        }
      }
  }
  return detail::finish(c);
}

/// Spins and bonds around the origin of G_1 with u1, u2 colored i and u3, u4
/// colored j; u1 and u2 joined around the top when `connected`.
inline bool ratio_context(const FiniteGraph& g, int i, int j, int s, bool connected, RngStream& rng, SpinConfig& sigma,
                          BondConfig& zeta) {
  const int v = g.vertex({0, 0});
  const int u1 = g.vertex({1, 0}), u2 = g.vertex({-1, 0}), u3 = g.vertex({0, 1}), u4 = g.vertex({0, -1});
  sigma = SpinConfig(static_cast<std::size_t>(g.num_vertices()));
  for (int w = 0; w < g.num_vertices(); ++w)
    if (w != v) sigma.set(w, 1 + static_cast<int>(rng.uniform() * s) % s);
  sigma.set(u1, i);
  sigma.set(u2, i);
  sigma.set(u3, j);
  sigma.set(u4, j);
  const std::vector<Coord> path{{1, 0}, {1, 1}, {1, 2}, {0, 2}, {-1, 2}, {-1, 1}, {-1, 0}};
  if (connected)
    for (const auto& c : path) sigma.set(g.vertex(c), i);
  zeta = BondConfig(static_cast<std::size_t>(g.num_edges()));
  for (int e = 0; e < g.num_edges(); ++e) {
    const auto [a, b] = g.edge(e);
    if (a == v || b == v) continue;
    if (sigma[a] == sigma[b] && rng.uniform() < 0.5) zeta.set(e, true);
  }
  if (connected)
    for (std::size_t k = 0; k + 1 < path.size(); ++k)
      zeta.set(*g.find_edge(g.vertex(path[k]), g.vertex(path[k + 1])), true);
  auto at_v = g.incident(v);
  return !detail::joined_off(g, zeta, u3, u4, at_v) && detail::joined_off(g, zeta, u1, u2, at_v) == connected;
}

/// Exact ratios on G_1 against the closed forms, the 7/9 instance, and the
/// sign trichotomy on random draws.
inline std::vector<CheckResult> check_ratio_constants(const VerifyOptions& opt) {
  const bool fault = opt.fault_injection == "ratio_c1";
  auto constants = [&](const ModelParams& params, int d, int i, int j) {
    auto c = ratio_constants(params, d, i, j);
    if (fault) c.c1 *= 1.01;
    return c;
  };
  CheckResult ratio{"ratio_closed_form", 0.0, 1e-10, 0, true, ""};
  auto g = build_box(2, 1);
  const int v = g.vertex({0, 0});
  RngStream rng(opt.seed, Stream::kSampling, 33);
  const std::vector<ModelParams> base{{0, 2.0, {0.2, 0.3, 0.5}}, {0, 1.0, {0.3, 0.7}}, {0, 3.0, {0.25, 0.4, 0.35}}};
  for (auto params : base)
    for (double p : {0.2, 0.5, 0.8}) {
      params.p = p;
      for (int i = 1; i <= params.s(); ++i)
        for (int j = 1; j <= params.s(); ++j) {
          if (i == j) continue;
          auto c = constants(params, 2, i, j);
          for (bool connected : {true, false})
            for (int t = 0; t < 3; ++t) {
              SpinConfig sigma;
              BondConfig zeta;
              if (!ratio_context(g, i, j, params.s(), connected, rng, sigma, zeta)) continue;
              auto r = ratio_check(g, v, sigma, zeta, params, i, j);
              const double expect = r.u1_u2_connected ? c.c1 : c.c2;
              ratio.deviation = std::max(ratio.deviation, std::abs(r.ratio - expect) / expect);
              ++ratio.cases;
            }
        }
    }
  CheckResult instance{"ratio_seven_ninths", 0.0, 1e-12, 1, true, ""};
  auto half = constants(ModelParams{0.5, 1.0, {0.5, 0.5}}, 2, 1, 2);
  instance.deviation = std::max(std::abs(half.c1 - 7.0 / 9.0), std::abs(half.c2 - 1.0));

  CheckResult sign{"ratio_trichotomy", 0.0, 0.0, 0, true, ""};
  RngStream draw(opt.seed, Stream::kSampling, 34);
  for (std::uint64_t t = 0; t < opt.trichotomy_draws; ++t) {
    const double p = 0.02 + 0.96 * draw.uniform();
    const double q = 0.2 + 5.0 * draw.uniform();
    const double ai = 0.02 + 0.9 * draw.uniform();
    const double aj = (1.0 - ai) * (0.05 + 0.9 * draw.uniform());
    const int d = 2 + static_cast<int>(draw.uniform() * 3);
    const double qa = q * ai;
    if (std::abs(qa - 1.0) < 1e-9) continue;
    auto c = constants(ModelParams{p, q, {ai, aj, 1.0 - ai - aj}}, d, 1, 2);
    const bool ok = qa > 1.0 ? c.c1 > c.c2 : c.c1 < c.c2;
    if (!ok) sign.deviation += 1.0;
    ++sign.cases;
  }
  sign.detail = "deviation counts sign mismatches";
  return {detail::finish(ratio), detail::finish(instance), detail::finish(sign)};
}

inline CheckResult check_edge_factorization(const std::vector<FiniteGraph>& corpus, std::uint64_t seed) {
  CheckResult c{"edge_factorization", 0.0, 1e-10, 0, true, ""};
  RngStream rng(seed, Stream::kSampling, 31);
  const ModelParams params{0.65, 1.8, {0.2, 0.3, 0.5}};
  for (const auto& g : corpus)
    for (int t = 0; t < 3; ++t) {
      SpinConfig sigma(static_cast<std::size_t>(g.num_vertices()));
      for (int v = 0; v < g.num_vertices(); ++v) sigma.set(v, rng.categorical(params.a));
      c.deviation = std::max(c.deviation, verify_edge_factorization(g, params, sigma));
      ++c.cases;
    }
  return detail::finish(c);
}

inline CheckResult check_barrier_factorization() {
  CheckResult c{"barrier_factorization", 0.0, 1e-10, 0, true, ""};
  auto g = build_grid({2, 2});
  VertexSet v1{g.vertex({0, 0}), g.vertex({0, 1})};
  auto cut = edge_boundary(g, v1);
  const ModelParams potts{0.45, 2.0, {0.5, 0.5}};
  auto add = [&](double dev) {
    c.deviation = std::max(c.deviation, dev);
    ++c.cases;
  };
  add(verify_barrier_factorization(g, v1, cut, SpinConfig(4), potts));
  SpinConfig one(4);
  one.set(g.edge(cut[0]).u, 2);
  one.set(g.edge(cut[0]).v, 2);
  add(verify_barrier_factorization(g, v1, EdgeSet{cut[1]}, one, potts));
  add(verify_barrier_factorization(g, v1, EdgeSet{}, SpinConfig(4, 1), potts));
  auto path = build_grid({1, 6});
  VertexSet left{0, 1, 2};
  auto mid = edge_boundary(path, left);
  SpinConfig s1(6);
  s1.set(path.edge(mid[0]).u, 1);
  s1.set(path.edge(mid[0]).v, 1);
  add(verify_barrier_factorization(path, left, EdgeSet{}, s1, ModelParams{0.6, 2.0, {0.5, 0.2, 0.3}}));
  return detail::finish(c);
}

/// Exact single-site floor minus epsilon must be >= 0; p = 0 gives equality.
inline std::vector<CheckResult> check_nonnull() {
  CheckResult floor{"nonnull_floor", 0.0, 0.0, 0, true, ""};
  auto g = build_grid({3, 3});
  const std::vector<ModelParams> cases{{0.5, 2.0, {0.5, 0.5}}, {0.3, 1.0, {0.3, 0.7}}, {0.8, 1.0, {0.3, 0.7}},
                                       {0.7, 3.0, {0.2, 0.8}}, {0.9, 4.0, {0.6, 0.4}}};
  for (const auto& params : cases) {
    const double gap = nonnull_floor(g, params).floor - nonnull_epsilon(params, 2);
    floor.deviation = std::max(floor.deviation, -gap);
    ++floor.cases;
  }
  floor.detail = "deviation is the largest shortfall of the exact floor below epsilon";
  CheckResult zero{"nonnull_p_zero", 0.0, 1e-14, 1, true, ""};
  const ModelParams p0{0.0, 2.0, {0.3, 0.7}};
  zero.deviation = std::max(std::abs(nonnull_floor(g, p0).floor - 0.3), std::abs(nonnull_epsilon(p0, 2) - 0.3));
  return {detail::finish(floor), detail::finish(zero)};
}

/// Worst FKG covariance over corpus graphs, free and with a closed cylinder.
inline CheckResult check_fkg(const std::vector<FiniteGraph>& corpus, std::uint64_t seed) {
  CheckResult c{"fkg", 0.0, 1e-12, 0, true, ""};
  for (const auto& g : corpus) {
    if (g.num_edges() > 10) continue;
    for (double q : {1.0, 2.0, 3.5})
      for (double p : {0.3, 0.7}) {
        auto r = fkg_check(g, p, q, EdgeConstraint{}, seed, 500);
        c.deviation = std::max(c.deviation, -r.worst);
        c.cases += r.pairs_tested;
      }
  }
  c.detail = "deviation is the most negative covariance";
  return detail::finish(c);
}

/// Potts conditionals ignore spins outside the 1-neighborhood.
inline CheckResult check_potts_markov(std::uint64_t seed) {
  CheckResult c{"potts_markov", 0.0, 1e-12, 0, true, ""};
  auto g = build_grid({3, 3});
  const ModelParams params{0.6, 2.0, {0.5, 0.5}};
  auto d = dac_exact(g, params);
  auto table = d.spin_marginal_table();
  RngStream rng(seed, Stream::kSampling, 42);
  for (int v = 0; v < g.num_vertices(); ++v) {
    auto nbrs = vertex_boundary(g, VertexSet{v});
    for (int t = 0; t < 10; ++t) {
      SpinConfig sigma(static_cast<std::size_t>(g.num_vertices()));
      for (int w = 0; w < g.num_vertices(); ++w) sigma.set(w, rng.categorical(params.a));
      auto base = conditional_spin_law(d, table, v, sigma);
      for (int w = 0; w < g.num_vertices(); ++w)
        if (w != v && !std::binary_search(nbrs.begin(), nbrs.end(), w)) sigma.set(w, rng.categorical(params.a));
      auto moved = conditional_spin_law(d, table, v, sigma);
      for (int col = 0; col < 2; ++col) c.deviation = std::max(c.deviation, std::abs(base[col] - moved[col]));
      ++c.cases;
    }
  }
  return detail::finish(c);
}

inline VerifyReport run_verify_battery(const VerifyOptions& opt) {
  const auto corpus = opt.corpus.empty() ? builtin_corpus() : opt.corpus;
  VerifyReport r;
  r.checks.push_back(check_edge_conditionals(corpus));
  for (auto& c : check_ratio_constants(opt)) r.checks.push_back(std::move(c));
  r.checks.push_back(check_edge_factorization(corpus, opt.seed));
  r.checks.push_back(check_barrier_factorization());
  for (auto& c : check_nonnull()) r.checks.push_back(std::move(c));
  r.checks.push_back(check_fkg(corpus, opt.seed));
  r.checks.push_back(check_potts_markov(opt.seed));
  return r;
}

inline nlohmann::json report_to_json(const VerifyReport& r) {
  nlohmann::json checks = nlohmann::json::array();
  for (const auto& c : r.checks)
    checks.push_back({{"name", c.name},
                      {"deviation", c.deviation},
                      {"tolerance", c.tolerance},
                      {"cases", c.cases},
                      {"passed", c.passed},
                      {"detail", c.detail}});
  return {{"passed", r.passed()}, {"checks", checks}};
}

}  // namespace dacq
