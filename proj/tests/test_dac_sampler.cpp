#include <gtest/gtest.h>

#include <cmath>
#include <map>

#include "dacq/dac_sampler.hpp"
#include "dacq/exact.hpp"
#include "support.hpp"

using namespace dacq;

namespace {

ModelParams mixed_params() { return {0.5, 2.0, {0.5, 0.3, 0.2}}; }

struct Tally {
  std::vector<double> counts;
  double n = 0;
  void add(std::size_t i) {
    if (counts.size() <= i) counts.resize(i + 1, 0.0);
    counts[i] += 1;
    n += 1;
  }
  double freq(std::size_t i) const { return i < counts.size() ? counts[i] / n : 0.0; }
};

// Binomial 3 SE band plus a floor for near-zero cells.
void expect_frequency(double observed, double expected, double n, const std::string& what) {
  const double se = std::sqrt(std::max(expected * (1 - expected), 1e-12) / n);
  EXPECT_NEAR(observed, expected, 3.0 * se + 1e-9) << what;
}

}  // namespace

TEST(ColorClusters, IidWhenAllClosed) {
  auto g = build_box(2, 3);
  auto labels = label_clusters(g, BondConfig(static_cast<std::size_t>(g.num_edges()), false));
  ModelParams params = mixed_params();
  std::vector<double> count(3, 0.0);
  double total = 0;
  for (std::uint64_t step = 0; step < 400; ++step) {
    auto xi = color_clusters(labels, params.a, CounterRng(17), step);
    for (int v = 0; v < g.num_vertices(); ++v) count[xi[v] - 1] += 1;
    total += g.num_vertices();
  }
  for (int c = 0; c < 3; ++c) expect_frequency(count[c] / total, params.a[c], total, "color");
}

TEST(ColorClusters, SpanningClusterIsConstant) {
  auto g = build_box(2, 2);
  auto labels = label_clusters(g, BondConfig(static_cast<std::size_t>(g.num_edges()), true));
  ModelParams params = mixed_params();
  std::vector<double> count(3, 0.0);
  const int trials = 20000;
  for (int t = 0; t < trials; ++t) {
    auto xi = color_clusters(labels, params.a, CounterRng(5), static_cast<std::uint64_t>(t));
    for (int v = 1; v < g.num_vertices(); ++v) ASSERT_EQ(xi[v], xi[0]);
    count[xi[0] - 1] += 1;
  }
  for (int c = 0; c < 3; ++c) expect_frequency(count[c] / trials, params.a[c], trials, "spanning");
}

TEST(ColorClusters, Deterministic) {
  auto g = build_box(2, 2);
  auto eta = BondConfig::from_mask(0x5a5a5, static_cast<std::size_t>(g.num_edges()));
  auto labels = label_clusters(g, eta);
  ModelParams params = mixed_params();
  auto a = color_clusters(labels, params.a, CounterRng(9), 4);
  auto b = color_clusters(labels, params.a, CounterRng(9), 4);
  for (int v = 0; v < g.num_vertices(); ++v) EXPECT_EQ(a[v], b[v]);
}

TEST(HatTransform, Cases) {
  FiniteGraph path({{0}, {1}, {2}, {3}}, {{0, 1}, {1, 2}, {2, 3}});
  BondConfig eta(3, true);
  eta.set(1, false);
  SpinConfig xi(4);
  xi.set(0, 1);
  xi.set(1, 1);
  xi.set(2, 2);
  xi.set(3, 2);
  ModelParams none{0.5, 3.0, {0.6, 0.4}};
  EXPECT_EQ(hat_transform(path, xi, eta, none).mask(), eta.mask());
  ModelParams potts{0.5, 2.0, {0.5, 0.5}};
  EXPECT_EQ(hat_transform(path, xi, eta, potts).count_open(), 0u);
  ModelParams mixed{0.5, 2.0, {0.5, 0.3, 0.2}};
  auto hat = hat_transform(path, xi, eta, mixed);
  EXPECT_FALSE(hat.open(0));
  EXPECT_FALSE(hat.open(1));
  EXPECT_TRUE(hat.open(2));
}

TEST(IsQuasiClosed, Cases) {
  auto g = build_box(2, 2);
  const int o = origin_vertex(g);
  auto b = *is_barrier(g, edge_boundary(g, VertexSet{o}));
  ModelParams params = mixed_params();
  SpinConfig xi(static_cast<std::size_t>(g.num_vertices()));
  for (int v = 0; v < g.num_vertices(); ++v) xi.set(v, 2);
  BondConfig closed(static_cast<std::size_t>(g.num_edges()), false);
  EXPECT_TRUE(is_quasi_closed(g, xi, closed, b, params));
  BondConfig eta = closed;
  eta.set(b.edges[0], true);
  EXPECT_FALSE(is_quasi_closed(g, xi, eta, b, params));
  for (int v = 0; v < g.num_vertices(); ++v) xi.set(v, 1);
  EXPECT_TRUE(is_quasi_closed(g, xi, eta, b, params));
  xi.set(o, 3);
  EXPECT_FALSE(is_quasi_closed(g, xi, eta, b, params));
}

TEST(FindClosedSpinBarrier, AllDistinctAroundW) {
  auto g = build_box(2, 3);
  const int o = origin_vertex(g);
  SpinConfig sigma(static_cast<std::size_t>(g.num_vertices()));
  for (int v = 0; v < g.num_vertices(); ++v) {
    const auto& c = g.coords(v);
    sigma.set(v, 1 + ((c[0] + c[1] + 100) % 2));  // checkerboard
  }
  auto b = find_closed_spin_barrier(g, sigma, VertexSet{o});
  ASSERT_TRUE(b);
  auto region = k_neighborhood(g, VertexSet{o}, 1);
  region.push_back(o);
  std::sort(region.begin(), region.end());
  EXPECT_EQ(b->interior_vertices, region);
  EXPECT_EQ(b->edges, edge_boundary(g, region));
  // Every sample consistent with sigma has the barrier closed.
  for (int e : b->edges) EXPECT_NE(sigma[g.edge(e).u], sigma[g.edge(e).v]);
}

TEST(FindClosedSpinBarrier, ConstantSpinsReachBoundary) {
  auto g = build_box(2, 3);
  SpinConfig sigma(static_cast<std::size_t>(g.num_vertices()));
  for (int v = 0; v < g.num_vertices(); ++v) sigma.set(v, 1);
  EXPECT_FALSE(find_closed_spin_barrier(g, sigma, VertexSet{origin_vertex(g)}));
  EXPECT_THROW(find_closed_spin_barrier(g, sigma, VertexSet{g.boundary_vertices().front()}), std::invalid_argument);
}

TEST(FindClosedSpinBarrier, FrequentAtSmallP) {
  auto g = build_box(2, 8);
  ModelParams params{0.1, 1.0, {1.0 / 3, 1.0 / 3, 1.0 / 3}};
  int found = 0;
  const int trials = 400;
  std::vector<int> radii;
  for (int t = 0; t < trials; ++t) {
    auto s = sample_dac(g, params, BoundaryMode::kFree, static_cast<std::uint64_t>(t) + 1, 1);
    if (auto b = find_closed_spin_barrier(g, s.xi, VertexSet{origin_vertex(g)})) {
      ++found;
      radii.push_back(b->radius(g));
    }
  }
  EXPECT_GT(found, trials * 3 / 4);
  for (int r : radii) EXPECT_LE(r, 8);
}

TEST(SampleDac, InvariantsOnEverySample) {
  auto g = build_box(2, 3);
  for (const auto& params : {mixed_params(), ModelParams{0.6, 2.0, {0.5, 0.5}}, ModelParams{0.4, 1.5, {0.3, 0.7}}}) {
    run_dac_chain(g, params, BoundaryMode::kWired, 3, ChainOptions{5, 200, 1, false},
                  [&](const DacSample& s, std::uint64_t) {
                    for (int e = 0; e < g.num_edges(); ++e) {
                      const auto [u, v] = g.edge(e);
                      if (s.eta.open(e)) {
                        ASSERT_EQ(s.xi[u], s.xi[v]);
                      }
                      ASSERT_LE(s.eta_hat.open(e), s.eta.open(e));
                      const bool zeroed = !s.eta.open(e) || (s.xi[u] == s.xi[v] && params.in_inverse_q_set(s.xi[u]));
                      ASSERT_EQ(!s.eta_hat.open(e), zeroed);
                    }
                  });
  }
}

// s = q with uniform a: the edges between dW and its outer layer form a
// quasi-closed barrier on every sample.
TEST(SampleDac, PottsOuterLayerIsQuasiClosed) {
  auto g = build_box(2, 4);
  ModelParams params{0.7, 3.0, {1.0 / 3, 1.0 / 3, 1.0 / 3}};
  VertexSet W{origin_vertex(g)};
  auto dw = vertex_boundary(g, W);
  VertexSet inner = W;
  inner.insert(inner.end(), dw.begin(), dw.end());
  std::sort(inner.begin(), inner.end());
  auto b = *is_barrier(g, edge_boundary(g, inner));
  run_dac_chain(g, params, BoundaryMode::kFree, 4, ChainOptions{5, 300, 1, false},
                [&](const DacSample& s, std::uint64_t) { ASSERT_TRUE(is_quasi_closed(g, s.xi, s.eta, b, params)); });
}

TEST(SampleDac, IndependentBondsAtQOne) {
  auto g = build_box(2, 3);
  ModelParams params{0.3, 1.0, {0.4, 0.6}};
  std::vector<double> density;
  run_dac_chain(g, params, BoundaryMode::kFree, 6, ChainOptions{1, 20000, 1, false},
                [&](const DacSample& s, std::uint64_t) {
                  density.push_back(static_cast<double>(s.eta.count_open()) / g.num_edges());
                });
  auto est = chain_estimate(density);
  EXPECT_NEAR(est.value, 0.3, 3.0 * est.se);
}

TEST(SampleDac, IidSpinsAtPZero) {
  auto g = build_box(2, 2);
  ModelParams params{0.0, 2.0, {0.25, 0.75}};
  auto s = sample_dac(g, params, BoundaryMode::kFree, 3, 2);
  EXPECT_EQ(s.eta.count_open(), 0u);
  double ones = 0, total = 0;
  for (std::uint64_t seed = 1; seed <= 200; ++seed) {
    auto x = sample_dac(g, params, BoundaryMode::kFree, seed, 1);
    for (int v = 0; v < g.num_vertices(); ++v) ones += x.xi[v] == 1;
    total += g.num_vertices();
  }
  expect_frequency(ones / total, 0.25, total, "p=0");
}

TEST(SampleDac, SpinLawMatchesExactOnTwoByTwo) {
  auto g = build_grid({2, 2});
  ModelParams params{0.5, 2.0, {0.3, 0.7}};
  auto exact = dac_exact(g, params);
  auto table = exact.spin_marginal_table();
  std::vector<std::uint64_t> codes;
  run_dac_chain(g, params, BoundaryMode::kFree, 12, ChainOptions{100, 1000000, 1, false},
                [&](const DacSample& s, std::uint64_t) { codes.push_back(exact.encode_spins(s.xi)); });
  std::vector<double> series(codes.size());
  for (std::size_t code = 0; code < table.size(); ++code) {
    for (std::size_t i = 0; i < codes.size(); ++i) series[i] = codes[i] == code ? 1.0 : 0.0;
    auto est = chain_estimate(series);
    EXPECT_NEAR(est.value, table[code], 3.0 * est.se + 1e-9) << "code " << code;
  }
}

TEST(ConditionalBonds, AllDistinctGivesEmpty) {
  auto g = build_box(1, 3);
  ModelParams params{0.9, 2.0, {0.5, 0.5}};
  SpinConfig sigma(static_cast<std::size_t>(g.num_vertices()));
  for (int v = 0; v < g.num_vertices(); ++v) sigma.set(v, 1 + v % 2);
  EXPECT_EQ(conditional_bonds_given_spins(g, params, sigma, 1).count_open(), 0u);
  SpinConfig partial(static_cast<std::size_t>(g.num_vertices()));
  EXPECT_THROW(conditional_bonds_given_spins(g, params, partial, 1), std::invalid_argument);
}

TEST(ConditionalBonds, MonochromaticUsesModifiedQ) {
  auto g = build_grid({2, 2});
  ModelParams params{0.5, 2.0, {0.3, 0.7}};
  SpinConfig sigma(4);
  for (int v = 0; v < 4; ++v) sigma.set(v, 2);
  auto exact = fk_exact(g, 0.5, 2.0 * 0.7);
  std::vector<double> count(static_cast<std::size_t>(g.num_edges()), 0.0);
  const int trials = 20000;
  for (int t = 0; t < trials; ++t) {
    auto eta = conditional_bonds_given_spins(g, params, sigma, static_cast<std::uint64_t>(t), 10);
    for (int e = 0; e < g.num_edges(); ++e) count[e] += eta.open(e);
  }
  for (int e = 0; e < g.num_edges(); ++e)
    expect_frequency(count[e] / trials, exact.edge_marginal(e), trials, "edge " + std::to_string(e));
}

TEST(ConditionalBonds, LawMatchesProductOracle) {
  auto g = build_grid({3, 3});
  ModelParams params{0.6, 2.5, {0.2, 0.8}};
  SpinConfig sigma(9);
  for (int v = 0; v < 9; ++v) sigma.set(v, v == 4 ? 1 : 2);
  auto law = edge_factorization_law(g, params, sigma);
  Tally tally;
  const int trials = 60000;
  for (int t = 0; t < trials; ++t)
    tally.add(conditional_bonds_given_spins(g, params, sigma, static_cast<std::uint64_t>(t), 50).mask());
  double tv = 0.0;
  for (std::size_t m = 0; m < law.size(); ++m) {
    if (law[m] > 0.01) expect_frequency(tally.freq(m), law[m], trials, "mask " + std::to_string(m));
    tv += std::abs(tally.freq(m) - law[m]);
  }
  EXPECT_LT(tv / 2, 0.05);
}

TEST(ConditionalBonds, CheckerboardOnTwoByTwo) {
  auto g = build_grid({2, 2});
  ModelParams params{0.5, 2.0, {0.5, 0.5}};
  SpinConfig sigma(4);
  for (int v = 0; v < 4; ++v) {
    const auto& c = g.coords(v);
    sigma.set(v, 1 + (c[0] + c[1]) % 2);
  }
  auto law = edge_factorization_law(g, params, sigma);
  EXPECT_DOUBLE_EQ(law[0], 1.0);
  EXPECT_EQ(conditional_bonds_given_spins(g, params, sigma, 3).count_open(), 0u);
}

TEST(ConditionalBonds, DeterministicAcrossThreadCounts) {
  auto g = build_box(2, 4);
  ModelParams params = mixed_params();
  auto s = sample_dac(g, params, BoundaryMode::kFree, 21, 20);
  auto a = conditional_bonds_given_spins(g, params, s.xi, 5, 50, 1);
  auto b = conditional_bonds_given_spins(g, params, s.xi, 5, 50, 4);
  for (int e = 0; e < g.num_edges(); ++e) EXPECT_EQ(a.open(e), b.open(e));
  check_consistent(g, s.xi, a);
}

// Exact bonds-given-spins followed by cluster recoloring preserves the joint law.
TEST(ConditionalBonds, ResampleThenRecolorIsStationary) {
  std::vector<std::pair<FiniteGraph, ModelParams>> cases{
      {build_grid({2, 2}), {0.5, 2.0, {0.3, 0.7}}},
      {build_grid({2, 3}), {0.4, 3.0, {1.0 / 3, 0.5, 1.0 / 6}}},
      {FiniteGraph({{0, 0}, {1, 0}, {0, 1}}, {{0, 1}, {1, 2}, {0, 2}}), {0.7, 1.5, {0.25, 0.75}}}};
  for (const auto& [g, params] : cases) {
    auto exact = dac_exact(g, params);
    std::map<std::pair<std::uint64_t, std::uint32_t>, double> pi, next;
    for (std::size_t i = 0; i < exact.support.size(); ++i) {
      const double w = exact.probability(i);
      if (w > 0) pi[{exact.support[i].spins, exact.support[i].bonds}] += w;
    }
    std::map<std::uint64_t, std::vector<double>> law_cache;
    for (const auto& [state, w] : pi) {
      auto& law = law_cache[state.first];
      if (law.empty()) law = edge_factorization_law(g, params, exact.decode_spins(state.first));
      for (std::uint32_t m = 0; m < law.size(); ++m) {
        if (law[m] == 0.0) continue;
        auto labels = label_clusters(g, BondConfig::from_mask(m, static_cast<std::size_t>(g.num_edges())));
        const auto colorings = detail::ipow(static_cast<std::uint64_t>(params.s()), labels.component_count);
        for (std::uint64_t c = 0; c < colorings; ++c) {
          SpinConfig xi(static_cast<std::size_t>(g.num_vertices()));
          double pc = 1.0;
          std::uint64_t rest = c;
          for (int k = 0; k < labels.component_count; ++k) {
            const int color = static_cast<int>(rest % static_cast<std::uint64_t>(params.s())) + 1;
            rest /= static_cast<std::uint64_t>(params.s());
            pc *= params.a_of(color);
            for (int v : labels.members[k]) xi.set(v, color);
          }
          next[{exact.encode_spins(xi), m}] += w * law[m] * pc;
        }
      }
    }
    ASSERT_EQ(next.size(), pi.size());
    for (const auto& [state, w] : pi) EXPECT_NEAR(next[state], w, 1e-10);
  }
}

TEST(ConditionalSpinGibbs, MatchesExactConditionalOnThreeByThree) {
  auto g = build_grid({3, 3});
  ModelParams params{0.5, 2.0, {0.3, 0.7}};
  auto exact = dac_exact(g, params);
  auto table = exact.spin_marginal_table();
  const int center = *g.find_vertex({1, 1});
  SpinConfig sigma(9);
  for (int v = 0; v < 9; ++v) sigma.set(v, v % 3 == 0 ? 1 : 2);
  sigma.clear(center);
  auto truth = conditional_spin_law(exact, table, center, sigma);
  ConditionalSpinGibbs gibbs(g, params, sigma, VertexSet{center}, 42);
  std::vector<double> rb;
  for (int it = 0; it < 200; ++it) gibbs.step();
  for (int it = 0; it < 40000; ++it) {
    gibbs.step();
    rb.push_back(gibbs.rb_probability(center, 1));
    for (int v = 0; v < 9; ++v) {
      if (v != center) {
        ASSERT_EQ(gibbs.spins()[v], sigma[v]);
      }
    }
  }
  auto est = chain_estimate(rb);
  EXPECT_NEAR(est.value, truth[0], 3.0 * est.se + 1e-9);
}

TEST(ConditionalSpinGibbs, TwoVertexWindow) {
  auto g = build_grid({2, 3});
  ModelParams params{0.6, 3.0, {0.2, 0.3, 0.5}};
  auto exact = dac_exact(g, params);
  auto table = exact.spin_marginal_table();
  const int a = *g.find_vertex({0, 1}), b = *g.find_vertex({1, 1});
  SpinConfig sigma(6);
  for (int v = 0; v < 6; ++v) sigma.set(v, 1 + v % 3);
  sigma.clear(a);
  sigma.clear(b);
  // P(xi(a) = 3 | sigma off {a, b}) from the joint table.
  double num = 0, den = 0;
  for (int ca = 1; ca <= 3; ++ca)
    for (int cb = 1; cb <= 3; ++cb) {
      SpinConfig full = sigma;
      full.set(a, ca);
      full.set(b, cb);
      const double w = table[exact.encode_spins(full)];
      den += w;
      if (ca == 3) num += w;
    }
  ConditionalSpinGibbs gibbs(g, params, sigma, VertexSet{a, b}, 7);
  std::vector<double> rb;
  for (int it = 0; it < 200; ++it) gibbs.step();
  for (int it = 0; it < 40000; ++it) {
    gibbs.step();
    rb.push_back(gibbs.rb_probability(a, 3));
  }
  auto est = chain_estimate(rb);
  EXPECT_NEAR(est.value, num / den, 3.0 * est.se + 1e-9);
}
