// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "dacq/cli.hpp"
#include "dacq/dacq.hpp"
#include "support.hpp"

using namespace dacq;

namespace {

// Pinned tolerances.
constexpr double kKernelTol = 1e-10;
constexpr double kPottsOracleTol = 1e-10;
constexpr double kSigmas = 3.0;
constexpr std::uint64_t kMcmcSamples = 1000000;
constexpr std::uint64_t kCouplingRuns = 10000;
constexpr std::uint64_t kConnectionReplicas = 20000;

struct Outcome {
  bool passed = true;
  std::string detail;
};

std::string fmt(const char* f, double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, x);
  return buf;
}

std::vector<FiniteGraph> small_corpus() {
  auto out = builtin_corpus();
  for (auto& ng : testkit::load_corpus())
    if (ng.graph.num_edges() <= 9) out.push_back(ng.graph);
  return out;
}

const VerifyReport& battery() {
  static const VerifyReport report = [] {
    VerifyOptions opt;
    opt.seed = 20260101;
    opt.corpus = small_corpus();
    return run_verify_battery(opt);
  }();
  return report;
}

Outcome from_checks(std::initializer_list<const char*> names) {
  Outcome o;
  for (const char* name : names) {
    auto it = std::find_if(battery().checks.begin(), battery().checks.end(),
                           [&](const CheckResult& c) { return c.name == name; });
    if (it == battery().checks.end()) {
      o.passed = false;
      o.detail += std::string(name) + "=missing ";
      continue;
    }
    o.passed = o.passed && it->passed;
    o.detail += it->name + "=" + fmt("%.3g", it->deviation) + "/" + fmt("%.3g", it->tolerance) + " ";
  }
  return o;
}

Outcome c1_edge_conditionals() { return from_checks({"fk_two_case"}); }

Outcome c2_ratio_constants() { return from_checks({"ratio_closed_form", "ratio_seven_ninths", "ratio_trichotomy"}); }

Outcome c3_factorizations() { return from_checks({"edge_factorization", "barrier_factorization"}); }

Outcome c4_nonnull_floor() { return from_checks({"nonnull_floor", "nonnull_p_zero"}); }

Outcome c5_potts() {
  Outcome o = from_checks({"potts_markov"});
  double worst = 0.0;
  for (const auto& g : small_corpus())
    for (int s : {2, 3}) {
      if (std::pow(s, g.num_vertices()) * std::ldexp(1.0, g.num_edges()) > kMaxDacStates) continue;
      for (double p : {0.2, 0.55, 0.9}) {
        ModelParams params{p, static_cast<double>(s), std::vector<double>(static_cast<std::size_t>(s), 1.0 / s)};
        auto table = dac_exact(g, params).spin_marginal_table();
        auto potts = testkit::potts_spin_law(g, s, p);
        for (std::size_t i = 0; i < table.size(); ++i) worst = std::max(worst, std::abs(table[i] - potts[i]));
      }
    }
  o.passed = o.passed && worst < kPottsOracleTol;
  o.detail += "oracle=" + fmt("%.3g", worst) + " ";
  double worst_z = 0.0;
  for (int s : {2, 3})
    for (double p : {0.3, 0.6})
      for (int k : {1, 2, 3}) {
        ModelParams params{p, static_cast<double>(s), std::vector<double>(static_cast<std::size_t>(s), 1.0 / s)};
        auto r = direct_gap_gibbs(params, 2, k, k + 2, 7000 + 100 * s + k, GibbsOptions{100, 20000, 4, 0});
        for (const auto& gap : {r.gap_ell, r.gap_m}) {
          const double z = gap.se > 0 ? std::abs(gap.value) / gap.se : (gap.value == 0 ? 0.0 : INFINITY);
          worst_z = std::max(worst_z, z);
        }
      }
  o.passed = o.passed && worst_z <= kSigmas;
  o.detail += "max|gap|/se=" + fmt("%.2f", worst_z);
  return o;
}

Outcome c6_mcmc() {
  Outcome o;
  double worst = 0.0;
  const std::vector<std::pair<double, double>> pq{{0.5, 2.0}, {0.3, 1.0}, {0.7, 3.5}, {0.2, 0.5}};
  for (const auto& g : small_corpus()) {
    const std::uint32_t masks = 1u << g.num_edges();
    for (auto [p, q] : pq) {
      auto pi = fk_exact(g, p, q).probabilities();
      RcChain chain(g, p, q, 1);
      for (int e = 0; e < g.num_edges(); ++e) {
        std::vector<double> next(masks, 0.0);
        for (std::uint32_t m = 0; m < masks; ++m) {
          chain.set_state(BondConfig::from_mask(m, static_cast<std::size_t>(g.num_edges())));
          const double po = chain.open_probability(e);
          next[m | (1u << e)] += pi[m] * po;
          next[m & ~(1u << e)] += pi[m] * (1.0 - po);
        }
        for (std::uint32_t m = 0; m < masks; ++m) worst = std::max(worst, std::abs(next[m] - pi[m]));
      }
    }
  }
  o.passed = worst < kKernelTol;
  o.detail = "kernel=" + fmt("%.3g", worst) + " ";
  auto g = build_grid({2, 2});
  double worst_z = 0.0;
  for (auto [p, q] : std::vector<std::pair<double, double>>{{0.5, 2.0}, {0.3, 4.0}}) {
    auto exact = fk_exact(g, p, q);
    std::vector<std::vector<double>> series(static_cast<std::size_t>(g.num_edges()));
    for (auto& s : series) s.reserve(kMcmcSamples);
    RcChain chain(g, p, q, 4242);
    run_chain_visit(chain, ChainOptions{1000, kMcmcSamples, 1, false}, [&](const BondConfig& eta, std::uint64_t) {
      for (int e = 0; e < g.num_edges(); ++e) series[e].push_back(eta.open(e));
    });
    for (int e = 0; e < g.num_edges(); ++e) {
      auto est = chain_estimate(series[e]);
      worst_z = std::max(worst_z, std::abs(est.value - exact.edge_marginal(e)) / est.se);
    }
  }
  o.passed = o.passed && worst_z <= kSigmas;
  o.detail += "max|marginal-exact|/se=" + fmt("%.2f", worst_z);
  return o;
}

std::vector<double> product_law(const std::vector<double>& p) {
  std::vector<double> out(std::size_t{1} << p.size(), 1.0);
  for (std::size_t m = 0; m < out.size(); ++m)
    for (std::size_t e = 0; e < p.size(); ++e) out[m] *= ((m >> e) & 1u) ? p[e] : 1.0 - p[e];
  return out;
}

Outcome c7_domination() {
  Outcome o;
  int violations = 0, cases = 0;
  for (int n : {2, 3, 4}) {
    auto g = build_box(2, n);
    for (auto [p, q] : std::vector<std::pair<double, double>>{{0.5, 2.0}, {0.65, 3.0}, {0.4, 1.0}}) {
      ChainOptions opt{200, 5000, 1, false};
      auto f = run_chain(g, p, q, BoundaryMode::kFree, 100 + n, opt);
      auto w = run_chain(g, p, q, BoundaryMode::kWired, 200 + n, opt);
      auto check = [&](const Estimate& fe, const Estimate& we) {
        ++cases;
        if (we.value < fe.value - kSigmas * std::hypot(fe.se, we.se)) ++violations;
      };
      check(chain_estimate(f.stats.open_density), chain_estimate(w.stats.open_density));
      std::vector<double> fc(f.stats.origin_boundary_connected.begin(), f.stats.origin_boundary_connected.end());
      std::vector<double> wc(w.stats.origin_boundary_connected.begin(), w.stats.origin_boundary_connected.end());
      check(chain_estimate(fc), chain_estimate(wc));
      check(chain_estimate(f.stats.largest_cluster_fraction), chain_estimate(w.stats.largest_cluster_fraction));
    }
  }
  std::mt19937_64 gen(77);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  int disagreements = 0, feasible = 0, infeasible = 0;
  for (int trial = 0; trial < 400; ++trial) {
    const int m = 1 + trial % 4;
    std::vector<double> ph(static_cast<std::size_t>(m)), pl(static_cast<std::size_t>(m));
    std::vector<double> high, low;
    if (trial % 2 == 0) {
      for (int e = 0; e < m; ++e) {
        ph[e] = unif(gen);
        pl[e] = unif(gen) * (trial % 4 == 0 ? ph[e] : 1.0);
      }
      high = product_law(ph);
      low = product_law(pl);
    } else {
      high.resize(std::size_t{1} << m);
      low.resize(high.size());
      double sh = 0, sl = 0;
      for (auto& x : high) sh += (x = unif(gen));
      for (auto& x : low) sl += (x = unif(gen));
      for (auto& x : high) x /= sh;
      for (auto& x : low) x /= sl;
    }
    const bool flow = strassen_feasible(high, low, m);
    if (flow != dominates_by_events(high, low, m)) ++disagreements;
    (flow ? feasible : infeasible) += 1;
  }
  o.passed = violations == 0 && disagreements == 0 && feasible > 0 && infeasible > 0;
  o.detail = "free>wired violations=" + std::to_string(violations) + "/" + std::to_string(cases) +
             " strassen disagreements=" + std::to_string(disagreements) + " (feasible " + std::to_string(feasible) +
             ", infeasible " + std::to_string(infeasible) + ")";
  return o;
}

Outcome c8_coupling() {
  const ModelParams params{0.1, 1.0, {0.3, 0.7}};
  auto g = build_box(2, 8);
  const VertexSet W{origin_vertex(g)};
  struct Run {
    bool violated = false;
    bool crossing = false;
    bool mismatch = false;
  };
  auto runs = parallel_map(static_cast<std::size_t>(kCouplingRuns), 0, [&](std::size_t r) {
    auto tr = run_coupling_replica(g, params, W, 31337, r);
    Run out;
    for (const auto& st : tr.steps)
      if (st.dom < st.hat || st.dom < st.hat_prime) out.violated = true;
    out.crossing = tr.end == CouplingEnd::kCrossing;
    out.mismatch = !tr.x_equal();
    return out;
  });
  std::vector<double> crossing, mismatch;
  int violated = 0;
  for (const auto& r : runs) {
    violated += r.violated;
    crossing.push_back(r.crossing);
    mismatch.push_back(r.mismatch);
  }
  auto c = replica_estimate(crossing);
  auto m = replica_estimate(mismatch);
  Outcome o;
  o.passed = violated == 0 && m.value <= c.value + kSigmas * c.se;
  o.detail = "violations=" + std::to_string(violated) + " P(X!=X')=" + fmt("%.4f", m.value) +
             " crossing=" + fmt("%.4f", c.value) + " se=" + fmt("%.4f", c.se);
  return o;
}

Outcome c9_non_quasilocality() {
  Outcome o;
  const int d = 2;
  std::vector<Estimate> hi, lo;
  for (double p : {0.8, 0.2}) {
    const ModelParams params{p, 1.0, {0.3, 0.7}};
    for (int k = 2; k <= 8; ++k) {
      const int n = k + 4;
      auto pa = estimate_connection_lower(params, d, k, n, derive_seed(777, 0x51, static_cast<std::uint64_t>(k)),
                                          kConnectionReplicas, 0);
      auto report = assemble_gap_bound(GapInputs{params, d, k, pa, std::nullopt, std::nullopt});
      (p > 0.5 ? hi : lo).push_back(report.bound);
    }
  }
  bool margin = true;
  for (const auto& b : hi) margin = margin && b.se > 0 && b.value > kSigmas * b.se;
  bool monotone = true;
  for (std::size_t i = 0; i + 1 < lo.size(); ++i)
    monotone = monotone && lo[i + 1].value <= lo[i].value + kSigmas * std::hypot(lo[i].se, lo[i + 1].se);
  o.passed = margin && monotone;
  std::ostringstream s;
  s << "p=0.8 min bound/se=";
  double min_z = INFINITY;
  for (const auto& b : hi) min_z = std::min(min_z, b.se > 0 ? b.value / b.se : 0.0);
  s << fmt("%.1f", min_z) << " p=0.2 bounds:";
  for (const auto& b : lo) s << ' ' << fmt("%.2e", b.value);
  o.detail = s.str() + (monotone ? " (non-increasing)" : " (increase beyond noise)");
  return o;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome c10_determinism() {
  namespace fs = std::filesystem;
  const fs::path root = fs::temp_directory_path() / "dacq_acceptance_cli";
  fs::remove_all(root);
  fs::create_directories(root);
  struct Command {
    std::string name;
    nlohmann::json config;
  };
  const std::vector<Command> commands{
      {"verify", {{"seed", 5}}},
      {"sample", {{"d", 2}, {"n", 4}, {"p", 0.55}, {"q", 2.0}, {"samples", 50}, {"dump", true}, {"seed", 5}}},
      {"sample", {{"d", 2}, {"n", 3}, {"p", 0.5}, {"q", 1.0}, {"a", {0.3, 0.7}}, {"samples", 20}, {"dump", true}}},
      {"probe",
       {{"d", 2}, {"k_list", {1, 2}}, {"n", 5}, {"p", 0.7}, {"q", 4.0}, {"a", {0.3, 0.7}}, {"replicas", 500},
        {"sweeps", 100}, {"burn_in", 20}, {"chains", 4}}},
      {"couple",
       {{"d", 2}, {"n", 6}, {"p", 0.2}, {"q", 1.0}, {"a", {0.3, 0.7}}, {"replicas", 40}, {"transcript", true}}},
      {"constants", {{"p", 0.6}, {"q", 3.0}, {"a", {0.2, 0.5, 0.3}}}},
  };
  Outcome o;
  int idx = 0, files = 0;
  for (const auto& cmd : commands) {
    const fs::path cfg = root / (std::to_string(idx) + ".json");
    std::ofstream(cfg) << cmd.config.dump();
    std::vector<fs::path> outs;
    for (const char* threads : {"1", "1", "4"}) {
      const fs::path dir = root / (std::to_string(idx) + "_" + std::to_string(outs.size()));
      const std::string cfg_s = cfg.string(), dir_s = dir.string();
      const char* argv[] = {"dacq", cmd.name.c_str(), "--config", cfg_s.c_str(), "--threads", threads, "--out",
                            dir_s.c_str()};
      std::ostringstream sink_out, sink_err;
      const int code = cli::run(8, argv, sink_out, sink_err);
      if (code != 0) {
        o.passed = false;
        o.detail += cmd.name + " exit " + std::to_string(code) + " ";
      }
      outs.push_back(dir);
    }
    for (const auto& entry : fs::directory_iterator(outs[0])) {
      const auto name = entry.path().filename();
      const auto ref = slurp(entry.path());
      ++files;
      for (std::size_t i = 1; i < outs.size(); ++i)
        if (slurp(outs[i] / name) != ref) {
          o.passed = false;
          o.detail += cmd.name + "/" + name.string() + " differs ";
        }
    }
    ++idx;
  }
  fs::remove_all(root);
  if (o.detail.empty()) o.detail = std::to_string(files) + " files identical across reruns and thread counts";
  return o;
}

}  // namespace

int main() {
  struct Criterion {
    const char* id;
    const char* name;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria{
      {"C1", "edge conditionals match the two-case formula", c1_edge_conditionals},
      {"C2", "ratio constants, 7/9 instance and sign trichotomy", c2_ratio_constants},
      {"C3", "conditional factorizations", c3_factorizations},
      {"C4", "non-nullness floor", c4_nonnull_floor},
      {"C5", "Potts specialization", c5_potts},
      {"C6", "heat-bath invariance and chain marginals", c6_mcmc},
      {"C7", "free/wired ordering and flow feasibility", c7_domination},
      {"C8", "three-way coupling soundness", c8_coupling},
      {"C9", "non-quasilocality signal", c9_non_quasilocality},
      {"C10", "CLI determinism", c10_determinism},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("%s %s: %s [%s] (%.1fs)\n", o.passed ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str(), secs);
    std::fflush(stdout);
    failures += !o.passed;
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
