#pragma once

// Command-line front end. run() parses arguments, reads the JSON config,
// executes one subcommand and returns the process exit code:
// 0 success, 1 contract failure, 2 usage or config error.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <vector>

#include "CLI11.hpp"
#include "dacq/dac_sampler.hpp"
#include "dacq/domination.hpp"
#include "dacq/graph_io.hpp"
#include "dacq/quasilocality.hpp"
#include "dacq/rc_sampler.hpp"
#include "dacq/verify.hpp"
#include "json.hpp"

#ifndef DACQ_VERSION
#define DACQ_VERSION "0.1.0-unknown"
#endif

namespace dacq::cli {

using nlohmann::json;

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ContractError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Globals {
  std::uint64_t seed = 1;
  unsigned threads = 1;
  std::filesystem::path out = ".";
};

inline std::string fmt_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

/// Typed access to a config object with a fixed key set.
class Config {
 public:
  Config(json j, const std::set<std::string>& allowed) : j_(std::move(j)) {
    if (!j_.is_object()) throw ConfigError("config must be a JSON object");
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!allowed.count(it.key())) throw ConfigError("unknown config field '" + it.key() + "'");
  }

  bool has(const std::string& key) const { return j_.contains(key) && !j_.at(key).is_null(); }

  template <class T>
  T get(const std::string& key) const {
    if (!has(key)) throw ConfigError("missing required field '" + key + "'");
    if constexpr (std::is_unsigned_v<T> && !std::is_same_v<T, bool>) {
      if (!j_.at(key).is_number_unsigned()) throw ConfigError("field '" + key + "' must be a non-negative integer");
    }
    try {
      return j_.at(key).get<T>();
    } catch (const json::exception&) {
      throw ConfigError("field '" + key + "' has the wrong type");
    }
  }

  template <class T>
  T get(const std::string& key, T fallback) const {
    return has(key) ? get<T>(key) : fallback;
  }

  /// Records a resolved value for the output header.
  template <class T>
  T resolve(const std::string& key, T fallback) {
    T v = get<T>(key, fallback);
    resolved_[key] = v;
    return v;
  }
  template <class T>
  T resolve(const std::string& key) {
    T v = get<T>(key);
    resolved_[key] = v;
    return v;
  }
  void set_resolved(const std::string& key, json v) { resolved_[key] = std::move(v); }
  const json& resolved() const { return resolved_; }

 private:
  json j_;
  json resolved_ = json::object();
};

inline std::string header_block(const json& resolved) {
  return std::string("# dacq ") + DACQ_VERSION + "\n# config: " + resolved.dump() + "\n";
}

inline void write_file(const std::filesystem::path& path, const std::string& text) {
  std::filesystem::create_directories(path.parent_path().empty() ? std::filesystem::path(".") : path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

inline ModelParams read_params(Config& c, bool need_a) {
  ModelParams params;
  params.p = c.resolve<double>("p");
  params.q = c.resolve<double>("q");
  if (c.has("a")) {
    params.a = c.resolve<std::vector<double>>("a");
    if (c.has("s") && c.get<int>("s") != params.s()) throw ConfigError("field 's' disagrees with the length of 'a'");
    c.set_resolved("s", params.s());
  } else if (c.has("s")) {
    const int s = c.resolve<int>("s");
    if (s < 1) throw ConfigError("field 's' must be >= 1");
    params.a.assign(static_cast<std::size_t>(s), 1.0 / s);
    c.set_resolved("a", params.a);
  } else if (need_a) {
    throw ConfigError("missing required field 'a' (or 's' for a uniform law)");
  } else {
    params.a = {0.5, 0.5};
  }
  try {
    params.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return params;
}

inline std::uint64_t resolve_seed(Config& c, const Globals& g, bool seed_flag) {
  const std::uint64_t seed = seed_flag ? g.seed : c.get<std::uint64_t>("seed", g.seed);
  c.set_resolved("seed", seed);
  return seed;
}

// sample ---------------------------------------------------------------

inline int cmd_sample(const json& raw, const Globals& glob, bool seed_flag, std::ostream& out) {
  Config c(raw, {"d", "n", "p", "q", "a", "s", "boundary", "seed", "burn_in", "samples", "thinning", "forced_closed",
                 "forced_open", "dump", "threads", "output_path"});
  const int d = c.resolve<int>("d");
  const int n = c.resolve<int>("n");
  const bool dac = c.has("a") || c.has("s");
  const ModelParams params = read_params(c, false);
  const std::string boundary = c.resolve<std::string>("boundary", "free");
  if (boundary != "free" && boundary != "wired") throw ConfigError("boundary must be \"free\" or \"wired\"");
  const auto seed = resolve_seed(c, glob, seed_flag);
  ChainOptions opt;
  opt.burn_in = c.resolve<std::uint64_t>("burn_in", 100);
  opt.samples = c.resolve<std::uint64_t>("samples", 100);
  opt.thinning = c.resolve<std::uint64_t>("thinning", 1);
  if (opt.thinning == 0) throw ConfigError("thinning must be >= 1");
  const bool dump = c.resolve<bool>("dump", false);
  auto closed = c.resolve<EdgeSet>("forced_closed", EdgeSet{});
  auto open = c.resolve<EdgeSet>("forced_open", EdgeSet{});
  if (d < 1 || n < 1) throw ConfigError("d and n must be >= 1");
  auto g = build_box(d, n);
  for (int e : closed)
    if (e < 0 || e >= g.num_edges()) throw ConfigError("forced_closed: edge id out of range");
  for (int e : open)
    if (e < 0 || e >= g.num_edges()) throw ConfigError("forced_open: edge id out of range");
  std::sort(closed.begin(), closed.end());
  std::sort(open.begin(), open.end());
  if (dac && (!closed.empty() || !open.empty())) throw ConfigError("forced edges are not supported in divide-and-color mode");
  const BoundaryMode mode = boundary == "wired" ? BoundaryMode::kWired : BoundaryMode::kFree;

  const std::string head = header_block(c.resolved());
  std::ostringstream stats, edges, vertices;
  stats << head << "sweep,open_density,largest_cluster_fraction,origin_boundary_connected\n";
  edges << head << "sample,edge,u,v,open" << (dac ? ",open_hat" : "") << "\n";
  vertices << head << "sample,vertex";
  for (int i = 1; i <= d; ++i) vertices << ",x" << i;
  vertices << ",spin\n";
  const int origin = origin_vertex(g);
  std::uint64_t index = 0;
  auto record = [&](const BondConfig& eta, const BondConfig* hat, const SpinConfig* xi, std::uint64_t sweep) {
    ChainStats st;
    record_stats(g, eta, sweep, origin, st);
    stats << st.sweep[0] << ',' << fmt_double(st.open_density[0]) << ',' << fmt_double(st.largest_cluster_fraction[0])
          << ',' << static_cast<int>(st.origin_boundary_connected[0]) << '\n';
    if (dump) {
      for (int e = 0; e < g.num_edges(); ++e) {
        edges << index << ',' << e << ',' << g.edge(e).u << ',' << g.edge(e).v << ',' << eta.open(e);
        if (hat) edges << ',' << hat->open(e);
        edges << '\n';
      }
      if (xi)
        for (int v = 0; v < g.num_vertices(); ++v) {
          vertices << index << ',' << v;
          for (int x : g.coords(v)) vertices << ',' << x;
          vertices << ',' << (*xi)[v] << '\n';
        }
    }
    ++index;
  };
  if (dac) {
    run_dac_chain(g, params, mode, seed, opt,
                  [&](const DacSample& s, std::uint64_t sweep) { record(s.eta, &s.eta_hat, &s.xi, sweep); });
  } else {
    RcChain chain(g, params.p, params.q, seed, mode, EdgeConstraint{open, closed});
    run_chain_visit(chain, opt, [&](const BondConfig& eta, std::uint64_t sweep) { record(eta, nullptr, nullptr, sweep); });
  }
  write_file(glob.out / "sample.csv", stats.str());
  if (dump) {
    write_file(glob.out / "edges.csv", edges.str());
    if (dac) write_file(glob.out / "vertices.csv", vertices.str());
  }
  out << "sample: " << opt.samples << " rows written to " << (glob.out / "sample.csv").string() << "\n";
  return 0;
}

// probe ----------------------------------------------------------------

inline int cmd_probe(const json& raw, const Globals& glob, bool seed_flag, std::ostream& out) {
  Config c(raw, {"d", "k_list", "n", "p", "q", "a", "s", "replicas", "sweeps", "burn_in", "chains", "seed", "threads",
                 "output_path"});
  const int d = c.resolve<int>("d");
  const auto ks = c.resolve<std::vector<int>>("k_list");
  const int n = c.resolve<int>("n");
  const ModelParams params = read_params(c, true);
  const auto replicas = c.resolve<std::uint64_t>("replicas", 1000);
  const auto sweeps = c.resolve<std::uint64_t>("sweeps", 500);
  const auto burn_in = c.resolve<std::uint64_t>("burn_in", 100);
  const auto chains = c.resolve<std::uint64_t>("chains", 4);
  const auto seed = resolve_seed(c, glob, seed_flag);
  if (ks.empty()) throw ConfigError("k_list must not be empty");
  if (d < 2) throw ConfigError("d must be >= 2");
  if (replicas == 0 || chains == 0) throw ConfigError("replicas and chains must be positive");
  for (int k : ks)
    if (k < 1 || n <= k + 1) throw ConfigError("every k needs 1 <= k and n > k + 1");
  const int ell = probe_colors(params).first;
  const bool rc_regime = params.ell().has_value() && params.q * params.a_of(ell) > 1.0;

  std::ostringstream csv;
  csv << header_block(c.resolved())
      << "k,n,pA_lower,pA_lower_se,pA_rc,pA_rc_se,c1,c2,delta,bound,bound_se,gap_ell,gap_ell_se,gap_m,gap_m_se\n";
  auto opt_field = [](const std::optional<Estimate>& e, bool se) {
    return e ? fmt_double(se ? e->se : e->value) : std::string();
  };
  for (int k : ks) {
    const auto kk = static_cast<std::uint64_t>(k);
    GapInputs in;
    in.params = params;
    in.d = d;
    in.k = k;
    in.pA_lower = estimate_connection_lower(params, d, k, n, derive_seed(seed, static_cast<std::uint64_t>(Stream::kBernoulli), kk),
                                            replicas, glob.threads);
    if (rc_regime)
      in.pA_rc = estimate_connection_rc(params, d, k, n, derive_seed(seed, static_cast<std::uint64_t>(Stream::kBond), kk),
                                        replicas, RcBudget{burn_in, chains, glob.threads});
    if (sweeps > 0 && n >= k + 2)
      in.direct = direct_gap_gibbs(params, d, k, n, derive_seed(seed, static_cast<std::uint64_t>(Stream::kSpin), kk),
                                   GibbsOptions{burn_in, sweeps, chains, glob.threads});
    auto r = assemble_gap_bound(in);
    std::optional<Estimate> ge, gm;
    if (r.direct) {
      ge = r.direct->gap_ell;
      gm = r.direct->gap_m;
    }
    csv << k << ',' << n << ',' << fmt_double(r.pA_lower.value) << ',' << fmt_double(r.pA_lower.se) << ','
        << opt_field(r.pA_rc, false) << ',' << opt_field(r.pA_rc, true) << ',' << fmt_double(r.c1) << ','
        << fmt_double(r.c2) << ',' << fmt_double(r.delta) << ',' << fmt_double(r.bound.value) << ','
        << fmt_double(r.bound.se) << ',' << opt_field(ge, false) << ',' << opt_field(ge, true) << ','
        << opt_field(gm, false) << ',' << opt_field(gm, true) << '\n';
  }
  write_file(glob.out / "probe.csv", csv.str());
  out << "probe: " << ks.size() << " rows written to " << (glob.out / "probe.csv").string() << "\n";
  return 0;
}

// couple ---------------------------------------------------------------

inline int cmd_couple(const json& raw, const Globals& glob, bool seed_flag, std::ostream& out) {
  Config c(raw, {"d", "n", "p", "q", "a", "s", "W", "replicas", "gibbs_sweeps", "transcript", "seed", "threads",
                 "output_path"});
  const int d = c.resolve<int>("d");
  const int n = c.resolve<int>("n");
  const ModelParams params = read_params(c, true);
  const auto replicas = c.resolve<std::uint64_t>("replicas", 100);
  CouplingOptions copt;
  copt.gibbs_sweeps = c.resolve<std::uint64_t>("gibbs_sweeps", copt.gibbs_sweeps);
  const bool transcript = c.resolve<bool>("transcript", false);
  auto w_coords = c.resolve<std::vector<Coord>>("W", std::vector<Coord>{Coord(static_cast<std::size_t>(std::max(d, 1)), 0)});
  const auto seed = resolve_seed(c, glob, seed_flag);
  if (d < 1 || n < 1) throw ConfigError("d and n must be >= 1");
  if (replicas == 0) throw ConfigError("replicas must be positive");
  auto g = build_box(d, n);
  VertexSet W;
  for (const auto& x : w_coords) {
    auto v = g.find_vertex(x);
    if (!v) throw ConfigError("W: vertex outside the box");
    W.push_back(*v);
  }
  std::sort(W.begin(), W.end());
  W.erase(std::unique(W.begin(), W.end()), W.end());
  try {
    dominating_spec(params);
  } catch (const std::domain_error& e) {
    throw ConfigError(e.what());
  }
  auto runs = parallel_map(static_cast<std::size_t>(replicas), glob.threads, [&](std::size_t r) {
    return run_coupling_replica(g, params, W, seed, r, copt);
  });
  const std::string head = header_block(c.resolved());
  std::ostringstream csv;
  csv << head << "replica,terminal_event,barrier_radius,X_W_equal,explored\n";
  std::uint64_t barriers = 0, mismatches = 0;
  for (std::size_t r = 0; r < runs.size(); ++r) {
    const auto& tr = runs[r];
    const bool barrier = tr.end == CouplingEnd::kBarrier;
    barriers += barrier;
    mismatches += !tr.x_equal();
    csv << r << ',' << (barrier ? "barrier" : "crossing") << ',' << (tr.barrier ? tr.barrier->radius(g) : -1) << ','
        << tr.x_equal() << ',' << tr.steps.size() << '\n';
  }
  write_file(glob.out / "couple.csv", csv.str());
  if (transcript) {
    std::ostringstream jl;
    jl << json{{"version", DACQ_VERSION}, {"config", c.resolved()}}.dump() << '\n';
    for (std::size_t r = 0; r < runs.size(); ++r)
      for (const auto& s : runs[r].steps)
        jl << "{\"replica\":" << r << ",\"edge\":" << s.edge << ",\"u\":" << fmt_double(s.u)
           << ",\"hat\":" << int(s.hat) << ",\"hat_prime\":" << int(s.hat_prime) << ",\"dom\":" << int(s.dom)
           << ",\"frontier\":" << s.frontier << "}\n";
    write_file(glob.out / "transcript.jsonl", jl.str());
  }
  out << "couple: " << replicas << " replicas, " << barriers << " barrier, " << (replicas - barriers)
      << " crossing, " << mismatches << " with X_W != X'_W\n";
  return 0;
}

// constants ------------------------------------------------------------

inline int cmd_constants(const json& raw, const Globals& glob, std::ostream& out) {
  Config c(raw, {"p", "q", "a", "s", "d", "seed", "threads", "output_path"});
  const ModelParams params = read_params(c, true);
  const int d = c.resolve<int>("d", 2);
  if (d < 1) throw ConfigError("d must be >= 1");
  const auto [ell, m] = probe_colors(params);
  const auto k = ratio_constants(params, d, ell, m);
  const double eps = nonnull_epsilon(params, d);
  json j;
  j["version"] = DACQ_VERSION;
  j["config"] = c.resolved();
  j["potts"] = params.is_potts();
  j["ell"] = ell;
  j["m"] = m;
  j["c1"] = k.c1;
  j["c2"] = k.c2;
  j["epsilon"] = eps;
  j["delta"] = 2.0 * eps;
  j["p_tilde"] = lower_density(params);
  try {
    const auto spec = dominating_spec(params);
    j["dominating"] = {{"kind", spec.kind == DominatingKind::kWiredRc ? "wired_rc" : "product_bernoulli"},
                       {"p_effective", spec.p_effective},
                       {"q_effective", spec.q_effective},
                       {"ell", spec.ell}};
  } catch (const std::domain_error& e) {
    j["dominating"] = nullptr;
    j["dominating_reason"] = e.what();
  }
  const std::string text = j.dump(2) + "\n";
  write_file(glob.out / "constants.json", text);
  out << text;
  return 0;
}

// verify ---------------------------------------------------------------

inline int cmd_verify(const json& raw, const Globals& glob, bool seed_flag, std::ostream& out) {
  Config c(raw, {"seed", "threads", "output_path", "fault_injection", "trichotomy_draws", "corpus_dir"});
  VerifyOptions opt;
  opt.seed = resolve_seed(c, glob, seed_flag);
  opt.fault_injection = c.resolve<std::string>("fault_injection", "");
  if (!opt.fault_injection.empty() && opt.fault_injection != "ratio_c1")
    throw ConfigError("unknown fault_injection '" + opt.fault_injection + "'");
  opt.trichotomy_draws = c.resolve<std::uint64_t>("trichotomy_draws", 10000);
  if (c.has("corpus_dir")) {
    const std::filesystem::path dir = c.resolve<std::string>("corpus_dir");
    if (!std::filesystem::is_directory(dir)) throw ConfigError("corpus_dir is not a directory");
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(dir))
      if (entry.path().extension() == ".json") files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
      std::ifstream in(f);
      try {
        opt.corpus.push_back(graph_from_json(json::parse(in)));
      } catch (const std::exception& e) {
        throw ConfigError("corpus graph " + f.filename().string() + ": " + e.what());
      }
    }
  }
  auto report = run_verify_battery(opt);
  json j = report_to_json(report);
  j["version"] = DACQ_VERSION;
  j["config"] = c.resolved();
  write_file(glob.out / "verify_report.json", j.dump(2) + "\n");
  for (const auto& ch : report.checks)
    out << (ch.passed ? "PASS " : "FAIL ") << ch.name << " deviation=" << fmt_double(ch.deviation)
        << " tolerance=" << fmt_double(ch.tolerance) << " cases=" << ch.cases << "\n";
  if (!report.passed()) throw ContractError("verification battery reported deviations");
  return 0;
}

// entry ----------------------------------------------------------------

inline json load_config(const std::string& path) {
  if (path.empty()) return json::object();
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("malformed JSON: ") + e.what());
  }
}

inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"dacq: divide-and-color experiments"};
  app.require_subcommand(1);
  std::string config_path;
  std::uint64_t seed = 1;
  unsigned threads = 1;
  std::string out_dir;
  struct Sub {
    CLI::App* app;
    CLI::Option* seed;
    CLI::Option* threads;
    CLI::Option* out;
  };
  std::vector<std::pair<std::string, Sub>> subs;
  const std::vector<std::pair<std::string, std::string>> names{
      {"verify", "run the exact verification battery"},
      {"sample", "run a random-cluster or divide-and-color chain"},
      {"probe", "estimate the connection event and gap bound per k"},
      {"couple", "run three-way coupling replicas"},
      {"constants", "print derived constants for given parameters"}};
  for (const auto& [name, help] : names) {
    auto* s = app.add_subcommand(name, help);
    s->add_option("--config", config_path, "JSON config file");
    Sub sub{s, s->add_option("--seed", seed, "master seed"), s->add_option("--threads", threads, "worker threads (0 = all)"),
            s->add_option("--out", out_dir, "output directory")};
    subs.emplace_back(name, sub);
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }
  try {
    for (const auto& [name, sub] : subs) {
      if (!sub.app->parsed()) continue;
      json raw = load_config(config_path);
      if (name != "verify" && name != "constants" && config_path.empty()) throw ConfigError("--config is required");
      Globals glob;
      if (raw.is_object()) {
        if (raw.contains("threads") && !raw["threads"].is_null()) {
          if (!raw["threads"].is_number_unsigned()) throw ConfigError("field 'threads' has the wrong type");
          glob.threads = raw["threads"].get<unsigned>();
        }
        if (raw.contains("output_path") && !raw["output_path"].is_null()) {
          if (!raw["output_path"].is_string()) throw ConfigError("field 'output_path' has the wrong type");
          glob.out = raw["output_path"].get<std::string>();
        }
      }
      if (sub.threads->count()) glob.threads = threads;
      if (sub.out->count()) glob.out = out_dir;
      const bool seed_flag = sub.seed->count() > 0;
      glob.seed = seed;
      if (name == "verify") return cmd_verify(raw, glob, seed_flag, out);
      if (name == "sample") return cmd_sample(raw, glob, seed_flag, out);
      if (name == "probe") return cmd_probe(raw, glob, seed_flag, out);
      if (name == "couple") return cmd_couple(raw, glob, seed_flag, out);
      if (name == "constants") return cmd_constants(raw, glob, out);
    }
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return 2;
  } catch (const ContractError& e) {
    err << "contract failure: " << e.what() << "\n";
    return 1;
  } catch (const std::invalid_argument& e) {
    err << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::domain_error& e) {
    err << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "failure: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

}  // namespace dacq::cli
