#pragma once

// Test-only helpers: corpus loading and independent reference computations
// that share no code path with the library's samplers or enumerators.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include "dacq/graph.hpp"
#include "dacq/graph_io.hpp"
#include "json.hpp"

namespace dacq::testkit {

struct NamedGraph {
  std::string name;
  FiniteGraph graph;
};

inline std::string data_path(const std::string& rel) { return std::string(DACQ_TEST_DATA) + "/" + rel; }

inline nlohmann::json load_json(const std::string& rel) {
  std::ifstream in(data_path(rel));
  return nlohmann::json::parse(in);
}

/// Every graph in tests/test_graphs, sorted by file name.
inline std::vector<NamedGraph> load_corpus() {
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(data_path("test_graphs")))
    if (entry.path().extension() == ".json") files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  std::vector<NamedGraph> out;
  for (const auto& f : files) {
    std::ifstream in(f);
    out.push_back({f.stem().string(), graph_from_json(nlohmann::json::parse(in))});
  }
  return out;
}

/// Potts spin law from Hamiltonian weights exp(2 beta #{equal neighbor pairs})
/// with beta = -log(1-p)/2, by direct enumeration of s^|V| colorings.
/// Spin codes use vertex 0 as the least significant base-s digit.
inline std::vector<double> potts_spin_law(const FiniteGraph& g, int s, double p) {
  const double two_beta = -std::log1p(-p);
  std::size_t states = 1;
  for (int v = 0; v < g.num_vertices(); ++v) states *= static_cast<std::size_t>(s);
  std::vector<double> w(states);
  std::vector<int> spin(static_cast<std::size_t>(g.num_vertices()));
  double z = 0.0;
  for (std::size_t code = 0; code < states; ++code) {
    std::size_t c = code;
    for (int v = 0; v < g.num_vertices(); ++v) {
      spin[v] = static_cast<int>(c % static_cast<std::size_t>(s));
      c /= static_cast<std::size_t>(s);
    }
    int equal = 0;
    for (const auto& e : g.edges()) equal += spin[e.u] == spin[e.v];
    w[code] = std::exp(two_beta * equal);
    z += w[code];
  }
  for (double& x : w) x /= z;
  return w;
}

/// Closed-form edge count of G_n: edges inside Lambda_n, edges from Lambda_n
/// to its boundary, and edges running along each boundary face.
inline long box_edge_count(int d, int n) {
  auto pw = [](long b, int e) {
    long r = 1;
    for (int i = 0; i < e; ++i) r *= b;
    return r;
  };
  const long side = 2 * n + 1;
  long inner = d * 2L * n * pw(side, d - 1);
  long spokes = 2L * d * pw(side, d - 1);
  long faces = d >= 2 ? 2L * d * (d - 1) * 2L * n * pw(side, d - 2) : 0;
  return inner + spokes + faces;
}

inline long box_vertex_count(int d, int n) {
  long inner = 1, face = 1;
  for (int i = 0; i < d; ++i) inner *= 2 * n + 1;
  for (int i = 0; i < d - 1; ++i) face *= 2 * n + 1;
  return inner + 2L * d * face;
}

}  // namespace dacq::testkit
