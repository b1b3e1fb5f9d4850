#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <json.hpp>

#include "fkflow/partition.hpp"
#include "fkflow/weights.hpp"

namespace fkflow {

struct CapacityError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Edge {
  int id;
  int u, v;
  double c;  // conductance, >= 0
};

// Weighted multigraph: parallel edges are kept as distinct entries so that
// per-original-edge erosion stays exact; the simple merged view is a
// projection (merge_parallel).  Edge ids are stable across erosion.
struct WeightedMultigraph {
  std::vector<int> vertices;
  std::vector<Edge> edges;

  void validate() const {
    std::set<int> vs(vertices.begin(), vertices.end());
    if (vs.size() != vertices.size()) throw std::invalid_argument("duplicate vertex ids");
    std::set<int> ids;
    for (const Edge& e : edges) {
      if (e.c < 0.0) throw std::invalid_argument("negative edge weight");
      if (e.u == e.v) throw std::invalid_argument("self-loops are not stored");
      if (!vs.count(e.u) || !vs.count(e.v)) throw std::invalid_argument("edge endpoint not a vertex");
      if (!ids.insert(e.id).second) throw std::invalid_argument("duplicate edge id");
    }
  }
};

struct SimpleWeightedGraph {
  std::vector<int> vertices;
  std::map<std::pair<int, int>, double> weights;  // key is ordered (min,max), c > 0

  double weight(int u, int v) const {
    auto it = weights.find(std::minmax(u, v));
    return it == weights.end() ? 0.0 : it->second;
  }
};

struct FKParameters {
  double q = 1.0;
  WeightConvention convention = WeightConvention::c;
};

inline SimpleWeightedGraph merge_parallel(const WeightedMultigraph& g) {
  SimpleWeightedGraph out;
  out.vertices = g.vertices;
  for (const Edge& e : g.edges) {
    if (e.c == 0.0) continue;
    out.weights[std::minmax(e.u, e.v)] += e.c;  // conductances add in parallel
  }
  std::erase_if(out.weights, [](const auto& kv) { return kv.second <= 0.0; });
  return out;
}

// Identify u and v (the merged vertex keeps id min(u,v)); edges between them
// become self-loops and are dropped.  Parallel edges to each third vertex are
// retained as separate entries.
inline WeightedMultigraph contract_edge(const WeightedMultigraph& g, int u, int v) {
  if (u == v) throw std::invalid_argument("cannot contract a vertex with itself");
  int keep = std::min(u, v), drop = std::max(u, v);
  bool seen_keep = false, seen_drop = false;
  WeightedMultigraph out;
  for (int x : g.vertices) {
    if (x == keep) seen_keep = true;
    if (x == drop) { seen_drop = true; continue; }
    out.vertices.push_back(x);
  }
  if (!seen_keep || !seen_drop) throw std::invalid_argument("contraction endpoint not present");
  for (Edge e : g.edges) {
    if (e.u == drop) e.u = keep;
    if (e.v == drop) e.v = keep;
    if (e.u == e.v) continue;
    out.edges.push_back(e);
  }
  return out;
}

// Weight erosion: e^{c_t} - 1 = e^{-t} (e^{c_0} - 1), applied per original edge.
inline double erode_c(double c0, double t) {
  return std::log1p(std::exp(-t) * std::expm1(c0));
}

inline WeightedMultigraph erode(const WeightedMultigraph& g, double t) {
  if (t < 0.0) throw std::domain_error("erosion time must be nonnegative");
  WeightedMultigraph out = g;
  for (Edge& e : out.edges) e.c = erode_c(e.c, t);
  return out;
}

inline SimpleWeightedGraph epsilon_skeleton(const SimpleWeightedGraph& g, double eps) {
  if (eps < 0.0) throw std::domain_error("eps must be nonnegative");
  SimpleWeightedGraph out;
  out.vertices = g.vertices;
  for (const auto& [uv, c] : g.weights)
    if (c > eps) out.weights[uv] = c;
  return out;
}

// ---- equivalence testing (weight-preserving vertex bijection) ----

namespace detail {
inline bool extend_mapping(const SimpleWeightedGraph& a, const SimpleWeightedGraph& b,
                           const std::vector<int>& av, const std::vector<int>& bv,
                           std::size_t pos, std::vector<int>& map_to,
                           std::vector<bool>& used, double tol) {
  if (pos == av.size()) return true;
  for (std::size_t j = 0; j < bv.size(); ++j) {
    if (used[j]) continue;
    bool ok = true;
    for (std::size_t i = 0; i < pos && ok; ++i) {
      double wa = a.weight(av[pos], av[i]);
      double wb = b.weight(bv[j], bv[map_to[i]]);
      ok = std::abs(wa - wb) <= tol;
    }
    if (!ok) continue;
    used[j] = true;
    map_to[pos] = static_cast<int>(j);
    if (extend_mapping(a, b, av, bv, pos + 1, map_to, used, tol)) return true;
    used[j] = false;
  }
  return false;
}
}  // namespace detail

struct EquivalenceResult {
  bool equivalent = false;
  std::map<int, int> bijection;  // vertex of g1 -> vertex of g2
};

inline EquivalenceResult are_equivalent(const SimpleWeightedGraph& g1,
                                        const SimpleWeightedGraph& g2,
                                        double tol = 1e-9,
                                        std::size_t max_vertices = 12) {
  if (g1.vertices.size() > max_vertices || g2.vertices.size() > max_vertices)
    throw CapacityError("equivalence testing capped at " + std::to_string(max_vertices) + " vertices");
  EquivalenceResult res;
  if (g1.vertices.size() != g2.vertices.size()) return res;

  // cheap refinement: per-vertex sorted incident-weight lists must match as multisets
  auto signature = [&](const SimpleWeightedGraph& g, int v) {
    std::vector<double> ws;
    for (const auto& [uv, c] : g.weights)
      if (uv.first == v || uv.second == v) ws.push_back(c);
    std::sort(ws.begin(), ws.end());
    return ws;
  };
  auto degrees = [&](const SimpleWeightedGraph& g) {
    std::vector<std::size_t> d;
    for (int v : g.vertices) d.push_back(signature(g, v).size());
    std::sort(d.begin(), d.end());
    return d;
  };
  if (degrees(g1) != degrees(g2)) return res;

  std::vector<int> av = g1.vertices, bv = g2.vertices;
  // order g1 vertices by decreasing degree to fail fast
  std::sort(av.begin(), av.end(), [&](int x, int y) {
    return signature(g1, x).size() > signature(g1, y).size();
  });
  std::vector<int> map_to(av.size(), -1);
  std::vector<bool> used(bv.size(), false);
  if (!detail::extend_mapping(g1, g2, av, bv, 0, map_to, used, tol)) return res;
  res.equivalent = true;
  for (std::size_t i = 0; i < av.size(); ++i) res.bijection[av[i]] = bv[map_to[i]];
  return res;
}

// ---- generators ----

inline WeightedMultigraph make_complete(int n, double c) {
  WeightedMultigraph g;
  for (int i = 0; i < n; ++i) g.vertices.push_back(i);
  int id = 0;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) g.edges.push_back({id++, i, j, c});
  return g;
}

inline WeightedMultigraph make_path(int n, double c) {
  WeightedMultigraph g;
  for (int i = 0; i < n; ++i) g.vertices.push_back(i);
  for (int i = 0; i + 1 < n; ++i) g.edges.push_back({i, i, i + 1, c});
  return g;
}

inline WeightedMultigraph make_cycle(int n, double c) {
  if (n < 3) throw std::invalid_argument("cycle needs at least 3 vertices");
  WeightedMultigraph g = make_path(n, c);
  g.edges.push_back({n - 1, n - 1, 0, c});
  return g;
}

// d-dimensional torus with side L: L^d vertices, d*L^d edges (L=2 gives
// parallel pairs, which the multigraph keeps).
inline WeightedMultigraph make_torus(int d, int L, double c) {
  if (d < 1 || L < 2) throw std::invalid_argument("torus needs d >= 1 and L >= 2");
  int n = 1;
  for (int k = 0; k < d; ++k) n *= L;
  WeightedMultigraph g;
  for (int i = 0; i < n; ++i) g.vertices.push_back(i);
  int id = 0;
  for (int i = 0; i < n; ++i) {
    int rem = i, stride = 1;
    for (int k = 0; k < d; ++k) {
      int coord = rem % L;
      rem /= L;
      int j = i + ((coord + 1) % L - coord) * stride;
      g.edges.push_back({id++, i, j, c});
      stride *= L;
    }
  }
  return g;
}

// ---- JSON file format ----
// {"vertices":[int,...], "edges":[{"u":int,"v":int,"c":float},...]};
// duplicate (u,v) entries denote parallel edges.

inline nlohmann::json to_json(const WeightedMultigraph& g) {
  nlohmann::json j;
  j["vertices"] = g.vertices;
  j["edges"] = nlohmann::json::array();
  for (const Edge& e : g.edges) j["edges"].push_back({{"u", e.u}, {"v", e.v}, {"c", e.c}});
  return j;
}

inline WeightedMultigraph graph_from_json(const nlohmann::json& j) {
  WeightedMultigraph g;
  g.vertices = j.at("vertices").get<std::vector<int>>();
  int id = 0;
  for (const auto& ej : j.at("edges"))
    g.edges.push_back({id++, ej.at("u").get<int>(), ej.at("v").get<int>(), ej.at("c").get<double>()});
  g.validate();
  return g;
}

inline WeightedMultigraph load_graph(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open graph file: " + path);
  nlohmann::json j;
  in >> j;
  return graph_from_json(j);
}

inline void save_graph(const WeightedMultigraph& g, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open output file: " + path);
  out << to_json(g).dump(2) << "\n";
}

// FNV-1a over the canonical serialization; used to tie trajectory files to
// their input graph.
inline std::string graph_hash(const WeightedMultigraph& g) {
  std::uint64_t h = 1469598103934665603ull;
  auto mix = [&](const void* data, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= p[i];
      h *= 1099511628211ull;
    }
  };
  for (int v : g.vertices) mix(&v, sizeof v);
  for (const Edge& e : g.edges) {
    mix(&e.u, sizeof e.u);
    mix(&e.v, sizeof e.v);
    mix(&e.c, sizeof e.c);
  }
  std::ostringstream os;
  os << std::hex << h;
  return os.str();
}

// Generator descriptor: "torus:d,L", "complete:n", "path:n", "cycle:n",
// "file:path" (or a bare path to a JSON file).  The weight c applies to every
// generated edge; file graphs carry their own weights.
inline WeightedMultigraph generate(const std::string& spec, double c = 0.0) {
  auto colon = spec.find(':');
  std::string name = spec.substr(0, colon);
  std::string args = colon == std::string::npos ? "" : spec.substr(colon + 1);
  auto ints = [&]() {
    std::vector<int> out;
    std::stringstream ss(args);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
      try {
        out.push_back(std::stoi(tok));
      } catch (const std::exception&) {
        throw std::invalid_argument("malformed graph spec: " + spec);
      }
    }
    return out;
  };
  if (name == "torus") {
    auto v = ints();
    if (v.size() != 2) throw std::invalid_argument("torus spec needs d,L");
    return make_torus(v[0], v[1], c);
  }
  if (name == "complete") {
    auto v = ints();
    if (v.size() != 1) throw std::invalid_argument("complete spec needs n");
    return make_complete(v[0], c);
  }
  if (name == "path") {
    auto v = ints();
    if (v.size() != 1) throw std::invalid_argument("path spec needs n");
    return make_path(v[0], c);
  }
  if (name == "cycle") {
    auto v = ints();
    if (v.size() != 1) throw std::invalid_argument("cycle spec needs n");
    return make_cycle(v[0], c);
  }
  if (name == "file") return load_graph(args);
  if (spec.find('.') != std::string::npos || spec.find('/') != std::string::npos)
    return load_graph(spec);
  throw std::invalid_argument("unknown graph spec: " + spec);
}

}  // namespace fkflow
