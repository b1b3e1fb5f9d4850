#pragma once

#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <sstream>
#include <string>
#include <type_traits>
#include <unordered_map>
#include <vector>

#include "fkflow/graph.hpp"
#include "fkflow/rng.hpp"

namespace fkflow {

// Enumeration works on a normalized view: vertices are indices 0..n-1 and
// each edge carries its odds pi = e^c - 1.  Scalar T is double (default) or
// an exact rational type (used by the decomposition validator).
template <class T>
struct EdgeSystem {
  int n_vertices = 0;
  std::vector<std::array<int, 2>> ends;
  std::vector<T> odds;
  std::vector<int> vertex_ids;  // index -> original id (empty when synthetic)

  std::size_t edge_count() const { return ends.size(); }
};

struct OracleLimits {
  std::size_t max_edges = 24;
  std::size_t max_vertices = 14;
};

template <class T>
inline void check_capacity(const EdgeSystem<T>& sys, const OracleLimits& lim = {}) {
  if (sys.edge_count() > lim.max_edges)
    throw CapacityError("enumeration capped at " + std::to_string(lim.max_edges) + " edges");
  if (static_cast<std::size_t>(sys.n_vertices) > lim.max_vertices)
    throw CapacityError("enumeration capped at " + std::to_string(lim.max_vertices) + " vertices");
}

inline EdgeSystem<double> edge_system(const WeightedMultigraph& g) {
  EdgeSystem<double> sys;
  std::unordered_map<int, int> index;
  for (int v : g.vertices) {
    index[v] = sys.n_vertices++;
    sys.vertex_ids.push_back(v);
  }
  for (const Edge& e : g.edges) {
    sys.ends.push_back({index.at(e.u), index.at(e.v)});
    sys.odds.push_back(std::expm1(e.c));
  }
  return sys;
}

namespace detail {

// flat union-find for enumeration inner loops
struct FlatUF {
  std::array<int, 32> parent;
  int count;

  void reset(int n) {
    count = n;
    for (int i = 0; i < n; ++i) parent[i] = i;
  }
  int find(int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  void merge(int a, int b) {
    a = find(a);
    b = find(b);
    if (a != b) {
      parent[b] = a;
      --count;
    }
  }
};

template <class T>
inline T pow_nonneg(const T& base, int k) {
  T out(1);
  for (int i = 0; i < k; ++i) out = out * base;
  return out;
}

}  // namespace detail

template <class T>
inline int cluster_count(const EdgeSystem<T>& sys, std::uint32_t mask) {
  detail::FlatUF uf;
  uf.reset(sys.n_vertices);
  for (std::size_t e = 0; e < sys.ends.size(); ++e)
    if (mask & (1u << e)) uf.merge(sys.ends[e][0], sys.ends[e][1]);
  return uf.count;
}

template <class T>
struct ExactDistribution {
  std::vector<T> weight;  // indexed by configuration bitmask
  T Z;

  T probability(std::uint32_t mask) const { return weight[mask] / Z; }
};

// Full distribution by enumeration of all 2^|E| configurations:
// weight(w) = q^{k(w)} * prod_{open e} pi_e.
template <class T>
inline ExactDistribution<T> enumerate_distribution(const EdgeSystem<T>& sys, const T& q,
                                                   const OracleLimits& lim = {}) {
  check_capacity(sys, lim);
  const std::size_t E = sys.edge_count();
  std::vector<T> qpow(sys.n_vertices + 1);
  qpow[0] = T(1);
  for (int k = 1; k <= sys.n_vertices; ++k) qpow[k] = qpow[k - 1] * q;

  ExactDistribution<T> dist;
  dist.weight.resize(std::size_t(1) << E);
  dist.Z = T(0);
  for (std::uint32_t mask = 0; mask < (1u << E); ++mask) {
    T w = qpow[cluster_count(sys, mask)];
    for (std::size_t e = 0; e < E; ++e)
      if (mask & (1u << e)) w = w * sys.odds[e];
    dist.weight[mask] = w;
    dist.Z = dist.Z + w;
  }
  return dist;
}

template <class T>
inline T partition_function(const EdgeSystem<T>& sys, const T& q, const OracleLimits& lim = {}) {
  check_capacity(sys, lim);
  const std::size_t E = sys.edge_count();
  std::vector<T> qpow(sys.n_vertices + 1);
  qpow[0] = T(1);
  for (int k = 1; k <= sys.n_vertices; ++k) qpow[k] = qpow[k - 1] * q;
  T Z(0);
  for (std::uint32_t mask = 0; mask < (1u << E); ++mask) {
    T w = qpow[cluster_count(sys, mask)];
    for (std::size_t e = 0; e < E; ++e)
      if (mask & (1u << e)) w = w * sys.odds[e];
    Z = Z + w;
  }
  return Z;
}

inline double partition_function(const WeightedMultigraph& g, double q,
                                 const OracleLimits& lim = {}) {
  if (q <= 0.0) throw std::domain_error("q must be positive");
  return partition_function(edge_system(g), q, lim);
}

namespace detail {

// Z via the deletion-contraction recursion Z_G = Z_{G\e} + pi_e * Z_{G/e};
// contracting can turn parallel edges into self-loops, which factor out as
// (1 + pi).  Isolated vertices contribute a factor q each.
template <class T>
T dc_recurse(std::vector<std::array<int, 2>> ends, std::vector<T> odds, int nv, const T& q,
             std::unordered_map<std::string, T>* cache) {
  T loop_factor(1);
  for (std::size_t e = 0; e < ends.size();) {
    if (ends[e][0] == ends[e][1]) {
      loop_factor = loop_factor * (T(1) + odds[e]);
      ends.erase(ends.begin() + e);
      odds.erase(odds.begin() + e);
    } else {
      ++e;
    }
  }
  if (ends.empty()) return loop_factor * pow_nonneg(q, nv);

  std::string key;
  if (cache) {
    // canonical-ish key: vertices relabeled by first occurrence in edge order
    std::vector<int> relabel(nv, -1);
    int next = 0;
    std::ostringstream os;
    os << nv << ';';
    for (std::size_t e = 0; e < ends.size(); ++e) {
      for (int s : {0, 1})
        if (relabel[ends[e][s]] < 0) relabel[ends[e][s]] = next++;
      int a = relabel[ends[e][0]], b = relabel[ends[e][1]];
      os << std::min(a, b) << ',' << std::max(a, b) << ':';
      if constexpr (std::is_same_v<T, double>) os << odds[e] << '|';
    }
    key = os.str();
    if (auto it = cache->find(key); it != cache->end()) return loop_factor * it->second;
  }

  auto pick = ends.back();
  T pi = odds.back();
  ends.pop_back();
  odds.pop_back();

  T z_del = dc_recurse(ends, odds, nv, q, cache);

  // contract pick: relabel the larger endpoint to the smaller, compress ids
  int keep = std::min(pick[0], pick[1]), drop = std::max(pick[0], pick[1]);
  for (auto& e : ends)
    for (int s : {0, 1}) {
      if (e[s] == drop) e[s] = keep;
      if (e[s] > drop) --e[s];
    }
  T z_con = dc_recurse(std::move(ends), std::move(odds), nv - 1, q, cache);

  T z = z_del + pi * z_con;
  if (cache && cache->size() < (std::size_t(1) << 20)) (*cache)[key] = z;
  return loop_factor * z;
}

}  // namespace detail

template <class T>
inline T deletion_contraction_Z(const EdgeSystem<T>& sys, const T& q, const OracleLimits& lim = {}) {
  check_capacity(sys, lim);
  std::unordered_map<std::string, T> cache;
  return detail::dc_recurse(sys.ends, sys.odds, sys.n_vertices, q,
                            std::is_same_v<T, double> ? &cache : nullptr);
}

inline double deletion_contraction_Z(const WeightedMultigraph& g, double q,
                                     const OracleLimits& lim = {}) {
  if (q <= 0.0) throw std::domain_error("q must be positive");
  return deletion_contraction_Z(edge_system(g), q, lim);
}

template <class T>
inline T edge_marginal(const EdgeSystem<T>& sys, const T& q, std::size_t edge_index,
                       const OracleLimits& lim = {}) {
  if (edge_index >= sys.edge_count()) throw std::out_of_range("unknown edge");
  auto dist = enumerate_distribution(sys, q, lim);
  T open_weight(0);
  for (std::uint32_t mask = 0; mask < dist.weight.size(); ++mask)
    if (mask & (1u << edge_index)) open_weight = open_weight + dist.weight[mask];
  return open_weight / dist.Z;
}

inline double edge_marginal(const WeightedMultigraph& g, double q, int edge_id,
                            const OracleLimits& lim = {}) {
  auto sys = edge_system(g);
  for (std::size_t i = 0; i < g.edges.size(); ++i)
    if (g.edges[i].id == edge_id) return edge_marginal(sys, q, i, lim);
  throw std::out_of_range("unknown edge id");
}

// Exact sampling by sequential conditioning: fix edges one by one, each with
// its constrained-partition-function marginal.
inline std::uint32_t exact_sample(const EdgeSystem<double>& sys, double q, Rng& rng,
                                  const OracleLimits& lim = {}) {
  check_capacity(sys, lim);
  const std::size_t E = sys.edge_count();
  std::vector<double> qpow(sys.n_vertices + 1);
  qpow[0] = 1.0;
  for (int k = 1; k <= sys.n_vertices; ++k) qpow[k] = qpow[k - 1] * q;

  std::uint32_t forced_open = 0, forced_closed = 0;
  for (std::size_t target = 0; target < E; ++target) {
    double tot = 0.0, open_tot = 0.0;
    std::uint32_t free_mask = ~(forced_open | forced_closed) & ((1u << E) - 1);
    // iterate submasks of the free edges
    std::uint32_t sub = free_mask;
    while (true) {
      std::uint32_t mask = forced_open | sub;
      double w = qpow[cluster_count(sys, mask)];
      for (std::size_t e = 0; e < E; ++e)
        if (mask & (1u << e)) w *= sys.odds[e];
      tot += w;
      if (mask & (1u << target)) open_tot += w;
      if (sub == 0) break;
      sub = (sub - 1) & free_mask;
    }
    if (uniform01(rng) < open_tot / tot)
      forced_open |= 1u << target;
    else
      forced_closed |= 1u << target;
  }
  return forced_open;
}

inline double fkg_covariance(const EdgeSystem<double>& sys, double q, std::size_t e,
                             std::size_t f, const OracleLimits& lim = {}) {
  auto dist = enumerate_distribution(sys, q, lim);
  double pe = 0.0, pf = 0.0, pef = 0.0;
  for (std::uint32_t mask = 0; mask < dist.weight.size(); ++mask) {
    double p = dist.weight[mask] / dist.Z;
    if (mask & (1u << e)) pe += p;
    if (mask & (1u << f)) pf += p;
    if ((mask & (1u << e)) && (mask & (1u << f))) pef += p;
  }
  return pef - pe * pf;
}

// P(no cluster merge by time t) for the coupled flow started from a graph
// without self-loops: the first ring of any open edge is a merge, so
// P(T1 > t) = E[e^{-t o(w)}].
inline double survival_exact(const WeightedMultigraph& g, double q, double t,
                             const OracleLimits& lim = {}) {
  if (t < 0.0) throw std::domain_error("t must be nonnegative");
  auto sys = edge_system(g);
  auto dist = enumerate_distribution(sys, q, lim);
  double s = 0.0;
  for (std::uint32_t mask = 0; mask < dist.weight.size(); ++mask)
    s += dist.weight[mask] / dist.Z * std::exp(-t * std::popcount(mask));
  return s;
}

// Total collapse hazard at time t: sum over edges of the FK marginal on the
// graph with eroded odds pi_e e^{-t}.  Equals -d/dt log E[e^{-t o(w)}].
inline double hazard_exact(const WeightedMultigraph& g, double q, double t,
                           const OracleLimits& lim = {}) {
  auto sys = edge_system(g);
  double decay = std::exp(-t);
  for (auto& pi : sys.odds) pi *= decay;
  auto dist = enumerate_distribution(sys, q, lim);
  double total = 0.0;
  for (std::size_t e = 0; e < sys.edge_count(); ++e) {
    double open_weight = 0.0;
    for (std::uint32_t mask = 0; mask < dist.weight.size(); ++mask)
      if (mask & (1u << e)) open_weight += dist.weight[mask];
    total += open_weight / dist.Z;
  }
  return total;
}

// ---- decomposition lemma validator ----
//
// Sample w ~ FK, alpha-thin its open edges to get v <= w.  Conditionally on
// v, the restriction of w to edges joining distinct v-clusters must be FK on
// the collapsed graph with odds pi (1-alpha).  Checked by exact enumeration
// of the joint law; in rational arithmetic the total-variation distance is
// exactly zero when the identity holds.

struct DecompositionReport {
  double max_total_variation = 0.0;
  std::size_t conditionals_checked = 0;
  bool marginal_identity_ok = true;  // P(v(e)=1) == alpha P(w(e)=1)
};

template <class T>
inline DecompositionReport validate_decomposition(const EdgeSystem<T>& sys, const T& q,
                                                  const T& alpha, const OracleLimits& lim = {}) {
  check_capacity(sys, lim);
  const std::size_t E = sys.edge_count();
  std::vector<T> qpow(sys.n_vertices + 1);
  qpow[0] = T(1);
  for (int k = 1; k <= sys.n_vertices; ++k) qpow[k] = qpow[k - 1] * q;
  const T one(1);
  const T keep = alpha, lose = one - alpha;

  // joint[v] accumulates, per restricted remainder configuration, the joint
  // weight; remainder configurations are keyed by the mask over the edges
  // still joining distinct v-clusters.
  std::map<std::uint32_t, std::map<std::uint32_t, T>> joint;
  std::map<std::uint32_t, T> v_total;
  std::vector<T> w_edge_marginal(E, T(0)), v_edge_marginal(E, T(0));
  T Z(0);

  for (std::uint32_t w = 0; w < (1u << E); ++w) {
    T ww = qpow[cluster_count(sys, w)];
    for (std::size_t e = 0; e < E; ++e)
      if (w & (1u << e)) ww = ww * sys.odds[e];
    Z = Z + ww;
    for (std::size_t e = 0; e < E; ++e)
      if (w & (1u << e)) w_edge_marginal[e] = w_edge_marginal[e] + ww;

    // all thinnings v of w
    std::uint32_t v = w;
    while (true) {
      int ov = std::popcount(v), ow = std::popcount(w);
      T jw = ww * detail::pow_nonneg(keep, ov) * detail::pow_nonneg(lose, ow - ov);

      detail::FlatUF uf;
      uf.reset(sys.n_vertices);
      for (std::size_t e = 0; e < E; ++e)
        if (v & (1u << e)) uf.merge(sys.ends[e][0], sys.ends[e][1]);
      std::uint32_t rest = 0;
      std::uint32_t remainder_mask = (w & ~v);
      std::uint32_t restricted = 0;
      int bit = 0;
      for (std::size_t e = 0; e < E; ++e) {
        if (v & (1u << e)) continue;
        if (uf.find(sys.ends[e][0]) == uf.find(sys.ends[e][1])) continue;  // internal to a cluster
        rest |= 1u << e;
        if (remainder_mask & (1u << e)) restricted |= 1u << bit;
        ++bit;
      }
      (void)rest;
      joint[v][restricted] = joint[v].count(restricted) ? joint[v][restricted] + jw : jw;
      v_total[v] = v_total.count(v) ? v_total[v] + jw : jw;
      for (std::size_t e = 0; e < E; ++e)
        if (v & (1u << e)) v_edge_marginal[e] = v_edge_marginal[e] + jw;

      if (v == 0) break;
      v = (v - 1) & w;
    }
  }

  DecompositionReport report;
  for (std::size_t e = 0; e < E; ++e)
    if (v_edge_marginal[e] != alpha * w_edge_marginal[e]) report.marginal_identity_ok = false;

  for (const auto& [v, conds] : joint) {
    // rebuild the collapsed system for this v
    detail::FlatUF uf;
    uf.reset(sys.n_vertices);
    for (std::size_t e = 0; e < E; ++e)
      if (v & (1u << e)) uf.merge(sys.ends[e][0], sys.ends[e][1]);
    std::vector<int> rep_index(sys.n_vertices, -1);
    int m = 0;
    for (int x = 0; x < sys.n_vertices; ++x)
      if (uf.find(x) == x) rep_index[x] = m++;
    EdgeSystem<T> collapsed;
    collapsed.n_vertices = m;
    for (std::size_t e = 0; e < E; ++e) {
      if (v & (1u << e)) continue;
      int a = uf.find(sys.ends[e][0]), b = uf.find(sys.ends[e][1]);
      if (a == b) continue;
      collapsed.ends.push_back({rep_index[a], rep_index[b]});
      collapsed.odds.push_back(sys.odds[e] * (one - alpha));
    }
    auto fk = enumerate_distribution(collapsed, q, lim);

    const T& tot = v_total.at(v);
    T tv(0);
    for (std::uint32_t sub = 0; sub < (1u << collapsed.edge_count()); ++sub) {
      T lhs = conds.count(sub) ? conds.at(sub) / tot : T(0);
      T rhs = fk.weight[sub] / fk.Z;
      T diff = lhs > rhs ? lhs - rhs : rhs - lhs;
      tv = tv + diff;
    }
    double tvd = static_cast<double>(tv) / 2.0;
    report.max_total_variation = std::max(report.max_total_variation, tvd);
    ++report.conditionals_checked;
  }
  return report;
}

}  // namespace fkflow
