#pragma once

#include <cassert>
#include <cmath>
#include <cstdint>
#include <queue>
#include <stdexcept>
#include <vector>

#include "fkflow/graph.hpp"
#include "fkflow/oracle.hpp"
#include "fkflow/rng.hpp"

namespace fkflow {

// Markov-chain state for the random-cluster measure.  Free boundary, started
// from all edges closed.
struct ChainState {
  std::vector<std::uint8_t> open;  // per edge index
  long sweeps = 0;

  std::uint32_t mask() const {
    std::uint32_t m = 0;
    for (std::size_t e = 0; e < open.size(); ++e)
      if (open[e]) m |= 1u << e;
    return m;
  }
};

struct MarginalEstimate {
  double mean = 0.0;
  double standard_error = 0.0;
  double effective_samples = 0.0;
};

namespace detail {

// endpoints connected in w \ {skip}?  BFS; adequate at desk scale, the
// interface is the seam for a dynamic-connectivity replacement.
inline bool connected_without(const EdgeSystem<double>& sys, const std::vector<std::uint8_t>& open,
                              std::size_t skip) {
  int src = sys.ends[skip][0], dst = sys.ends[skip][1];
  std::vector<std::vector<int>> adj(sys.n_vertices);
  for (std::size_t e = 0; e < sys.ends.size(); ++e) {
    if (e == skip || !open[e]) continue;
    adj[sys.ends[e][0]].push_back(sys.ends[e][1]);
    adj[sys.ends[e][1]].push_back(sys.ends[e][0]);
  }
  std::vector<std::uint8_t> seen(sys.n_vertices, 0);
  std::queue<int> q;
  q.push(src);
  seen[src] = 1;
  while (!q.empty()) {
    int x = q.front();
    q.pop();
    if (x == dst) return true;
    for (int y : adj[x])
      if (!seen[y]) {
        seen[y] = 1;
        q.push(y);
      }
  }
  return false;
}

inline std::vector<int> cluster_labels(const EdgeSystem<double>& sys,
                                       const std::vector<std::uint8_t>& open) {
  std::vector<int> parent(sys.n_vertices);
  for (int i = 0; i < sys.n_vertices; ++i) parent[i] = i;
  auto find = [&](int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (std::size_t e = 0; e < sys.ends.size(); ++e)
    if (open[e]) {
      int a = find(sys.ends[e][0]), b = find(sys.ends[e][1]);
      if (a != b) parent[b] = a;
    }
  std::vector<int> label(sys.n_vertices);
  for (int i = 0; i < sys.n_vertices; ++i) label[i] = find(i);
  return label;
}

}  // namespace detail

// Single heat-bath update of a uniformly chosen edge.  If the endpoints stay
// connected without the edge the conditional odds are pi:1, otherwise opening
// costs a cluster and the odds become pi:q.
inline void heat_bath_step(ChainState& state, const EdgeSystem<double>& sys, double q, Rng& rng) {
  if (q < 1.0) throw std::domain_error("heat-bath sampler exposed for q >= 1 only");
  std::size_t e = std::uniform_int_distribution<std::size_t>(0, sys.ends.size() - 1)(rng);
  double pi = sys.odds[e];
  double p_open = detail::connected_without(sys, state.open, e) ? pi / (1.0 + pi) : pi / (pi + q);
  state.open[e] = uniform01(rng) < p_open ? 1 : 0;
}

inline void heat_bath_sweep(ChainState& state, const EdgeSystem<double>& sys, double q, Rng& rng) {
  for (std::size_t i = 0; i < sys.ends.size(); ++i) heat_bath_step(state, sys, q, rng);
  ++state.sweeps;
}

// Swendsen-Wang sweep for integer q >= 2 (q = 1 degenerates to independent
// resampling): color the current clusters uniformly, then resample every
// monochromatic edge open with probability p_e.
inline void sw_sweep(ChainState& state, const EdgeSystem<double>& sys, int q, Rng& rng) {
  if (q < 1) throw std::domain_error("sw_sweep needs integer q >= 1");
  auto label = detail::cluster_labels(sys, state.open);
  std::vector<int> color(sys.n_vertices);
  std::uniform_int_distribution<int> col(1, q);
  for (int i = 0; i < sys.n_vertices; ++i) color[i] = col(rng);
  for (std::size_t e = 0; e < sys.ends.size(); ++e) {
    int a = sys.ends[e][0], b = sys.ends[e][1];
    if (color[label[a]] == color[label[b]]) {
      double p = sys.odds[e] / (1.0 + sys.odds[e]);
      state.open[e] = uniform01(rng) < p ? 1 : 0;
    } else {
      state.open[e] = 0;
    }
  }
  ++state.sweeps;
}

enum class SweepKind { heat_bath, swendsen_wang };

inline ChainState fresh_chain(const EdgeSystem<double>& sys) {
  ChainState st;
  st.open.assign(sys.ends.size(), 0);
  return st;
}

inline void run_sweeps(ChainState& state, const EdgeSystem<double>& sys, double q, long sweeps,
                       SweepKind kind, Rng& rng) {
  if (kind == SweepKind::swendsen_wang) {
    double qi;
    if (std::modf(q, &qi) != 0.0) throw std::domain_error("swendsen_wang needs integer q");
    for (long s = 0; s < sweeps; ++s) sw_sweep(state, sys, static_cast<int>(qi), rng);
  } else {
    for (long s = 0; s < sweeps; ++s) heat_bath_sweep(state, sys, q, rng);
  }
}

inline ChainState sample_after(const EdgeSystem<double>& sys, double q, long sweeps, long burn_in,
                               Rng& rng, SweepKind kind = SweepKind::heat_bath) {
  ChainState st = fresh_chain(sys);
  run_sweeps(st, sys, q, burn_in + sweeps, kind, rng);
  return st;
}

// Batched-means marginal estimate for one edge.
inline MarginalEstimate estimate_marginal(const EdgeSystem<double>& sys, double q,
                                          std::size_t edge_index, long sweeps, Rng& rng,
                                          SweepKind kind = SweepKind::heat_bath,
                                          long burn_in = -1, int n_batches = 32) {
  if (edge_index >= sys.ends.size()) throw std::out_of_range("unknown edge");
  if (burn_in < 0) burn_in = std::max<long>(100, sweeps / 10);
  ChainState st = fresh_chain(sys);
  run_sweeps(st, sys, q, burn_in, kind, rng);

  long per_batch = std::max<long>(1, sweeps / n_batches);
  std::vector<double> batch_means;
  double grand = 0.0;
  long total = 0;
  for (int b = 0; b < n_batches; ++b) {
    long hits = 0;
    for (long s = 0; s < per_batch; ++s) {
      if (kind == SweepKind::swendsen_wang)
        sw_sweep(st, sys, static_cast<int>(q), rng);
      else
        heat_bath_sweep(st, sys, q, rng);
      hits += st.open[edge_index];
    }
    batch_means.push_back(double(hits) / per_batch);
    grand += hits;
    total += per_batch;
  }
  MarginalEstimate est;
  est.mean = grand / total;
  double var = 0.0;
  for (double m : batch_means) var += (m - est.mean) * (m - est.mean);
  var /= (batch_means.size() - 1);
  est.standard_error = std::sqrt(var / batch_means.size());
  double sample_var = est.mean * (1.0 - est.mean);
  est.effective_samples = est.standard_error > 0.0
                              ? sample_var / (est.standard_error * est.standard_error)
                              : double(total);
  return est;
}

}  // namespace fkflow
