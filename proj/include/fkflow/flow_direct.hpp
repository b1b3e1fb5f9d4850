#pragma once

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "fkflow/graph.hpp"
#include "fkflow/oracle.hpp"
#include "fkflow/partition.hpp"
#include "fkflow/rng.hpp"
#include "fkflow/sampler.hpp"
#include "fkflow/trajectory.hpp"

namespace fkflow {

struct SamplerSpec {
  enum class Kind { exact, mcmc } kind = Kind::exact;
  long sweeps = 2000;
  long burn_in = 500;
  SweepKind sweep_kind = SweepKind::heat_bath;

  static SamplerSpec exact_oracle() { return SamplerSpec{}; }
  static SamplerSpec mcmc(long sweeps, SweepKind kind = SweepKind::heat_bath) {
    SamplerSpec s;
    s.kind = Kind::mcmc;
    s.sweeps = sweeps;
    s.burn_in = std::max<long>(100, sweeps / 4);
    s.sweep_kind = kind;
    return s;
  }
};

inline std::uint32_t draw_configuration(const EdgeSystem<double>& sys, double q,
                                        const SamplerSpec& sampler, Rng& rng) {
  if (sampler.kind == SamplerSpec::Kind::exact) return exact_sample(sys, q, rng);
  if (q < 1.0) throw std::domain_error("mcmc sampler requires q >= 1");
  return sample_after(sys, q, sampler.sweeps, sampler.burn_in, rng, sampler.sweep_kind).mask();
}

// Configurations with more than 32 edges bypass the bitmask path.
inline std::vector<std::uint8_t> draw_configuration_large(const EdgeSystem<double>& sys, double q,
                                                          const SamplerSpec& sampler, Rng& rng) {
  if (sampler.kind == SamplerSpec::Kind::exact && sys.edge_count() <= 24) {
    std::uint32_t mask = exact_sample(sys, q, rng);
    std::vector<std::uint8_t> open(sys.edge_count(), 0);
    for (std::size_t e = 0; e < sys.edge_count(); ++e) open[e] = (mask >> e) & 1;
    return open;
  }
  if (q == 1.0) {
    // independent percolation, no chain needed
    std::vector<std::uint8_t> open(sys.edge_count(), 0);
    for (std::size_t e = 0; e < sys.edge_count(); ++e)
      open[e] = uniform01(rng) < sys.odds[e] / (1.0 + sys.odds[e]) ? 1 : 0;
    return open;
  }
  if (q < 1.0) throw std::domain_error("mcmc sampler requires q >= 1");
  return sample_after(sys, q, sampler.sweeps, sampler.burn_in, rng, sampler.sweep_kind).open;
}

// The coupling construction: sample w from the FK measure, attach an
// independent Exp(1) clock to every open edge, and replay openings in time
// order.  Closed edges never fire.
inline FlowTrajectory flow_direct(const WeightedMultigraph& g, double q,
                                  const SamplerSpec& sampler, Rng& rng,
                                  std::uint64_t seed_label = 0) {
  auto sys = edge_system(g);
  std::vector<std::uint8_t> open = draw_configuration_large(sys, q, sampler, rng);

  struct Ring {
    double t;
    std::size_t edge_index;
  };
  std::vector<Ring> rings;
  for (std::size_t e = 0; e < sys.edge_count(); ++e)
    if (open[e]) rings.push_back({exponential1(rng), e});
  std::sort(rings.begin(), rings.end(), [&](const Ring& a, const Ring& b) {
    if (a.t != b.t) return a.t < b.t;
    return g.edges[a.edge_index].id < g.edges[b.edge_index].id;  // tie-break for replay determinism
  });

  FlowTrajectory traj;
  traj.initial = g;
  traj.q = q;
  traj.seed = seed_label;
  traj.mode = "direct";
  ClusterPartition part(g.vertices);
  for (const Ring& r : rings) {
    const Edge& e = g.edges[r.edge_index];
    FlowEvent ev;
    ev.time = r.t;
    ev.edge_id = e.id;
    ev.u = e.u;
    ev.v = e.v;
    ev.cluster_a = part.find(e.u);
    ev.cluster_b = part.find(e.v);
    ev.collapse = part.merge(e.u, e.v);
    ev.new_cluster = part.find(e.u);
    ev.clusters_after = part.cluster_count();
    traj.events.push_back(ev);
  }
  return traj;
}

enum class StateConvention { exact, paper };

// Collapsed weighted graph W_t seen by the flow at time t.
//
// exact:  clusters of w_t, with merged weight between clusters C,C' equal to
//         sum over joining original edges of log(1 + pi_e e^{-t}) (per-edge
//         erosion first, parallel sum second; law-correct by the
//         decomposition identity).
// paper:  the literal simple-graph rules: merge weights by the c-sum rule at
//         each collapse time and erode the merged quantities between jumps.
inline SimpleWeightedGraph state_at(const FlowTrajectory& traj, double t,
                                    StateConvention convention = StateConvention::exact) {
  if (t < 0.0) throw std::domain_error("t must be nonnegative");

  if (convention == StateConvention::exact) {
    ClusterPartition part(traj.initial.vertices);
    for (const FlowEvent& ev : traj.events)
      if (ev.collapse && ev.time <= t) part.merge(ev.u, ev.v);
    SimpleWeightedGraph out;
    out.vertices = part.representatives();
    std::sort(out.vertices.begin(), out.vertices.end());
    for (const Edge& e : traj.initial.edges) {
      int a = part.find(e.u), b = part.find(e.v);
      if (a == b) continue;
      double pi_t = std::expm1(e.c) * std::exp(-t);
      out.weights[std::minmax(a, b)] += std::log1p(pi_t);
    }
    std::erase_if(out.weights, [](const auto& kv) { return kv.second <= 0.0; });
    return out;
  }

  // paper convention: replay with merged-weight erosion
  ClusterPartition part(traj.initial.vertices);
  std::map<std::pair<int, int>, double> pi;  // cluster-rep pair -> merged odds
  for (const auto& [uv, c] : merge_parallel(traj.initial).weights)
    pi[uv] = std::expm1(c);
  double now = 0.0;
  auto erode_to = [&](double when) {
    double f = std::exp(-(when - now));
    for (auto& [uv, w] : pi) w *= f;
    now = when;
  };
  for (const FlowEvent& ev : traj.events) {
    if (!ev.collapse || ev.time > t) continue;
    erode_to(ev.time);
    int a = part.find(ev.u), b = part.find(ev.v);
    part.merge(ev.u, ev.v);
    int keep = part.find(ev.u);
    std::map<std::pair<int, int>, double> next;
    for (const auto& [uv, w] : pi) {
      auto [x, y] = uv;
      if ((x == a && y == b) || (x == b && y == a)) continue;  // collapsed edge vanishes
      if (x == a || x == b) x = keep;
      if (y == a || y == b) y = keep;
      if (x == y) continue;
      auto key = std::minmax(x, y);
      // c-sum rule: conductances add, so 1+pi multiplies
      if (next.count(key))
        next[key] = (1.0 + next[key]) * (1.0 + w) - 1.0;
      else
        next[key] = w;
    }
    pi = std::move(next);
  }
  erode_to(t);
  SimpleWeightedGraph out;
  out.vertices = part.representatives();
  std::sort(out.vertices.begin(), out.vertices.end());
  for (const auto& [uv, w] : pi)
    if (w > 0.0) out.weights[uv] = std::log1p(w);
  return out;
}

// Ordered sequence of cluster-pair merges, ignoring times; cluster labels are
// the smallest original vertex id they contain, so the key is invariant
// across simulators.
inline std::string skeleton_key(const FlowTrajectory& traj) {
  std::ostringstream os;
  for (const FlowEvent& ev : traj.events) {
    if (!ev.collapse) continue;
    os << std::min(ev.cluster_a, ev.cluster_b) << '-' << std::max(ev.cluster_a, ev.cluster_b)
       << ';';
  }
  return os.str();
}

}  // namespace fkflow
