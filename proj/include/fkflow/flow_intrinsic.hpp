#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "fkflow/flow_direct.hpp"
#include "fkflow/graph.hpp"
#include "fkflow/oracle.hpp"
#include "fkflow/partition.hpp"
#include "fkflow/rng.hpp"
#include "fkflow/sampler.hpp"
#include "fkflow/trajectory.hpp"

namespace fkflow {

// Intrinsic Markov construction: collapses happen as a non-homogeneous jump
// process whose per-edge rate is the FK marginal on the current eroded graph.
// Candidates come from the dominating q=1 process (per-edge hazard
// p_e(t) = pi_e e^{-t} / (1 + pi_e e^{-t}), marginal <= p for q >= 1) via
// closed-form hazard inversion, and are accepted with probability
// marginal / dominating hazard.  Rejections re-arm with fresh marks.
enum class IntrinsicMode { exact_rates, mcmc_rates, paper_simple };

inline const char* mode_name(IntrinsicMode m) {
  switch (m) {
    case IntrinsicMode::exact_rates: return "intrinsic-exact";
    case IntrinsicMode::mcmc_rates: return "intrinsic-mcmc";
    default: return "paper-simple";
  }
}

struct IntrinsicOptions {
  IntrinsicMode mode = IntrinsicMode::exact_rates;
  double t_max = std::numeric_limits<double>::infinity();
  long mcmc_sweeps = 4000;  // per marginal estimate in mcmc_rates mode
  double max_standard_error = 0.02;
};

namespace detail {

// Next arrival after time offset 0 of the dominating per-edge process with
// hazard pi e^{-s}/(1 + pi e^{-s}), where pi is the odds at the current time.
// Total remaining integrated hazard is log(1+pi); no arrival past that.
inline double dominating_arrival(double pi, Rng& rng) {
  if (pi <= 0.0) return std::numeric_limits<double>::infinity();
  double mark = exponential1(rng);
  double total = std::log1p(pi);
  if (mark >= total) return std::numeric_limits<double>::infinity();
  // invert log((1+pi)/(1+pi e^{-d})) = mark
  double a = (1.0 + pi) * std::exp(-mark) - 1.0;
  return std::log(pi / a);
}

inline double dominating_hazard(double pi_t) { return pi_t / (1.0 + pi_t); }

}  // namespace detail

inline FlowTrajectory flow_intrinsic(const WeightedMultigraph& g, double q,
                                     const IntrinsicOptions& opt, Rng& rng,
                                     std::uint64_t seed_label = 0) {
  if (q < 1.0) throw std::domain_error("q must be >= 1 for flow modes");

  FlowTrajectory traj;
  traj.initial = g;
  traj.q = q;
  traj.seed = seed_label;
  traj.mode = mode_name(opt.mode);

  ClusterPartition part(g.vertices);
  double now = 0.0;

  if (opt.mode == IntrinsicMode::paper_simple) {
    // merged simple-graph state: erode merged odds, c-sum collapse rule
    std::map<std::pair<int, int>, double> pi;  // odds at current time
    for (const auto& [uv, c] : merge_parallel(g).weights) pi[uv] = std::expm1(c);

    while (!pi.empty()) {
      double best = std::numeric_limits<double>::infinity();
      std::pair<int, int> best_edge{-1, -1};
      for (const auto& [uv, w] : pi) {
        double d = detail::dominating_arrival(w, rng);
        if (d < best) {
          best = d;
          best_edge = uv;
        }
      }
      if (!std::isfinite(best) || now + best > opt.t_max) break;
      double decay = std::exp(-best);
      for (auto& [uv, w] : pi) w *= decay;
      now += best;

      // marginal of the candidate edge on the merged graph at the candidate time
      EdgeSystem<double> sys;
      std::map<int, int> index;
      std::size_t cand = 0, i = 0;
      for (const auto& [uv, w] : pi) {
        for (int x : {uv.first, uv.second})
          if (!index.count(x)) {
            index[x] = sys.n_vertices++;
            sys.vertex_ids.push_back(x);
          }
        sys.ends.push_back({index[uv.first], index[uv.second]});
        sys.odds.push_back(w);
        if (uv == best_edge) cand = i;
        ++i;
      }
      double marg = edge_marginal(sys, q, cand);
      double accept = marg / detail::dominating_hazard(pi.at(best_edge));
      if (accept < -1e-12 || accept > 1.0 + 1e-9)
        throw std::logic_error("acceptance probability outside [0,1]");
      if (uniform01(rng) >= accept) continue;

      FlowEvent ev;
      ev.time = now;
      ev.edge_id = -1;
      ev.u = best_edge.first;
      ev.v = best_edge.second;
      ev.cluster_a = part.find(best_edge.first);
      ev.cluster_b = part.find(best_edge.second);
      ev.collapse = part.merge(best_edge.first, best_edge.second);
      ev.new_cluster = part.find(best_edge.first);
      ev.clusters_after = part.cluster_count();
      traj.events.push_back(ev);

      int a = best_edge.first, b = best_edge.second, keep = ev.new_cluster;
      std::map<std::pair<int, int>, double> next;
      for (const auto& [uv, w] : pi) {
        auto [x, y] = uv;
        if ((x == a && y == b) || (x == b && y == a)) continue;
        if (x == a || x == b) x = keep;
        if (y == a || y == b) y = keep;
        if (x == y) continue;
        auto key = std::minmax(x, y);
        if (next.count(key))
          next[key] = (1.0 + next[key]) * (1.0 + w) - 1.0;
        else
          next[key] = w;
      }
      pi = std::move(next);
    }
    return traj;
  }

  // exact_rates / mcmc_rates: multigraph state with per-original-edge weights,
  // erosion applied lazily through the global clock.
  std::vector<double> base_odds;
  for (const Edge& e : g.edges) base_odds.push_back(std::expm1(e.c));

  while (true) {
    double decay = std::exp(-now);
    double best = std::numeric_limits<double>::infinity();
    std::size_t best_edge = 0;
    for (std::size_t e = 0; e < g.edges.size(); ++e) {
      if (part.connected(g.edges[e].u, g.edges[e].v)) continue;
      double d = detail::dominating_arrival(base_odds[e] * decay, rng);
      if (d < best) {
        best = d;
        best_edge = e;
      }
    }
    if (!std::isfinite(best) || now + best > opt.t_max) break;
    now += best;
    decay = std::exp(-now);

    // collapsed multigraph of remaining edges at the candidate time
    EdgeSystem<double> sys;
    std::map<int, int> index;
    std::size_t cand = 0;
    for (std::size_t e = 0; e < g.edges.size(); ++e) {
      int a = part.find(g.edges[e].u), b = part.find(g.edges[e].v);
      if (a == b) continue;
      for (int x : {a, b})
        if (!index.count(x)) {
          index[x] = sys.n_vertices++;
          sys.vertex_ids.push_back(x);
        }
      if (e == best_edge) cand = sys.ends.size();
      sys.ends.push_back({index[a], index[b]});
      sys.odds.push_back(base_odds[e] * decay);
    }

    double marg;
    if (opt.mode == IntrinsicMode::exact_rates) {
      marg = edge_marginal(sys, q, cand);
    } else {
      auto est = estimate_marginal(sys, q, cand, opt.mcmc_sweeps, rng);
      if (est.standard_error > opt.max_standard_error)
        throw std::runtime_error("mcmc marginal estimate too noisy");
      marg = std::clamp(est.mean, 0.0, 1.0);
    }
    double accept = marg / detail::dominating_hazard(base_odds[best_edge] * decay);
    if (accept < -1e-12 || accept > 1.0 + 1e-9)
      throw std::logic_error("acceptance probability outside [0,1]");
    if (opt.mode == IntrinsicMode::mcmc_rates) accept = std::clamp(accept, 0.0, 1.0);
    if (uniform01(rng) >= accept) continue;

    const Edge& e = g.edges[best_edge];
    FlowEvent ev;
    ev.time = now;
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

// First-jump survival exp(-int_0^t total hazard) by adaptive quadrature.
// exact_rates integrates the multigraph hazard (must agree with
// survival_exact); paper_simple integrates the merged-graph hazard with the
// merged erosion law.
inline double survival_intrinsic(const WeightedMultigraph& g, double q, double t,
                                 IntrinsicMode mode = IntrinsicMode::exact_rates) {
  if (t < 0.0) throw std::domain_error("t must be nonnegative");
  if (t == 0.0) return 1.0;

  auto hazard = [&](double s) -> double {
    if (mode == IntrinsicMode::paper_simple) {
      SimpleWeightedGraph merged = merge_parallel(g);
      EdgeSystem<double> sys;
      std::map<int, int> index;
      for (const auto& [uv, c] : merged.weights) {
        for (int x : {uv.first, uv.second})
          if (!index.count(x)) index[x] = sys.n_vertices++;
        sys.ends.push_back({index[uv.first], index[uv.second]});
        sys.odds.push_back(std::expm1(c) * std::exp(-s));
      }
      double total = 0.0;
      for (std::size_t e = 0; e < sys.edge_count(); ++e) total += edge_marginal(sys, q, e);
      return total;
    }
    return hazard_exact(g, q, s);
  };

  double err;
  double integral = boost::math::quadrature::gauss_kronrod<double, 15>::integrate(
      hazard, 0.0, t, 10, 1e-10, &err);
  if (err > 1e-7) throw std::runtime_error("hazard quadrature did not converge");
  return std::exp(-integral);
}

}  // namespace fkflow
