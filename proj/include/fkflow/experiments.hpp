#pragma once

#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/multiprecision/cpp_int.hpp>

#include "fkflow/flow_direct.hpp"
#include "fkflow/flow_intrinsic.hpp"
#include "fkflow/oracle.hpp"
#include "fkflow/sampler.hpp"

namespace fkflow {

using Rational = boost::multiprecision::cpp_rational;

// ---- small utilities ----

inline std::string format_double(double x) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, x);  // shortest round-trip form
  return std::string(buf, res.ptr);
}

inline int worker_count() {
  if (const char* env = std::getenv("FKFLOW_THREADS")) {
    int n = std::atoi(env);
    if (n > 0) return n;
  }
  unsigned hw = std::thread::hardware_concurrency();
  return hw ? static_cast<int>(hw) : 1;
}

// Parallel replicate loop with per-replicate streams and slot-based results;
// aggregation order is independent of scheduling.
inline void parallel_replicates(long reps, const std::function<void(long)>& body) {
  int workers = std::min<long>(worker_count(), reps);
  if (workers <= 1) {
    for (long r = 0; r < reps; ++r) body(r);
    return;
  }
  std::atomic<long> next{0};
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (long r = next.fetch_add(1); r < reps; r = next.fetch_add(1)) body(r);
    });
  for (auto& t : pool) t.join();
}

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::string to_string() const {
    std::ostringstream os;
    for (std::size_t i = 0; i < header.size(); ++i) os << (i ? "," : "") << header[i];
    os << "\n";
    for (const auto& row : rows) {
      for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << row[i];
      os << "\n";
    }
    return os.str();
  }

  void save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << to_string();
  }
};

// minimal SVG polyline plot (one curve per series)
inline void save_svg_curves(const std::string& path, const std::string& title,
                            const std::vector<std::pair<std::string, std::vector<std::pair<double, double>>>>& series) {
  double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
  for (const auto& [name, pts] : series)
    for (auto [x, y] : pts) {
      xmin = std::min(xmin, x); xmax = std::max(xmax, x);
      ymin = std::min(ymin, y); ymax = std::max(ymax, y);
    }
  if (xmax <= xmin) xmax = xmin + 1;
  if (ymax <= ymin) ymax = ymin + 1;
  const int W = 640, H = 420, M = 50;
  auto X = [&](double x) { return M + (x - xmin) / (xmax - xmin) * (W - 2 * M); };
  auto Y = [&](double y) { return H - M - (y - ymin) / (ymax - ymin) * (H - 2 * M); };
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#8c564b", "#e377c2"};
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "<svg xmlns='http://www.w3.org/2000/svg' width='" << W << "' height='" << H << "'>\n"
      << "<rect width='100%' height='100%' fill='white'/>\n"
      << "<text x='" << W / 2 << "' y='20' text-anchor='middle'>" << title << "</text>\n";
  int ci = 0;
  for (const auto& [name, pts] : series) {
    out << "<polyline fill='none' stroke='" << colors[ci % 6] << "' points='";
    for (auto [x, y] : pts) out << X(x) << "," << Y(y) << " ";
    out << "'/>\n<text x='" << W - M + 4 << "' y='" << 40 + 16 * ci << "' fill='"
        << colors[ci % 6] << "' font-size='12'>" << name << "</text>\n";
    ++ci;
  }
  out << "</svg>\n";
}

// ---- chi-square helpers ----

// One-sample goodness of fit against exact probabilities; sparse categories
// are pooled so every expected count is at least 5.
inline double chi_square_pvalue(const std::vector<long>& observed,
                                const std::vector<double>& expected_prob, long n) {
  double stat = 0.0;
  int cats = 0;
  double pool_obs = 0.0, pool_exp = 0.0;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    double exp = expected_prob[i] * n;
    if (exp < 5.0) {
      pool_obs += observed[i];
      pool_exp += exp;
      continue;
    }
    stat += (observed[i] - exp) * (observed[i] - exp) / exp;
    ++cats;
  }
  if (pool_exp > 0.0) {
    stat += (pool_obs - pool_exp) * (pool_obs - pool_exp) / pool_exp;
    ++cats;
  }
  if (cats < 2) return 1.0;
  boost::math::chi_squared dist(cats - 1);
  return boost::math::cdf(boost::math::complement(dist, stat));
}

// Two-sample test over labeled categories.
inline double chi_square_two_sample_pvalue(const std::map<std::string, std::pair<long, long>>& counts) {
  double R = 0, S = 0;
  for (const auto& [k, rs] : counts) {
    R += rs.first;
    S += rs.second;
  }
  if (R == 0 || S == 0) return 1.0;
  double k1 = std::sqrt(S / R), k2 = std::sqrt(R / S);
  double stat = 0.0;
  int cats = 0;
  double pr = 0, ps = 0;  // pooled sparse cell
  for (const auto& [k, rs] : counts) {
    double tot = rs.first + rs.second;
    if (tot < 10.0) {
      pr += rs.first;
      ps += rs.second;
      continue;
    }
    double d = k1 * rs.first - k2 * rs.second;
    stat += d * d / tot;
    ++cats;
  }
  if (pr + ps > 0) {
    double d = k1 * pr - k2 * ps;
    stat += d * d / (pr + ps);
    ++cats;
  }
  if (cats < 2) return 1.0;
  boost::math::chi_squared dist(cats - 1);
  return boost::math::cdf(boost::math::complement(dist, stat));
}

// ---- shared small-graph suites ----

inline WeightedMultigraph parallel_pair(double c1, double c2) {
  WeightedMultigraph g;
  g.vertices = {0, 1};
  g.edges = {{0, 0, 1, c1}, {1, 0, 1, c2}};
  return g;
}

inline WeightedMultigraph parallel_pair_with_pendant(double c) {
  WeightedMultigraph g;
  g.vertices = {0, 1, 2};
  g.edges = {{0, 0, 1, c}, {1, 0, 1, c}, {2, 1, 2, c}};
  return g;
}

inline WeightedMultigraph four_cycle_with_chord(double c) {
  WeightedMultigraph g = make_cycle(4, c);
  g.edges.push_back({4, 0, 2, c});
  return g;
}

// named flow-equivalence suite from the cross-validation invariants
inline std::vector<std::pair<std::string, WeightedMultigraph>> flow_suite(double c) {
  return {{"triangle", make_cycle(3, c)},
          {"cycle4", make_cycle(4, c)},
          {"cycle4_chord", four_cycle_with_chord(c)},
          {"parallel_pendant", parallel_pair_with_pendant(c)}};
}

// connected graphs on <= 4 vertices (all 9 unlabeled simple ones) plus a
// parallel pair, as rational edge systems
inline std::vector<std::pair<std::string, std::vector<std::array<int, 2>>>> small_connected_graphs() {
  return {
      {"edge", {{0, 1}}},
      {"path3", {{0, 1}, {1, 2}}},
      {"triangle", {{0, 1}, {1, 2}, {2, 0}}},
      {"path4", {{0, 1}, {1, 2}, {2, 3}}},
      {"star4", {{0, 1}, {0, 2}, {0, 3}}},
      {"cycle4", {{0, 1}, {1, 2}, {2, 3}, {3, 0}}},
      {"paw", {{0, 1}, {1, 2}, {2, 0}, {2, 3}}},
      {"diamond", {{0, 1}, {1, 2}, {2, 0}, {0, 3}, {2, 3}}},
      {"k4", {{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}}},
      {"parallel_pair", {{0, 1}, {0, 1}}},
  };
}

template <class T>
inline EdgeSystem<T> system_from_ends(const std::vector<std::array<int, 2>>& ends, const T& odds) {
  EdgeSystem<T> sys;
  int n = 0;
  for (auto e : ends) n = std::max({n, e[0] + 1, e[1] + 1});
  sys.n_vertices = n;
  for (int i = 0; i < n; ++i) sys.vertex_ids.push_back(i);
  for (auto e : ends) {
    sys.ends.push_back(e);
    sys.odds.push_back(odds);
  }
  return sys;
}

// ---- campaigns ----

struct DecompositionCampaignReport {
  bool pass = true;
  double max_total_variation = 0.0;
  std::string worst_case;
  CsvTable table;
};

// Exhaustive rational-arithmetic sweep of the thinning/contraction identity.
inline DecompositionCampaignReport campaign_decomposition() {
  DecompositionCampaignReport rep;
  rep.table.header = {"graph", "q", "p", "alpha", "max_tv", "conditionals", "marginal_identity"};
  std::vector<Rational> qs = {Rational(1), Rational(3, 2), Rational(2), Rational(3)};
  std::vector<std::pair<Rational, Rational>> ps = {
      {Rational(1, 5), Rational(1, 4)},  // p, pi = p/(1-p)
      {Rational(1, 2), Rational(1)},
      {Rational(4, 5), Rational(4)}};
  std::vector<Rational> alphas = {Rational(3, 10), Rational(7, 10)};

  for (const auto& [name, ends] : small_connected_graphs())
    for (const auto& q : qs)
      for (const auto& [p, pi] : ps)
        for (const auto& alpha : alphas) {
          auto sys = system_from_ends<Rational>(ends, pi);
          auto r = validate_decomposition(sys, q, alpha);
          if (r.max_total_variation >= 1e-10 || !r.marginal_identity_ok) rep.pass = false;
          if (r.max_total_variation > rep.max_total_variation) {
            rep.max_total_variation = r.max_total_variation;
            rep.worst_case = name;
          }
          rep.table.rows.push_back({name, format_double(double(q)), format_double(double(p)),
                                    format_double(double(alpha)),
                                    format_double(r.max_total_variation),
                                    std::to_string(r.conditionals_checked),
                                    r.marginal_identity_ok ? "ok" : "FAIL"});
        }
  return rep;
}

struct SurvivalCheck {
  std::string graph;
  double q, t, exact, direct_hat, intrinsic_hat;
  bool pass_direct, pass_intrinsic;
};

struct FlowEquivalenceReport {
  bool pass = true;
  std::vector<SurvivalCheck> survival;
  CsvTable skeleton_table;  // graph,q,pvalue
  std::vector<double> skeleton_pvalues;
};

// Cross-validation of the two flow constructions: first-collapse survival
// against the enumeration oracle, and a two-sample test on the distribution
// of collapse skeletons.
inline FlowEquivalenceReport campaign_flow_equivalence(std::uint64_t master_seed, long n_runs,
                                                       const std::vector<double>& qs = {1, 2, 3},
                                                       double significance = 1e-3) {
  FlowEquivalenceReport rep;
  rep.skeleton_table.header = {"graph", "q", "pvalue", "pass"};
  const std::vector<double> t_points = {0.25, 0.5, 1.0, 2.0};
  double c = c_from_p(0.5);

  std::uint64_t suite_index = 0;
  for (const auto& [name, g] : flow_suite(c)) {
    for (double q : qs) {
      ++suite_index;
      std::vector<double> first_direct(n_runs), first_intrinsic(n_runs);
      std::vector<std::string> skel_direct(n_runs), skel_intrinsic(n_runs);
      const auto& graph = g;
      parallel_replicates(n_runs, [&, q](long r) {
        Rng rng = seed_stream(master_seed + suite_index * 1000003, 2 * r);
        auto td = flow_direct(graph, q, SamplerSpec::exact_oracle(), rng);
        double t1 = std::numeric_limits<double>::infinity();
        for (const auto& ev : td.events)
          if (ev.collapse) {
            t1 = ev.time;
            break;
          }
        first_direct[r] = t1;
        skel_direct[r] = skeleton_key(td);

        Rng rng2 = seed_stream(master_seed + suite_index * 1000003, 2 * r + 1);
        IntrinsicOptions opt;
        opt.mode = IntrinsicMode::exact_rates;
        auto ti = flow_intrinsic(graph, q, opt, rng2);
        t1 = std::numeric_limits<double>::infinity();
        for (const auto& ev : ti.events)
          if (ev.collapse) {
            t1 = ev.time;
            break;
          }
        first_intrinsic[r] = t1;
        skel_intrinsic[r] = skeleton_key(ti);
      });

      for (double t : t_points) {
        double s = survival_exact(g, q, t);
        long cd = 0, ci = 0;
        for (long r = 0; r < n_runs; ++r) {
          cd += first_direct[r] > t ? 1 : 0;
          ci += first_intrinsic[r] > t ? 1 : 0;
        }
        double se = std::sqrt(std::max(s * (1 - s), 1e-12) / n_runs);
        SurvivalCheck chk{name, q, t, s, double(cd) / n_runs, double(ci) / n_runs, false, false};
        chk.pass_direct = std::abs(chk.direct_hat - s) <= 3 * se;
        chk.pass_intrinsic = std::abs(chk.intrinsic_hat - s) <= 3 * se;
        if (!chk.pass_direct || !chk.pass_intrinsic) rep.pass = false;
        rep.survival.push_back(chk);
      }

      std::map<std::string, std::pair<long, long>> counts;
      for (long r = 0; r < n_runs; ++r) {
        counts[skel_direct[r]].first++;
        counts[skel_intrinsic[r]].second++;
      }
      double pv = chi_square_two_sample_pvalue(counts);
      bool pass = pv > significance;
      if (!pass) rep.pass = false;
      rep.skeleton_pvalues.push_back(pv);
      rep.skeleton_table.rows.push_back(
          {name, format_double(q), format_double(pv), pass ? "pass" : "FAIL"});
    }
  }
  return rep;
}

struct McmcValidationReport {
  bool pass = true;
  CsvTable table;  // graph,q,kind,pvalue,pass
};

// Chi-square of the chain's empirical configuration distribution against the
// enumeration oracle on every suite graph with <= 5 edges.
inline McmcValidationReport mcmc_validation(std::uint64_t master_seed, long sweeps = 100000,
                                            double significance = 1e-3) {
  McmcValidationReport rep;
  rep.table.header = {"graph", "q", "kind", "pvalue", "pass"};
  std::vector<std::pair<std::string, WeightedMultigraph>> graphs = {
      {"edge", make_path(2, c_from_p(0.5))},
      {"path3", make_path(3, c_from_p(0.5))},
      {"triangle", make_cycle(3, c_from_p(0.5))},
      {"cycle4", make_cycle(4, c_from_p(0.5))},
      {"parallel_pendant", parallel_pair_with_pendant(c_from_p(0.5))},
      {"diamond", [] {
         WeightedMultigraph d;
         d.vertices = {0, 1, 2, 3};
         d.edges = {{0, 0, 1, c_from_p(0.5)}, {1, 1, 2, c_from_p(0.5)}, {2, 2, 0, c_from_p(0.5)},
                    {3, 0, 3, c_from_p(0.5)}, {4, 2, 3, c_from_p(0.5)}};
         return d;
       }()}};

  std::uint64_t idx = 0;
  for (const auto& [name, g] : graphs) {
    auto sys = edge_system(g);
    for (double q : {1.0, 1.5, 2.0, 3.0}) {
      for (SweepKind kind : {SweepKind::heat_bath, SweepKind::swendsen_wang}) {
        ++idx;
        if (kind == SweepKind::swendsen_wang && q != std::floor(q)) continue;
        auto dist = enumerate_distribution(sys, q);
        std::vector<double> probs(dist.weight.size());
        for (std::size_t m = 0; m < probs.size(); ++m) probs[m] = dist.weight[m] / dist.Z;

        Rng rng = seed_stream(master_seed, idx);
        ChainState st = fresh_chain(sys);
        long burn = 1000;
        run_sweeps(st, sys, q, burn, kind, rng);
        std::vector<long> observed(probs.size(), 0);
        for (long s = 0; s < sweeps; ++s) {
          if (kind == SweepKind::swendsen_wang)
            sw_sweep(st, sys, int(q), rng);
          else
            heat_bath_sweep(st, sys, q, rng);
          observed[st.mask()]++;
        }
        double pv = chi_square_pvalue(observed, probs, sweeps);
        bool pass = pv > significance;
        if (!pass) rep.pass = false;
        rep.table.rows.push_back({name, format_double(q),
                                  kind == SweepKind::heat_bath ? "heat_bath" : "sw",
                                  format_double(pv), pass ? "pass" : "FAIL"});
      }
    }
  }
  return rep;
}

// ---- torus sweeps and the critical-point readout ----

struct SweepRow {
  double p;
  long reps;
  double mean_largest_fraction;
  double prob_giant;  // P(largest fraction > 1/2)
  double mean_freeze_time;
  double mean_collapse_count;
};

inline CsvTable sweep_to_csv(const std::vector<SweepRow>& rows) {
  CsvTable t;
  t.header = {"p", "reps", "mean_largest_fraction", "prob_giant", "mean_freeze_time",
              "mean_collapse_count"};
  for (const auto& r : rows)
    t.rows.push_back({format_double(r.p), std::to_string(r.reps),
                      format_double(r.mean_largest_fraction), format_double(r.prob_giant),
                      format_double(r.mean_freeze_time), format_double(r.mean_collapse_count)});
  return t;
}

inline std::vector<SweepRow> torus_sweep(int d, int L, double q, const std::vector<double>& p_grid,
                                         long reps, const SamplerSpec& sampler,
                                         std::uint64_t master_seed) {
  std::vector<SweepRow> out;
  std::uint64_t grid_index = 0;
  for (double p : p_grid) {
    ++grid_index;
    WeightedMultigraph g = make_torus(d, L, c_from_p(p));
    std::vector<FreezeStats> stats(reps);
    parallel_replicates(reps, [&](long r) {
      Rng rng = seed_stream(master_seed + grid_index * 7919, r);
      auto traj = flow_direct(g, q, sampler, rng, master_seed);
      stats[r] = freeze_stats(traj);
    });
    SweepRow row{p, reps, 0, 0, 0, 0};
    for (const auto& st : stats) {
      row.mean_largest_fraction += st.largest_cluster_fraction;
      row.prob_giant += st.largest_cluster_fraction > 0.5 ? 1.0 : 0.0;
      row.mean_freeze_time += st.freeze_time;
      row.mean_collapse_count += st.collapse_events;
    }
    row.mean_largest_fraction /= reps;
    row.prob_giant /= reps;
    row.mean_freeze_time /= reps;
    row.mean_collapse_count /= reps;
    out.push_back(row);
  }
  return out;
}

// Linear interpolation of P(largest fraction > 1/2) through 1/2.
inline double pc_estimate(const std::vector<SweepRow>& sweep) {
  for (std::size_t i = 0; i + 1 < sweep.size(); ++i) {
    double a = sweep[i].prob_giant, b = sweep[i + 1].prob_giant;
    if ((a - 0.5) * (b - 0.5) <= 0.0 && a != b)
      return sweep[i].p + (0.5 - a) / (b - a) * (sweep[i + 1].p - sweep[i].p);
  }
  throw std::runtime_error("no crossing of 1/2 in sweep range");
}

// exact-coupling vs paper-simple first-collapse survival on graphs with
// engineered parallel structure
inline CsvTable discrepancy_report(const std::vector<std::pair<std::string, WeightedMultigraph>>& graphs,
                                   double q, const std::vector<double>& t_grid) {
  CsvTable t;
  t.header = {"graph", "t", "survival_exact", "survival_paper_simple", "gap"};
  for (const auto& [name, g] : graphs)
    for (double tt : t_grid) {
      double se = survival_exact(g, q, tt);
      double sp = survival_intrinsic(g, q, tt, IntrinsicMode::paper_simple);
      t.rows.push_back({name, format_double(tt), format_double(se), format_double(sp),
                        format_double(sp - se)});
    }
  return t;
}

}  // namespace fkflow
