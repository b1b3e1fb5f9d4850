#pragma once

#include <cmath>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "fkflow/experiments.hpp"
#include "fkflow/flow_direct.hpp"
#include "fkflow/flow_intrinsic.hpp"
#include "fkflow/oracle.hpp"
#include "fkflow/sampler.hpp"
#include "fkflow/trajectory.hpp"

namespace fkflow {

struct WeightFlags {
  std::optional<double> p, pi, c;

  // conductance for generated graphs; file graphs carry their own weights
  std::optional<double> conductance() const {
    if (p) return c_from_p(*p);
    if (pi) return c_from_pi(*pi);
    if (c) {
      if (*c < 0.0) throw std::domain_error("c must be nonnegative");
      return *c;
    }
    return std::nullopt;
  }
};

inline WeightedMultigraph resolve_graph(const std::string& spec, const WeightFlags& w) {
  auto c = w.conductance();
  bool is_file = spec.rfind("file:", 0) == 0 || spec.find('/') != std::string::npos ||
                 spec.find(".json") != std::string::npos;
  if (!is_file && !c)
    throw CLI::ValidationError("--graph", "generated graphs need one of --p/--pi/--c");
  return generate(spec, c.value_or(0.0));
}

inline void add_weight_flags(CLI::App* cmd, WeightFlags& w) {
  auto* fp = cmd->add_option("--p", w.p, "edge opening probability in [0,1)");
  auto* fpi = cmd->add_option("--pi", w.pi, "edge odds p/(1-p)");
  auto* fc = cmd->add_option("--c", w.c, "edge conductance, p = 1-e^{-c}");
  fp->excludes(fpi)->excludes(fc);
  fpi->excludes(fc);
}

// Full CLI; returns the process exit code.  Factored out of main() so the
// command surface is directly testable.
inline int run_cli(std::vector<std::string> args, std::ostream& out = std::cout,
                   std::ostream& err = std::cerr) {
  CLI::App app{"FK-percolation renormalization flow toolkit"};
  app.require_subcommand(1);

  std::string graph_spec, mode = "direct", out_path, campaign = "all";
  WeightFlags weights;
  double q = 1.0, t_max = std::numeric_limits<double>::infinity();
  std::uint64_t seed = 0;
  long reps = 1, validate_reps = 20000, sweep_reps = 100, sweeps = 100000, burn_in = -1;
  int dim = 2, side = 16;
  std::vector<double> p_grid;

  auto* oracle_cmd = app.add_subcommand("oracle", "exact partition function and marginals");
  oracle_cmd->add_option("--graph", graph_spec, "graph spec or file")->required();
  oracle_cmd->add_option("--q", q, "cluster weight q > 0")->required();
  add_weight_flags(oracle_cmd, weights);
  oracle_cmd->add_option("--out", out_path, "write the full distribution as JSON");

  auto* sample_cmd = app.add_subcommand("sample", "MCMC sample of the random-cluster measure");
  sample_cmd->add_option("--graph", graph_spec)->required();
  sample_cmd->add_option("--q", q)->required();
  add_weight_flags(sample_cmd, weights);
  sample_cmd->add_option("--sweeps", sweeps);
  sample_cmd->add_option("--burn-in", burn_in);
  sample_cmd->add_option("--seed", seed);
  sample_cmd->add_option("--mode", mode, "heat-bath | sw");
  sample_cmd->add_option("--out", out_path);

  auto* flow_cmd = app.add_subcommand("flow", "simulate the cluster-collapse flow");
  flow_cmd->add_option("--graph", graph_spec)->required();
  flow_cmd->add_option("--q", q)->required();
  add_weight_flags(flow_cmd, weights);
  flow_cmd->add_option("--mode", mode, "direct | intrinsic-exact | intrinsic-mcmc | paper-simple");
  flow_cmd->add_option("--seed", seed);
  flow_cmd->add_option("--reps", reps);
  flow_cmd->add_option("--t-max", t_max);
  flow_cmd->add_option("--sweeps", sweeps, "MCMC sweeps for sampler-backed modes");
  flow_cmd->add_option("--out", out_path, "JSONL trajectory path (reps > 1 appends .N)");

  auto* validate_cmd = app.add_subcommand("validate", "run validation campaigns");
  validate_cmd->add_option("--campaign", campaign, "decomposition | flow | mcmc | all");
  validate_cmd->add_option("--seed", seed);
  validate_cmd->add_option("--reps", validate_reps);
  validate_cmd->add_option("--out", out_path, "CSV report path prefix");

  auto* sweep_cmd = app.add_subcommand("sweep", "torus phenomenology sweep");
  sweep_cmd->add_option("--d", dim);
  sweep_cmd->add_option("--L", side);
  sweep_cmd->add_option("--q", q)->required();
  sweep_cmd->add_option("--p-grid", p_grid, "comma-separated p values")->delimiter(',')->required();
  sweep_cmd->add_option("--reps", sweep_reps);
  sweep_cmd->add_option("--seed", seed);
  sweep_cmd->add_option("--sweeps", sweeps, "MCMC sweeps per sample (q > 1)");
  sweep_cmd->add_option("--out", out_path, "CSV output path");

  try {
    std::vector<std::string> rev(args.rbegin(), args.rend());
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return 0;
    }
    err << "error: " << e.what() << "\n";
    return 2;
  }

  try {
    if (*oracle_cmd) {
      if (q <= 0.0) throw std::domain_error("q must be positive");
      WeightedMultigraph g = resolve_graph(graph_spec, weights);
      double Z = partition_function(g, q);
      double Zdc = deletion_contraction_Z(g, q);
      out << "Z = " << format_double(Z) << "\n";
      out << "Z (deletion-contraction) = " << format_double(Zdc) << "\n";
      for (const Edge& e : g.edges)
        out << "P(edge " << e.id << " = (" << e.u << "," << e.v
            << ") open) = " << format_double(edge_marginal(g, q, e.id)) << "\n";
      if (!out_path.empty()) {
        auto sys = edge_system(g);
        auto dist = enumerate_distribution(sys, q);
        nlohmann::json j;
        j["Z"] = dist.Z;
        j["probabilities"] = nlohmann::json::array();
        for (std::uint32_t m = 0; m < dist.weight.size(); ++m)
          j["probabilities"].push_back(dist.weight[m] / dist.Z);
        std::ofstream f(out_path);
        f << j.dump(2) << "\n";
      }
      return 0;
    }

    if (*sample_cmd) {
      if (q < 1.0) throw std::domain_error("MCMC sampling exposed for q >= 1 only");
      WeightedMultigraph g = resolve_graph(graph_spec, weights);
      auto sys = edge_system(g);
      SweepKind kind = mode == "sw" ? SweepKind::swendsen_wang : SweepKind::heat_bath;
      Rng rng = seed_stream(seed, 0);
      if (burn_in < 0) burn_in = std::max<long>(100, sweeps / 10);
      ChainState st = sample_after(sys, q, sweeps, burn_in, rng, kind);
      nlohmann::json j;
      j["open_edges"] = nlohmann::json::array();
      for (std::size_t e = 0; e < st.open.size(); ++e)
        if (st.open[e]) j["open_edges"].push_back(g.edges[e].id);
      if (!out_path.empty()) {
        std::ofstream f(out_path);
        f << j.dump() << "\n";
      } else {
        out << j.dump() << "\n";
      }
      return 0;
    }

    if (*flow_cmd) {
      if (q < 1.0) throw std::domain_error("q must be >= 1 for flow modes");
      WeightedMultigraph g = resolve_graph(graph_spec, weights);
      for (long r = 0; r < reps; ++r) {
        Rng rng = seed_stream(seed, r);
        FlowTrajectory traj;
        if (mode == "direct") {
          SamplerSpec sampler = g.edges.size() <= 20 ? SamplerSpec::exact_oracle()
                                                     : SamplerSpec::mcmc(sweeps);
          traj = flow_direct(g, q, sampler, rng, seed);
        } else {
          IntrinsicOptions opt;
          opt.t_max = t_max;
          opt.mcmc_sweeps = sweeps;
          if (mode == "intrinsic-exact")
            opt.mode = IntrinsicMode::exact_rates;
          else if (mode == "intrinsic-mcmc")
            opt.mode = IntrinsicMode::mcmc_rates;
          else if (mode == "paper-simple")
            opt.mode = IntrinsicMode::paper_simple;
          else
            throw std::domain_error("unknown flow mode: " + mode);
          traj = flow_intrinsic(g, q, opt, rng, seed);
        }
        if (!out_path.empty()) {
          std::string path = reps == 1 ? out_path : out_path + "." + std::to_string(r);
          write_trajectory(traj, path);
        } else {
          auto st = freeze_stats(traj);
          out << "rep " << r << ": collapses=" << st.collapse_events
              << " freeze_time=" << format_double(st.freeze_time)
              << " clusters=" << st.final_cluster_count
              << " largest_fraction=" << format_double(st.largest_cluster_fraction) << "\n";
        }
      }
      return 0;
    }

    if (*validate_cmd) {
      bool all_pass = true;
      if (campaign == "decomposition" || campaign == "all") {
        auto rep = campaign_decomposition();
        out << "decomposition: " << (rep.pass ? "pass" : "FAIL")
            << " (max TV = " << format_double(rep.max_total_variation) << ")\n";
        if (!out_path.empty()) rep.table.save(out_path + "_decomposition.csv");
        all_pass = all_pass && rep.pass;
      }
      if (campaign == "flow" || campaign == "all") {
        auto rep = campaign_flow_equivalence(seed, validate_reps);
        out << "flow equivalence: " << (rep.pass ? "pass" : "FAIL") << "\n";
        if (!out_path.empty()) rep.skeleton_table.save(out_path + "_flow_skeletons.csv");
        all_pass = all_pass && rep.pass;
      }
      if (campaign == "mcmc" || campaign == "all") {
        auto rep = mcmc_validation(seed);
        out << "mcmc: " << (rep.pass ? "pass" : "FAIL") << "\n";
        if (!out_path.empty()) rep.table.save(out_path + "_mcmc.csv");
        all_pass = all_pass && rep.pass;
      }
      return all_pass ? 0 : 1;
    }

    if (*sweep_cmd) {
      if (q < 1.0) throw std::domain_error("q must be >= 1 for sweeps");
      SamplerSpec sampler =
          q == 1.0 ? SamplerSpec::exact_oracle()
                   : SamplerSpec::mcmc(sweeps, q == std::floor(q) ? SweepKind::swendsen_wang
                                                                  : SweepKind::heat_bath);
      auto rows = torus_sweep(dim, side, q, p_grid, sweep_reps, sampler, seed);
      CsvTable csv = sweep_to_csv(rows);
      if (!out_path.empty()) {
        csv.save(out_path);
        std::vector<std::pair<double, double>> pts;
        for (const auto& r : rows) pts.emplace_back(r.p, r.mean_largest_fraction);
        save_svg_curves(out_path + ".svg", "largest-cluster fraction vs p",
                        {{"mean fraction", pts}});
      } else {
        out << csv.to_string();
      }
      try {
        out << "pc_estimate = " << format_double(pc_estimate(rows)) << "\n";
      } catch (const std::exception&) {
        out << "pc_estimate: no crossing in range\n";
      }
      return 0;
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

}  // namespace fkflow
