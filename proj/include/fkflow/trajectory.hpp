#pragma once

#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "fkflow/graph.hpp"
#include "fkflow/partition.hpp"

namespace fkflow {

// One edge opening during the flow.  Internal openings (both endpoints
// already in the same cluster) are recorded with collapse=false; they do not
// change the collapsed graph W_t.
struct FlowEvent {
  double time = 0.0;
  int edge_id = -1;
  int u = -1, v = -1;           // original endpoints
  int cluster_a = -1, cluster_b = -1;  // cluster ids before the merge
  int new_cluster = -1;
  int clusters_after = 0;
  bool collapse = false;
};

struct FlowTrajectory {
  WeightedMultigraph initial;
  double q = 1.0;
  std::uint64_t seed = 0;
  std::string mode;  // "direct", "intrinsic-exact", "intrinsic-mcmc", "paper-simple"
  std::vector<FlowEvent> events;

  ClusterPartition final_partition() const {
    ClusterPartition part(initial.vertices);
    for (const FlowEvent& ev : events)
      if (ev.collapse) part.merge(ev.u, ev.v);
    return part;
  }

  double freeze_time() const {
    double t = 0.0;
    for (const FlowEvent& ev : events)
      if (ev.collapse) t = std::max(t, ev.time);
    return t;
  }

  int collapse_count() const {
    int n = 0;
    for (const FlowEvent& ev : events) n += ev.collapse ? 1 : 0;
    return n;
  }
};

struct FreezeStats {
  double freeze_time = 0.0;
  int final_cluster_count = 0;
  double largest_cluster_fraction = 0.0;
  int collapse_events = 0;
};

inline FreezeStats freeze_stats(const FlowTrajectory& traj) {
  FreezeStats st;
  st.freeze_time = traj.freeze_time();
  st.collapse_events = traj.collapse_count();
  ClusterPartition part = traj.final_partition();
  st.final_cluster_count = part.cluster_count();
  std::size_t largest = 0;
  for (const auto& [rep, members] : part.clusters()) largest = std::max(largest, members.size());
  st.largest_cluster_fraction =
      traj.initial.vertices.empty() ? 0.0 : double(largest) / traj.initial.vertices.size();
  return st;
}

// ---- JSONL persistence (schema 1) ----

inline void write_trajectory(const FlowTrajectory& traj, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open trajectory file for writing: " + path);
  nlohmann::json header{{"schema", 1},
                        {"graph_hash", graph_hash(traj.initial)},
                        {"q", traj.q},
                        {"seed", traj.seed},
                        {"mode", traj.mode}};
  out << header.dump() << "\n";
  for (const FlowEvent& ev : traj.events) {
    nlohmann::json j{{"t", ev.time},
                     {"edge", {ev.u, ev.v}},
                     {"edge_id", ev.edge_id},
                     {"merged", {ev.cluster_a, ev.cluster_b}},
                     {"new", ev.new_cluster},
                     {"collapse", ev.collapse}};
    out << j.dump() << "\n";
  }
}

// Reads a schema-1 trajectory; the caller supplies the initial graph, whose
// hash must match the header.
inline FlowTrajectory read_trajectory(const std::string& path, const WeightedMultigraph& graph) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open trajectory file: " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("trajectory file is empty: " + path);
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception&) {
    throw std::runtime_error(path + ":1: malformed header");
  }
  if (!header.contains("schema") || header["schema"] != 1)
    throw std::runtime_error(path + ": unsupported trajectory schema");
  FlowTrajectory traj;
  traj.initial = graph;
  if (header.at("graph_hash").get<std::string>() != graph_hash(graph))
    throw std::runtime_error(path + ": graph hash mismatch");
  traj.q = header.at("q").get<double>();
  traj.seed = header.at("seed").get<std::uint64_t>();
  traj.mode = header.at("mode").get<std::string>();

  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception&) {
      throw std::runtime_error(path + ":" + std::to_string(line_no) + ": malformed JSONL line");
    }
    FlowEvent ev;
    ev.time = j.at("t").get<double>();
    ev.edge_id = j.at("edge_id").get<int>();
    ev.u = j.at("edge")[0].get<int>();
    ev.v = j.at("edge")[1].get<int>();
    ev.cluster_a = j.at("merged")[0].get<int>();
    ev.cluster_b = j.at("merged")[1].get<int>();
    ev.new_cluster = j.at("new").get<int>();
    ev.collapse = j.at("collapse").get<bool>();
    traj.events.push_back(ev);
  }
  // clusters_after is derivable; rebuild it for structural equality
  ClusterPartition part(traj.initial.vertices);
  for (FlowEvent& ev : traj.events) {
    if (ev.collapse) part.merge(ev.u, ev.v);
    ev.clusters_after = part.cluster_count();
  }
  return traj;
}

}  // namespace fkflow
