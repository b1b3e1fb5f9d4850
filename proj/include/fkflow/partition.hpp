#pragma once

#include <unordered_map>
#include <vector>

namespace fkflow {

// Union-find over opaque integer vertex ids.  Tracks the number of classes;
// merging two distinct classes decrements it by exactly one.
class ClusterPartition {
 public:
  ClusterPartition() = default;

  explicit ClusterPartition(const std::vector<int>& vertex_ids) {
    for (int v : vertex_ids) add(v);
  }

  void add(int v) {
    if (parent_.count(v)) return;
    parent_[v] = v;
    ++count_;
  }

  int find(int v) const {
    auto it = parent_.find(v);
    int root = v;
    while (it->second != root) {
      root = it->second;
      it = parent_.find(root);
    }
    // path compression
    int cur = v;
    while (cur != root) {
      auto jt = parent_.find(cur);
      int next = jt->second;
      jt->second = root;
      cur = next;
    }
    return root;
  }

  // Returns true iff u and v were in distinct classes.
  bool merge(int u, int v) {
    int ru = find(u), rv = find(v);
    if (ru == rv) return false;
    if (rv < ru) std::swap(ru, rv);  // smallest id becomes the representative
    parent_[rv] = ru;
    --count_;
    return true;
  }

  bool connected(int u, int v) const { return find(u) == find(v); }

  int cluster_count() const { return count_; }
  std::size_t size() const { return parent_.size(); }

  std::vector<int> representatives() const {
    std::vector<int> reps;
    for (const auto& [v, _] : parent_)
      if (find(v) == v) reps.push_back(v);
    return reps;
  }

  // cluster representative -> member vertex ids
  std::unordered_map<int, std::vector<int>> clusters() const {
    std::unordered_map<int, std::vector<int>> out;
    for (const auto& [v, _] : parent_) out[find(v)].push_back(v);
    return out;
  }

 private:
  mutable std::unordered_map<int, int> parent_;
  int count_ = 0;
};

}  // namespace fkflow
