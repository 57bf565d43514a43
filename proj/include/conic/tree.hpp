#pragma once

#include <optional>
#include <vector>

#include "conic/linalg.hpp"

namespace conic {

struct NodeDesc {
  int id = 0;
  int t = 0;
  std::optional<int> parent;
  double q = 1.0;  // conditional probability given the parent
};

// Finite scenario tree: one root at t = 0, all leaves at t = T, children
// probabilities of every non-leaf sum to 1. Nodes are stored breadth-first
// by (time, id); all public indices refer to that order. Immutable after
// construction.
class EventTree {
 public:
  static EventTree build(int horizon, int d, int N, std::vector<NodeDesc> nodes);

  int horizon() const { return horizon_; }
  int asset_d() const { return d_; }
  int asset_N() const { return N_; }
  int dim() const { return d_ + N_; }
  int num_nodes() const { return static_cast<int>(time_.size()); }

  int index_of(int id) const;
  int id_at(int idx) const { return id_[idx]; }
  int time(int idx) const { return time_[idx]; }
  int parent(int idx) const { return parent_[idx]; }  // -1 for the root
  const std::vector<int>& children(int idx) const { return children_[idx]; }
  bool is_leaf(int idx) const { return children_[idx].empty(); }
  double cond_prob(int idx) const { return q_[idx]; }
  double prob(int idx) const { return prob_[idx]; }

  const std::vector<int>& leaves() const { return leaves_; }
  std::vector<int> nodes_at(int t) const;
  // Root-to-node path, inclusive.
  std::vector<int> path(int idx) const;

 private:
  int horizon_ = 0, d_ = 0, N_ = 0;
  std::vector<int> id_, time_, parent_;
  std::vector<std::vector<int>> children_;
  std::vector<double> q_, prob_;
  std::vector<int> leaves_;
};

// One fixed-dimension vector per tree node.
class AdaptedProcess {
 public:
  AdaptedProcess() = default;
  AdaptedProcess(const EventTree& tree, int dim, double fill = 0.0)
      : dim_(dim), values_(tree.num_nodes(), Vec(dim, fill)) {}

  int dim() const { return dim_; }
  int num_nodes() const { return static_cast<int>(values_.size()); }
  Vec& at(int idx) { return values_[idx]; }
  const Vec& at(int idx) const { return values_[idx]; }

 private:
  int dim_ = 0;
  std::vector<Vec> values_;
};

// Sum of children values weighted by their conditional probabilities.
Vec conditional_expectation(const EventTree& tree, const AdaptedProcess& process,
                            int node_idx);

bool is_martingale(const EventTree& tree, const AdaptedProcess& process,
                   double tol);

}  // namespace conic
