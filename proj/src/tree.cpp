#include "conic/tree.hpp"

#include <algorithm>
#include <map>

namespace conic {

EventTree EventTree::build(int horizon, int d, int N, std::vector<NodeDesc> nodes) {
  if (horizon < 1) throw ValidationError("horizon must be >= 1");
  if (d < 1 || N < 1) throw ValidationError("asset counts d, N must be >= 1");

  std::stable_sort(nodes.begin(), nodes.end(), [](const NodeDesc& a, const NodeDesc& b) {
    return a.t != b.t ? a.t < b.t : a.id < b.id;
  });

  std::map<int, int> index_by_id;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (!index_by_id.emplace(nodes[i].id, static_cast<int>(i)).second)
      throw ValidationError("DuplicateId: node id " + std::to_string(nodes[i].id));
  }

  EventTree tree;
  tree.horizon_ = horizon;
  tree.d_ = d;
  tree.N_ = N;
  const int n = static_cast<int>(nodes.size());
  tree.id_.resize(n);
  tree.time_.resize(n);
  tree.parent_.assign(n, -1);
  tree.children_.assign(n, {});
  tree.q_.resize(n);
  tree.prob_.resize(n);

  int roots = 0;
  for (int i = 0; i < n; ++i) {
    const NodeDesc& nd = nodes[i];
    tree.id_[i] = nd.id;
    tree.time_[i] = nd.t;
    tree.q_[i] = nd.q;
    if (nd.q <= 0.0 || nd.q > 1.0)
      throw ValidationError("ProbabilityNotStochastic: q out of (0,1] at node " +
                            std::to_string(nd.id));
    if (!nd.parent) {
      ++roots;
      if (nd.t != 0) throw ValidationError("root must have time 0");
    } else {
      auto it = index_by_id.find(*nd.parent);
      if (it == index_by_id.end())
        throw ValidationError("DanglingParent: node " + std::to_string(nd.id) +
                              " references unknown parent " + std::to_string(*nd.parent));
      int p = it->second;
      if (nodes[p].t != nd.t - 1)
        throw ValidationError("parent time must equal child time - 1 at node " +
                              std::to_string(nd.id));
      tree.parent_[i] = p;
      tree.children_[p].push_back(i);
    }
  }
  if (roots != 1) throw ValidationError("exactly one root required, found " +
                                        std::to_string(roots));

  for (int i = 0; i < n; ++i) {
    if (tree.children_[i].empty()) {
      if (tree.time_[i] != horizon)
        throw ValidationError("LeafAtWrongTime: node " + std::to_string(tree.id_[i]) +
                              " is a leaf at time " + std::to_string(tree.time_[i]));
      tree.leaves_.push_back(i);
    } else {
      double qsum = 0.0;
      for (int c : tree.children_[i]) qsum += tree.q_[c];
      if (std::abs(qsum - 1.0) > 1e-12)
        throw ValidationError("ProbabilityNotStochastic: children of node " +
                              std::to_string(tree.id_[i]) + " sum to " +
                              std::to_string(qsum));
    }
    tree.prob_[i] = tree.parent_[i] < 0 ? 1.0 : tree.prob_[tree.parent_[i]] * tree.q_[i];
  }
  return tree;
}

int EventTree::index_of(int id) const {
  for (int i = 0; i < num_nodes(); ++i)
    if (id_[i] == id) return i;
  throw ValidationError("unknown node id " + std::to_string(id));
}

std::vector<int> EventTree::nodes_at(int t) const {
  std::vector<int> out;
  for (int i = 0; i < num_nodes(); ++i)
    if (time_[i] == t) out.push_back(i);
  return out;
}

std::vector<int> EventTree::path(int idx) const {
  std::vector<int> out;
  for (int i = idx; i >= 0; i = parent_[i]) out.push_back(i);
  std::reverse(out.begin(), out.end());
  return out;
}

Vec conditional_expectation(const EventTree& tree, const AdaptedProcess& process,
                            int node_idx) {
  const auto& kids = tree.children(node_idx);
  if (kids.empty()) throw ValidationError("NodeIsLeaf: node has no children");
  Vec out(process.dim(), 0.0);
  for (int c : kids) axpy(tree.cond_prob(c), process.at(c), out);
  return out;
}

bool is_martingale(const EventTree& tree, const AdaptedProcess& process, double tol) {
  for (int i = 0; i < tree.num_nodes(); ++i) {
    if (tree.is_leaf(i)) continue;
    Vec ce = conditional_expectation(tree, process, i);
    for (int k = 0; k < process.dim(); ++k)
      if (std::abs(ce[k] - process.at(i)[k]) > tol) return false;
  }
  return true;
}

}  // namespace conic
