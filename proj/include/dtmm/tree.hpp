#ifndef DTMM_TREE_HPP
#define DTMM_TREE_HPP

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace dtmm {

// Rooted full binary tree over M named leaves (OTUs).
//
// Node ids are dense in [0, 2M-1). Internal nodes additionally carry a
// canonical index in [0, M-1) assigned by depth-first pre-order; this order
// is the serialization order for all per-node vectors (gamma, theta, tau).
class PhyloTree {
 public:
  struct PathStep {
    int internal_index;  // canonical index of the internal node on the path
    bool goes_left;      // true if the path descends to the left child
  };

  int num_leaves() const { return static_cast<int>(leaf_ids_.size()); }
  int num_internal() const { return num_leaves() - 1; }
  int num_nodes() const { return 2 * num_leaves() - 1; }
  int root() const { return root_; }

  bool is_leaf(int node) const { return left_[node] < 0; }
  int left_child(int node) const { return left_[node]; }
  int right_child(int node) const { return right_[node]; }
  int parent(int node) const { return parent_[node]; }
  int sibling(int node) const;

  const std::vector<std::string>& leaf_ids() const { return leaf_ids_; }
  // Node id of leaf j (leaves ordered left-to-right as parsed).
  int leaf_node(int leaf) const { return leaf_nodes_[leaf]; }
  // Canonical internal index of a node, -1 for leaves.
  int internal_index(int node) const { return internal_index_[node]; }
  // Node id of the k-th internal node in canonical order.
  int internal_node(int k) const { return internal_nodes_[k]; }

  // Root-to-leaf path of leaf j, one step per internal node visited.
  const std::vector<PathStep>& leaf_path(int leaf) const {
    return leaf_paths_[leaf];
  }

  // Leaves (by leaf index) descending from a node.
  const std::vector<int>& leaves_under(int node) const {
    return leaves_under_[node];
  }

  // Two-column audit table: canonical node index, member leaf set.
  std::string node_table() const;

  friend PhyloTree parse_newick(const std::string& text,
                                bool resolve_multifurcations);

 private:
  void index_tree();

  std::vector<int> left_, right_, parent_;
  std::vector<std::string> leaf_ids_;
  std::vector<int> leaf_nodes_;
  std::vector<int> internal_index_;
  std::vector<int> internal_nodes_;
  std::vector<std::vector<PathStep>> leaf_paths_;
  std::vector<std::vector<int>> leaves_under_;
  int root_ = -1;
};

// Parses a Newick string ("(a,(b,c));"). Branch lengths and internal node
// labels are accepted and ignored. Multifurcations are an error unless
// resolve_multifurcations is set, in which case they are binarized
// left-deep (the first two children are grouped first).
PhyloTree parse_newick(const std::string& text,
                       bool resolve_multifurcations = false);

// Topology-only Newick serialization (leaf names, no branch lengths).
std::string to_newick(const PhyloTree& tree);

// Bottom-up count aggregation: entry [node] = sum of leaf counts under node.
// counts must be ordered like tree.leaf_ids().
std::vector<std::int64_t> aggregate_counts(const PhyloTree& tree,
                                           std::span<const std::int64_t> counts);

// Per-internal-node left-branch probabilities of a composition p
// (canonical order). Zero-mass subtrees get 1/2. |sum(p)-1| <= 1e-8 required;
// p is renormalized internally.
std::vector<double> tree_ratio_transform(const PhyloTree& tree,
                                         std::span<const double> p);

// Inverse transform: leaf probabilities as path products of theta
// (left steps) and 1-theta (right steps).
std::vector<double> inverse_tree_ratio_transform(const PhyloTree& tree,
                                                 std::span<const double> theta);

}  // namespace dtmm

#endif  // DTMM_TREE_HPP
