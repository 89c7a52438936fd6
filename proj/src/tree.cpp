#include "dtmm/tree.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>
#include <sstream>
#include <stdexcept>

namespace dtmm {

namespace {

// Recursive-descent Newick parser producing a child-list tree.
struct RawNode {
  std::vector<int> children;
  std::string label;
};

struct NewickParser {
  const std::string& text;
  size_t pos = 0;
  std::vector<RawNode> nodes;

  explicit NewickParser(const std::string& t) : text(t) {}

  [[noreturn]] void fail(const std::string& what) const {
    throw std::runtime_error("newick: " + what + " at position " +
                             std::to_string(pos));
  }

  void skip_ws() {
    while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
  }

  char peek() {
    skip_ws();
    if (pos >= text.size()) fail("unexpected end of input");
    return text[pos];
  }

  std::string read_label() {
    skip_ws();
    size_t start = pos;
    while (pos < text.size()) {
      char c = text[pos];
      if (c == ',' || c == '(' || c == ')' || c == ';' || c == ':' ||
          std::isspace(static_cast<unsigned char>(c)))
        break;
      ++pos;
    }
    return text.substr(start, pos - start);
  }

  void skip_branch_length() {
    skip_ws();
    if (pos < text.size() && text[pos] == ':') {
      ++pos;
      size_t start = pos;
      while (pos < text.size() &&
             (std::isdigit(static_cast<unsigned char>(text[pos])) ||
              text[pos] == '.' || text[pos] == '-' || text[pos] == '+' ||
              text[pos] == 'e' || text[pos] == 'E'))
        ++pos;
      if (pos == start) fail("expected branch length after ':'");
    }
  }

  int parse_clade() {
    skip_ws();
    int id = static_cast<int>(nodes.size());
    nodes.emplace_back();
    if (peek() == '(') {
      ++pos;  // '('
      while (true) {
        int child = parse_clade();
        nodes[id].children.push_back(child);
        char c = peek();
        if (c == ',') {
          ++pos;
          continue;
        }
        if (c == ')') {
          ++pos;
          break;
        }
        fail("expected ',' or ')'");
      }
      nodes[id].label = read_label();  // optional internal label, ignored
    } else {
      nodes[id].label = read_label();
      if (nodes[id].label.empty()) fail("expected leaf name");
    }
    skip_branch_length();
    return id;
  }

  int parse() {
    int root = parse_clade();
    skip_ws();
    if (pos >= text.size() || text[pos] != ';') fail("expected ';'");
    return root;
  }
};

}  // namespace

int PhyloTree::sibling(int node) const {
  int p = parent_[node];
  if (p < 0) throw std::invalid_argument("root has no sibling");
  return left_[p] == node ? right_[p] : left_[p];
}

void PhyloTree::index_tree() {
  const int n_nodes = static_cast<int>(left_.size());
  internal_index_.assign(n_nodes, -1);
  internal_nodes_.clear();
  leaves_under_.assign(n_nodes, {});
  leaf_paths_.assign(leaf_ids_.size(), {});

  // Pre-order walk assigns canonical internal indices and leaf paths.
  struct Frame {
    int node;
    std::vector<PathStep> path;
  };
  std::vector<Frame> stack;
  stack.push_back({root_, {}});
  int leaf_seen = 0;
  leaf_nodes_.assign(leaf_ids_.size(), -1);
  std::vector<int> leaf_order(n_nodes, -1);
  while (!stack.empty()) {
    Frame f = std::move(stack.back());
    stack.pop_back();
    if (is_leaf(f.node)) {
      leaf_order[f.node] = leaf_seen++;
      leaf_paths_[leaf_order[f.node]] = f.path;
      continue;
    }
    int idx = static_cast<int>(internal_nodes_.size());
    internal_index_[f.node] = idx;
    internal_nodes_.push_back(f.node);
    Frame l{left_[f.node], f.path};
    l.path.push_back({idx, true});
    Frame r{right_[f.node], f.path};
    r.path.push_back({idx, false});
    // Push right first so the left subtree is visited first.
    stack.push_back(std::move(r));
    stack.push_back(std::move(l));
  }

  // Leaves were created in left-to-right order already, so leaf_order is the
  // identity on leaf creation order; map node id -> leaf index.
  for (int v = 0; v < n_nodes; ++v)
    if (left_[v] < 0) leaf_nodes_[leaf_order[v]] = v;

  // Membership lists, bottom-up.
  for (int v = n_nodes - 1; v >= 0; --v) {
    if (left_[v] < 0) {
      leaves_under_[v] = {leaf_order[v]};
    } else {
      leaves_under_[v] = leaves_under_[left_[v]];
      leaves_under_[v].insert(leaves_under_[v].end(),
                              leaves_under_[right_[v]].begin(),
                              leaves_under_[right_[v]].end());
      std::sort(leaves_under_[v].begin(), leaves_under_[v].end());
    }
  }
}

std::string PhyloTree::node_table() const {
  std::ostringstream out;
  for (int k = 0; k < num_internal(); ++k) {
    out << k << '\t';
    const auto& members = leaves_under_[internal_nodes_[k]];
    for (size_t j = 0; j < members.size(); ++j) {
      if (j) out << ',';
      out << leaf_ids_[members[j]];
    }
    out << '\n';
  }
  return out.str();
}

PhyloTree parse_newick(const std::string& text, bool resolve_multifurcations) {
  NewickParser parser(text);
  int raw_root = parser.parse();
  auto& raw = parser.nodes;

  // Validate arity; optionally binarize multifurcations left-deep.
  for (size_t v = 0; v < raw.size(); ++v) {
    if (raw[v].children.empty()) continue;
    if (raw[v].children.size() == 1)
      throw std::runtime_error("newick: node with a single child (node " +
                               std::to_string(v) + ")");
    while (raw[v].children.size() > 2) {
      if (!resolve_multifurcations)
        throw std::runtime_error("newick: multifurcation at node " +
                                 std::to_string(v) +
                                 " (strict binary mode)");
      int merged = static_cast<int>(raw.size());
      std::vector<int> first_two(raw[v].children.begin(),
                                 raw[v].children.begin() + 2);
      raw.push_back({first_two, ""});  // may reallocate raw
      auto& ch = raw[v].children;
      ch.erase(ch.begin(), ch.begin() + 2);
      ch.insert(ch.begin(), merged);
    }
  }

  PhyloTree tree;
  const int n = static_cast<int>(raw.size());
  tree.left_.assign(n, -1);
  tree.right_.assign(n, -1);
  tree.parent_.assign(n, -1);
  tree.root_ = raw_root;

  // Re-number nodes in pre-order so leaves come out left-to-right.
  std::vector<int> order;
  order.reserve(n);
  {
    std::vector<int> stack{raw_root};
    while (!stack.empty()) {
      int v = stack.back();
      stack.pop_back();
      order.push_back(v);
      const auto& ch = raw[v].children;
      for (auto it = ch.rbegin(); it != ch.rend(); ++it) stack.push_back(*it);
    }
  }
  std::vector<int> renum(n, -1);
  for (int i = 0; i < n; ++i) renum[order[i]] = i;
  PhyloTree out;
  out.left_.assign(n, -1);
  out.right_.assign(n, -1);
  out.parent_.assign(n, -1);
  out.root_ = renum[raw_root];
  std::set<std::string> seen;
  for (int i = 0; i < n; ++i) {
    int v = order[i];
    if (raw[v].children.empty()) {
      if (!seen.insert(raw[v].label).second)
        throw std::runtime_error("newick: duplicate leaf name '" +
                                 raw[v].label + "'");
      out.leaf_ids_.push_back(raw[v].label);
    } else {
      out.left_[i] = renum[raw[v].children[0]];
      out.right_[i] = renum[raw[v].children[1]];
      out.parent_[renum[raw[v].children[0]]] = i;
      out.parent_[renum[raw[v].children[1]]] = i;
    }
  }
  if (out.leaf_ids_.size() < 2)
    throw std::runtime_error("newick: tree must have at least 2 leaves");
  out.index_tree();
  return out;
}

std::string to_newick(const PhyloTree& tree) {
  std::string out;
  auto emit = [&](auto&& self, int node) -> void {
    if (tree.is_leaf(node)) {
      out += tree.leaf_ids()[tree.leaves_under(node).front()];
      return;
    }
    out += '(';
    self(self, tree.left_child(node));
    out += ',';
    self(self, tree.right_child(node));
    out += ')';
  };
  emit(emit, tree.root());
  out += ';';
  return out;
}

std::vector<std::int64_t> aggregate_counts(const PhyloTree& tree,
                                           std::span<const std::int64_t> counts) {
  if (static_cast<int>(counts.size()) != tree.num_leaves())
    throw std::invalid_argument("aggregate_counts: length mismatch");
  std::vector<std::int64_t> y(tree.num_nodes(), 0);
  for (int j = 0; j < tree.num_leaves(); ++j) {
    if (counts[j] < 0)
      throw std::invalid_argument("aggregate_counts: negative count");
    y[tree.leaf_node(j)] = counts[j];
  }
  // Node ids are pre-order, so children always have larger ids.
  for (int v = tree.num_nodes() - 1; v >= 0; --v)
    if (!tree.is_leaf(v))
      y[v] = y[tree.left_child(v)] + y[tree.right_child(v)];
  return y;
}

std::vector<double> tree_ratio_transform(const PhyloTree& tree,
                                         std::span<const double> p) {
  if (static_cast<int>(p.size()) != tree.num_leaves())
    throw std::invalid_argument("tree_ratio_transform: length mismatch");
  double total = 0;
  for (double v : p) {
    if (v < 0) throw std::invalid_argument("tree_ratio_transform: negative mass");
    total += v;
  }
  if (std::abs(total - 1.0) > 1e-8)
    throw std::invalid_argument("tree_ratio_transform: input not normalized");

  std::vector<double> mass(tree.num_nodes(), 0.0);
  for (int j = 0; j < tree.num_leaves(); ++j)
    mass[tree.leaf_node(j)] = p[j] / total;
  for (int v = tree.num_nodes() - 1; v >= 0; --v)
    if (!tree.is_leaf(v))
      mass[v] = mass[tree.left_child(v)] + mass[tree.right_child(v)];

  std::vector<double> theta(tree.num_internal());
  for (int k = 0; k < tree.num_internal(); ++k) {
    int v = tree.internal_node(k);
    // A zero-mass subtree leaves the ratio unidentified; 1/2 keeps the
    // inverse transform consistent (all zeros below).
    theta[k] = mass[v] > 0 ? mass[tree.left_child(v)] / mass[v] : 0.5;
  }
  return theta;
}

std::vector<double> inverse_tree_ratio_transform(const PhyloTree& tree,
                                                 std::span<const double> theta) {
  if (static_cast<int>(theta.size()) != tree.num_internal())
    throw std::invalid_argument("inverse_tree_ratio_transform: length mismatch");
  for (double t : theta)
    if (!(t >= 0.0 && t <= 1.0))
      throw std::invalid_argument("inverse_tree_ratio_transform: theta outside [0,1]");
  std::vector<double> p(tree.num_leaves());
  for (int j = 0; j < tree.num_leaves(); ++j) {
    double prod = 1.0;
    for (const auto& step : tree.leaf_path(j))
      prod *= step.goes_left ? theta[step.internal_index]
                             : 1.0 - theta[step.internal_index];
    p[j] = prod;
  }
  return p;
}

}  // namespace dtmm
