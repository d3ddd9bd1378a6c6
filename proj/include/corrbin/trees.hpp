#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "corrbin/sequences.hpp"
#include "json.hpp"

namespace corrbin {

using Component = std::uint64_t;

inline constexpr std::size_t kNoNode = std::numeric_limits<std::size_t>::max();

// Order(0) = (0); Order(r) = (2i for i in Order(r-1)) ++ (2i+1 for i in Order(r-1)).
std::vector<std::uint64_t> order_sequence(unsigned r);

struct TreeNode {
  std::size_t level_index = 0;  // k: the node sits at eps_k
  std::size_t serial = 1;       // n in v(k, n)
  double level = 0.5;
  std::size_t parent = kNoNode;
  std::size_t parent_edge = kNoNode;
  std::size_t depth = 0;              // number of edges from the root
  std::vector<std::size_t> children;  // edge ids, creation (left-to-right) order
};

struct TreeEdge {
  std::size_t parent = 0;
  std::size_t child = kNoNode;  // kNoNode: open edge, descends to level 0
  unsigned layer = 0;           // r in e(r, s)
  std::uint64_t slot = 0;       // s in e(r, s)

  bool open() const { return child == kNoNode; }
};

// Equidistant skeleton tree. Catalog leaves are the open edges of the finite
// build; leaf q descends through `leaves[q]` along leftmost edges forever.
struct SkeletonTree {
  LevelCountSequence sequence;
  std::vector<double> levels;           // eps_0 = 1/2, eps_1, ..., eps_K used by the build
  std::vector<std::uint64_t> counts;    // N_1, ..., N_{K+1}
  std::vector<TreeNode> nodes;          // nodes[0] is the root v(0,1)
  std::vector<TreeEdge> edges;
  std::vector<std::size_t> leaves;      // open edge ids in catalog order
  std::vector<std::size_t> layer_start; // level index k_r at which layer r started
  std::uint64_t split_budget = 0;
  std::uint64_t splits = 0;

  std::size_t leaf_count() const { return leaves.size(); }
  // Level of the node an edge hangs from / ends at (0 for open edges).
  double top_level(std::size_t edge) const { return nodes[edges[edge].parent].level; }
  double bottom_level(std::size_t edge) const {
    return edges[edge].open() ? 0.0 : nodes[edges[edge].child].level;
  }
  std::size_t deepest_level_index() const;
};

SkeletonTree build_skeleton(const LevelRule& levels, const CountRule& counts, std::uint64_t split_budget);

// Split budget that completes every split at levels eps_1..eps_max_level.
std::uint64_t budget_through_level(const LevelCountSequence& sequence, std::size_t max_level);

// Number of edges crossing level eps. Throws LevelCoincidesWithNode when eps
// equals a node level.
std::uint64_t exact_tree_cover(const SkeletonTree& tree, double eps);

struct LeafPath {
  std::vector<std::size_t> nodes;  // root first; last entry is the node the open edge hangs from
  std::size_t tail_edge = 0;       // the open edge carrying the infinite tail
};

LeafPath leaf_path(const SkeletonTree& tree, std::size_t leaf);

// Level of the last common node of two catalog leaves (0 when equal).
double leaf_distance(const SkeletonTree& tree, std::size_t leaf_a, std::size_t leaf_b);
double leaf_distance(const SkeletonTree& tree, const LeafPath& a, const LeafPath& b);

// Switch probability of the edge ending at `node`.
double edge_switch_probability(const SkeletonTree& tree, std::size_t node);

// Probability that an infinite tail starting at a node of level eps refreshes
// to an independent coin: 1 - sqrt(1 - 2 eps).
double tail_refresh_probability(double eps);

// Max over audited layers r and levels below eps_{k_r} of
// (max - min) crossing counts among the 2^r layer subtrees.
std::uint64_t balance_audit(const SkeletonTree& tree);

std::string export_dot(const SkeletonTree& tree);

struct DotGraph {
  std::vector<std::string> node_labels;
  std::vector<std::pair<std::size_t, std::size_t>> edges;  // positions in node_labels
  std::vector<std::string> edge_labels;
};

DotGraph parse_dot(const std::string& text);

nlohmann::json tree_to_json(const SkeletonTree& tree);

// Thin chain: component 1 is Z_1; components in group k
// (N_k < i <= N_{k+1}) equal Z_i on E_k and Z_1 otherwise, with nested
// events E_k = E_{k-1} and {U_k <= eps_k / eps_{k-1}}.
class ThinChain {
 public:
  // Group tables are materialized until they cover `components` indices and
  // the event probability drops below 1e-20 (or the sequence ends).
  ThinChain(LevelCountSequence sequence, std::uint64_t components);

  const LevelCountSequence& sequence() const { return sequence_; }
  double level(std::size_t k) const { return k == 0 ? 0.5 : levels_[k]; }
  double event_probability(std::size_t k) const { return 2.0 * level(k); }
  double step_threshold(std::size_t k) const { return level(k) / level(k - 1); }
  std::size_t groups() const { return levels_.size() - 1; }
  // First and last component of group k.
  Component group_first(std::size_t k) const { return counts_[k - 1] + 1; }
  Component group_last(std::size_t k) const { return counts_[k]; }
  std::uint64_t group_size(std::size_t k) const { return counts_[k] - counts_[k - 1]; }
  // 0 for component 1, else the k with N_k < i <= N_{k+1}.
  std::size_t group_of(Component i) const;
  // Total components when the sequence is finite, else the materialized count.
  std::uint64_t materialized_components() const { return counts_.back(); }
  bool finite() const { return finite_; }
  double xi(Component i, Component j) const;

 private:
  LevelCountSequence sequence_;
  std::vector<double> levels_;          // index 0 = 1/2
  std::vector<std::uint64_t> counts_;   // counts_[k-1] = N_k
  bool finite_ = false;
};

ThinChain thin_chain_build(const LevelRule& levels, const CountRule& counts, std::uint64_t components);

}  // namespace corrbin
