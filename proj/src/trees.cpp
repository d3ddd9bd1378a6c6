#include "corrbin/trees.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <regex>
#include <set>
#include <sstream>

#include "corrbin/error.hpp"
#include "corrbin/io.hpp"

namespace corrbin {

std::vector<std::uint64_t> order_sequence(unsigned r) {
  std::vector<std::uint64_t> order{0};
  for (unsigned layer = 1; layer <= r; ++layer) {
    std::vector<std::uint64_t> next;
    next.reserve(order.size() * 2);
    for (auto i : order) next.push_back(2 * i);
    for (auto i : order) next.push_back(2 * i + 1);
    order.swap(next);
  }
  return order;
}

std::size_t SkeletonTree::deepest_level_index() const {
  std::size_t deepest = 0;
  for (const auto& node : nodes) deepest = std::max(deepest, node.level_index);
  return deepest;
}

std::uint64_t budget_through_level(const LevelCountSequence& sequence, std::size_t max_level) {
  auto disc = sequence.discontinuities();
  if (disc) max_level = std::min(max_level, *disc);
  return sequence.count(max_level + 1) - 1;
}

SkeletonTree build_skeleton(const LevelRule& levels, const CountRule& counts, std::uint64_t split_budget) {
  SkeletonTree tree;
  tree.sequence = LevelCountSequence{levels, counts};
  tree.sequence.validate();
  tree.split_budget = split_budget;
  const auto& seq = tree.sequence;
  const auto disc = seq.discontinuities();
  auto defined = [&](std::size_t k) { return !disc || k <= *disc; };

  tree.nodes.push_back(TreeNode{});
  tree.edges.push_back(TreeEdge{0, kNoNode, 0, 0});
  tree.nodes[0].children.push_back(0);

  std::size_t k = 1;
  std::uint64_t m = 1;
  auto settle = [&] {
    while (defined(k) && seq.count(k + 1) == m) ++k;
    if (defined(k) && seq.count(k + 1) < m) throw Error(ErrorCode::InconsistentSequences, "counts decrease");
  };
  settle();

  std::vector<std::size_t> current{0};
  unsigned r = 0;
  while (tree.splits < split_budget && defined(k)) {
    tree.layer_start.push_back(k);
    std::vector<std::size_t> next(current.size() * 2, kNoNode);
    bool complete = true;
    for (auto s : order_sequence(r)) {
      if (tree.splits == split_budget || !defined(k)) {
        complete = false;
        break;
      }
      const std::size_t e = current[s];
      const std::size_t u = tree.edges[e].parent;
      const double eps = seq.level(k);
      if (tree.nodes[u].level_index < k) {
        const std::size_t v = tree.nodes.size();
        TreeNode node;
        node.level_index = k;
        node.serial = v + 1;
        node.level = eps;
        node.parent = u;
        node.parent_edge = e;
        node.depth = tree.nodes[u].depth + 1;
        tree.edges[e].child = v;
        const std::size_t a = tree.edges.size();
        tree.edges.push_back(TreeEdge{v, kNoNode, r + 1, 2 * s});
        tree.edges.push_back(TreeEdge{v, kNoNode, r + 1, 2 * s + 1});
        node.children = {a, a + 1};
        tree.nodes.push_back(std::move(node));
        next[2 * s] = a;
        next[2 * s + 1] = a + 1;
      } else {
        // Top node already sits at eps_k: the edge is replaced by two edges
        // leaving the same node, in the replaced edge's position.
        tree.edges[e].layer = r + 1;
        tree.edges[e].slot = 2 * s;
        const std::size_t b = tree.edges.size();
        tree.edges.push_back(TreeEdge{u, kNoNode, r + 1, 2 * s + 1});
        auto& siblings = tree.nodes[u].children;
        siblings.insert(std::find(siblings.begin(), siblings.end(), e) + 1, b);
        next[2 * s] = e;
        next[2 * s + 1] = b;
      }
      ++m;
      ++tree.splits;
      if (m == seq.count(k + 1)) {
        ++k;
        settle();
      }
    }
    if (!complete) break;
    current.swap(next);
    ++r;
  }

  const std::size_t deepest = tree.deepest_level_index();
  for (std::size_t i = 0; i <= deepest; ++i) tree.levels.push_back(seq.level(i));
  for (std::size_t i = 1; i <= deepest + 1; ++i) tree.counts.push_back(seq.count(i));

  std::vector<char> taken(tree.edges.size(), 0);
  for (const auto& node : tree.nodes) {
    std::size_t e = node.children.front();
    while (!tree.edges[e].open()) e = tree.nodes[tree.edges[e].child].children.front();
    if (!taken[e]) {
      taken[e] = 1;
      tree.leaves.push_back(e);
    }
  }
  for (std::size_t e = 0; e < tree.edges.size(); ++e) {
    if (tree.edges[e].open() && !taken[e]) tree.leaves.push_back(e);
  }
  return tree;
}

std::uint64_t exact_tree_cover(const SkeletonTree& tree, double eps) {
  if (!(eps > 0.0) || eps > 0.5) throw Error(ErrorCode::InvalidSpec, "level must lie in (0, 1/2]");
  for (const auto& node : tree.nodes) {
    if (node.level == eps) throw Error(ErrorCode::LevelCoincidesWithNode, "eps = " + format_double(eps));
  }
  std::uint64_t crossing = 0;
  for (std::size_t e = 0; e < tree.edges.size(); ++e) {
    if (tree.top_level(e) > eps && tree.bottom_level(e) < eps) ++crossing;
  }
  return crossing;
}

LeafPath leaf_path(const SkeletonTree& tree, std::size_t leaf) {
  if (leaf >= tree.leaves.size()) throw Error(ErrorCode::UnknownLeaf, std::to_string(leaf));
  LeafPath path;
  path.tail_edge = tree.leaves[leaf];
  for (std::size_t v = tree.edges[path.tail_edge].parent; v != kNoNode; v = tree.nodes[v].parent) path.nodes.push_back(v);
  std::reverse(path.nodes.begin(), path.nodes.end());
  return path;
}

namespace {

std::size_t common_ancestor(const SkeletonTree& tree, std::size_t a, std::size_t b) {
  while (tree.nodes[a].depth > tree.nodes[b].depth) a = tree.nodes[a].parent;
  while (tree.nodes[b].depth > tree.nodes[a].depth) b = tree.nodes[b].parent;
  while (a != b) {
    a = tree.nodes[a].parent;
    b = tree.nodes[b].parent;
  }
  return a;
}

}  // namespace

double leaf_distance(const SkeletonTree& tree, std::size_t leaf_a, std::size_t leaf_b) {
  if (leaf_a >= tree.leaves.size()) throw Error(ErrorCode::UnknownLeaf, std::to_string(leaf_a));
  if (leaf_b >= tree.leaves.size()) throw Error(ErrorCode::UnknownLeaf, std::to_string(leaf_b));
  if (leaf_a == leaf_b) return 0.0;
  const std::size_t a = tree.edges[tree.leaves[leaf_a]].parent;
  const std::size_t b = tree.edges[tree.leaves[leaf_b]].parent;
  return tree.nodes[common_ancestor(tree, a, b)].level;
}

double leaf_distance(const SkeletonTree& tree, const LeafPath& a, const LeafPath& b) {
  if (a.tail_edge == b.tail_edge) return 0.0;
  std::size_t shared = 0;
  while (shared < a.nodes.size() && shared < b.nodes.size() && a.nodes[shared] == b.nodes[shared]) ++shared;
  if (shared == 0) throw Error(ErrorCode::UnknownLeaf, "paths do not share the root");
  return tree.nodes[a.nodes[shared - 1]].level;
}

double edge_switch_probability(const SkeletonTree& tree, std::size_t node) {
  const auto& v = tree.nodes.at(node);
  if (v.parent == kNoNode) return 1.0;
  const double below = std::sqrt(1.0 - 2.0 * v.level);
  const double above = std::sqrt(std::max(0.0, 1.0 - 2.0 * tree.nodes[v.parent].level));
  return (below - above) / below;
}

double tail_refresh_probability(double eps) { return 1.0 - std::sqrt(std::max(0.0, 1.0 - 2.0 * eps)); }

std::uint64_t balance_audit(const SkeletonTree& tree) {
  std::set<double> node_levels;
  for (const auto& node : tree.nodes) node_levels.insert(node.level);
  std::vector<double> sorted(node_levels.begin(), node_levels.end());  // ascending
  std::uint64_t worst = 0;
  for (unsigned r = 0; r < tree.layer_start.size(); ++r) {
    const double start = tree.sequence.level(tree.layer_start[r]);
    std::vector<double> probes;
    for (std::size_t i = 0; i < sorted.size() && sorted[i] < start; ++i) {
      const double below = i == 0 ? 0.0 : sorted[i - 1];
      probes.push_back(0.5 * (below + sorted[i]));
    }
    if (!sorted.empty() && sorted.front() >= start) probes.push_back(0.5 * start);
    const std::uint64_t width = std::uint64_t{1} << r;
    for (double eps : probes) {
      std::vector<std::uint64_t> per(width, 0);
      for (std::size_t e = 0; e < tree.edges.size(); ++e) {
        if (!(tree.top_level(e) > eps && tree.bottom_level(e) < eps)) continue;
        const auto& edge = tree.edges[e];
        if (edge.layer < r) continue;
        ++per[edge.slot >> (edge.layer - r)];
      }
      auto [lo, hi] = std::minmax_element(per.begin(), per.end());
      worst = std::max(worst, *hi - *lo);
    }
  }
  return worst;
}

std::string export_dot(const SkeletonTree& tree) {
  std::ostringstream out;
  out << "digraph skeleton {\n";
  for (std::size_t v = 0; v < tree.nodes.size(); ++v) {
    const auto& node = tree.nodes[v];
    out << "  n" << v << " [label=\"v(" << node.level_index << "," << node.serial << ")\", level=\""
        << format_double(node.level) << "\"];\n";
  }
  std::vector<std::size_t> leaf_of(tree.edges.size(), kNoNode);
  for (std::size_t q = 0; q < tree.leaves.size(); ++q) leaf_of[tree.leaves[q]] = q;
  for (std::size_t q = 0; q < tree.leaves.size(); ++q) out << "  l" << q << " [label=\"\", shape=point];\n";
  for (std::size_t e = 0; e < tree.edges.size(); ++e) {
    const auto& edge = tree.edges[e];
    if (edge.open()) {
      out << "  n" << edge.parent << " -> l" << leaf_of[e] << " [label=\"tail\"];\n";
    } else {
      out << "  n" << edge.parent << " -> n" << edge.child << " [label=\""
          << format_double(tree.top_level(e) - tree.bottom_level(e)) << "\"];\n";
    }
  }
  out << "}\n";
  return out.str();
}

DotGraph parse_dot(const std::string& text) {
  static const std::regex node_re(R"re(^\s*(\w+)\s*\[label="([^"]*)\".*\];\s*$)re");
  static const std::regex edge_re(R"re(^\s*(\w+)\s*->\s*(\w+)\s*\[label="([^"]*)"\];\s*$)re");
  DotGraph graph;
  std::map<std::string, std::size_t> position;
  std::istringstream in(text);
  std::string line;
  std::smatch match;
  while (std::getline(in, line)) {
    if (std::regex_match(line, match, edge_re)) {
      auto a = position.find(match[1].str());
      auto b = position.find(match[2].str());
      if (a == position.end() || b == position.end()) throw Error(ErrorCode::Io, "edge before node: " + line);
      graph.edges.emplace_back(a->second, b->second);
      graph.edge_labels.push_back(match[3].str());
    } else if (std::regex_match(line, match, node_re)) {
      position[match[1].str()] = graph.node_labels.size();
      graph.node_labels.push_back(match[2].str());
    }
  }
  return graph;
}

nlohmann::json tree_to_json(const SkeletonTree& tree) {
  nlohmann::json j;
  j["levels"] = tree.levels;
  j["counts"] = tree.counts;
  j["split_budget"] = tree.split_budget;
  j["splits"] = tree.splits;
  j["nodes"] = nlohmann::json::array();
  for (std::size_t v = 0; v < tree.nodes.size(); ++v) {
    const auto& node = tree.nodes[v];
    j["nodes"].push_back({{"id", v},
                          {"k", node.level_index},
                          {"n", node.serial},
                          {"level", node.level},
                          {"parent", node.parent == kNoNode ? nlohmann::json(nullptr) : nlohmann::json(node.parent)}});
  }
  j["edges"] = nlohmann::json::array();
  for (std::size_t e = 0; e < tree.edges.size(); ++e) {
    const auto& edge = tree.edges[e];
    j["edges"].push_back({{"id", e},
                          {"parent", edge.parent},
                          {"child", edge.open() ? nlohmann::json(nullptr) : nlohmann::json(edge.child)},
                          {"r", edge.layer},
                          {"s", edge.slot},
                          {"length", tree.top_level(e) - tree.bottom_level(e)}});
  }
  j["leaves"] = tree.leaves;
  return j;
}

ThinChain::ThinChain(LevelCountSequence sequence, std::uint64_t components) : sequence_(std::move(sequence)) {
  sequence_.validate();
  const auto disc = sequence_.discontinuities();
  levels_.push_back(0.5);
  counts_.push_back(1);
  constexpr std::size_t kMaxGroups = 10'000'000;
  for (std::size_t k = 1;; ++k) {
    if (disc && k > *disc) {
      finite_ = true;
      break;
    }
    if (counts_.back() >= components && 2.0 * levels_.back() < 1e-20) break;
    if (k > kMaxGroups) throw Error(ErrorCode::InconsistentSequences, "chain group table too large");
    const double eps = sequence_.level(k);
    const std::uint64_t next = sequence_.count(k + 1);
    if (!(eps < levels_.back()) && k > 1) throw Error(ErrorCode::InconsistentSequences, "levels must strictly decrease");
    if (next < counts_.back()) throw Error(ErrorCode::InconsistentSequences, "counts must be nondecreasing");
    levels_.push_back(eps);
    counts_.push_back(next);
  }
}

std::size_t ThinChain::group_of(Component i) const {
  if (i == 0 || i > counts_.back()) throw Error(ErrorCode::IndexOutOfTruncation, std::to_string(i));
  if (i == 1) return 0;
  auto it = std::lower_bound(counts_.begin(), counts_.end(), i);
  return static_cast<std::size_t>(it - counts_.begin());
}

double ThinChain::xi(Component i, Component j) const {
  if (i == j) return 0.0;
  const std::size_t gi = group_of(i);
  const std::size_t gj = group_of(j);
  const std::size_t g = gi == 0 ? gj : (gj == 0 ? gi : std::min(gi, gj));
  return level(g);
}

ThinChain thin_chain_build(const LevelRule& levels, const CountRule& counts, std::uint64_t components) {
  return ThinChain(LevelCountSequence{levels, counts}, components);
}

}  // namespace corrbin
