#include "corrbin/covering.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "corrbin/error.hpp"
#include "corrbin/io.hpp"
#include "corrbin/parallel.hpp"

namespace corrbin {

namespace {

std::vector<std::size_t> greedy_positions(const MetricView& view, Metric metric, double eps) {
  std::vector<std::size_t> centers;
  for (std::size_t a = 0; a < view.size(); ++a) {
    const bool covered = std::any_of(centers.begin(), centers.end(),
                                     [&](std::size_t c) { return view.distance_at(metric, c, a) <= eps; });
    if (!covered) centers.push_back(a);
  }
  return centers;
}

double smallest_positive_distance(const MetricView& view, Metric metric) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a < view.size(); ++a)
    for (std::size_t b = a + 1; b < view.size(); ++b) {
      const double d = view.distance_at(metric, a, b);
      if (d > 0.0) best = std::min(best, d);
    }
  return best;
}

}  // namespace

std::vector<Component> greedy_cover(const MetricView& view, Metric metric, double eps) {
  if (!(eps > 0.0)) throw Error(ErrorCode::InvalidSpec, "cover radius must be positive");
  std::vector<Component> out;
  for (auto a : greedy_positions(view, metric, eps)) out.push_back(view.indices[a]);
  return out;
}

std::size_t farthest_point_packing(const MetricView& view, Metric metric, double eps) {
  if (view.size() == 0) return 0;
  std::vector<double> gap(view.size());
  for (std::size_t a = 0; a < view.size(); ++a) gap[a] = view.distance_at(metric, 0, a);
  std::size_t chosen = 1;
  for (;;) {
    std::size_t best = 0;
    for (std::size_t a = 1; a < view.size(); ++a) {
      if (gap[a] > gap[best]) best = a;
    }
    if (!(gap[best] > eps)) break;
    ++chosen;
    for (std::size_t a = 0; a < view.size(); ++a) gap[a] = std::min(gap[a], view.distance_at(metric, best, a));
  }
  return chosen;
}

std::size_t packing_lower(const MetricView& view, Metric metric, double eps) {
  if (!(eps > 0.0)) throw Error(ErrorCode::InvalidSpec, "packing radius must be positive");
  return std::max(farthest_point_packing(view, metric, eps), greedy_positions(view, metric, eps).size());
}

std::uint64_t tree_covering_number(const SkeletonTree& tree, double eps, const std::vector<std::size_t>* leaves) {
  std::vector<char> selected(tree.edges.size(), leaves ? 0 : 1);
  std::vector<char> marked(tree.nodes.size(), leaves ? 0 : 1);
  if (leaves) {
    for (auto q : *leaves) {
      if (q >= tree.leaf_count()) throw Error(ErrorCode::UnknownLeaf, std::to_string(q));
      selected[tree.leaves[q]] = 1;
      for (std::size_t v = tree.edges[tree.leaves[q]].parent; v != kNoNode && !marked[v]; v = tree.nodes[v].parent) {
        marked[v] = 1;
      }
    }
  }
  if (eps >= tree.nodes[0].level) return marked[0] ? 1 : 0;
  std::uint64_t count = 0;
  for (std::size_t e = 0; e < tree.edges.size(); ++e) {
    const bool carries = tree.edges[e].open() ? selected[e] : marked[tree.edges[e].child];
    if (carries && tree.top_level(e) > eps && eps >= tree.bottom_level(e)) ++count;
  }
  return count;
}

std::vector<double> default_epsilon_grid(const MetricView& view, Metric metric, std::size_t per_decade) {
  const double dmin = smallest_positive_distance(view, metric);
  int deepest = 1;
  while (std::isfinite(dmin) && std::ldexp(1.0, -deepest) >= dmin / 2.0) ++deepest;
  std::vector<double> grid;
  for (int k = 0; k <= deepest; ++k) grid.push_back(std::ldexp(1.0, -k));
  const double floor = std::ldexp(1.0, -deepest);
  const auto steps = static_cast<std::size_t>(std::ceil(-std::log10(floor) * static_cast<double>(per_decade)));
  for (std::size_t s = 1; s < steps; ++s) {
    grid.push_back(std::pow(10.0, -static_cast<double>(s) / static_cast<double>(per_decade)));
  }
  std::sort(grid.begin(), grid.end(), std::greater<>());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  while (grid.back() < floor) grid.pop_back();
  return grid;
}

CoveringCurve covering_curve(const MetricView& view, Metric metric, std::vector<double> grid,
                             const SkeletonTree* tree, unsigned threads) {
  if (grid.empty()) throw Error(ErrorCode::InvalidSpec, "empty epsilon grid");
  std::sort(grid.begin(), grid.end(), std::greater<>());
  CoveringCurve curve;
  curve.metric = metric;
  curve.requested_grid = grid;
  std::vector<std::size_t> leaves;
  if (tree) {
    std::set<double> node_levels;
    for (const auto& node : tree->nodes) node_levels.insert(node.level);
    for (auto& eps : grid) {
      const auto near = node_levels.lower_bound(eps - 1e-9);
      if (near != node_levels.end() && std::abs(*near - eps) < 1e-9) {
        curve.nudges.push_back({eps, eps - 1e-9});
        eps -= 1e-9;
      }
    }
    for (auto i : view.indices) leaves.push_back(i - 1);
  }
  curve.epsilon_grid = grid;
  const std::size_t points = grid.size();
  std::vector<std::uint64_t> greedy(points), packing(points);
  parallel_for(points, threads ? threads : default_threads(), [&](std::size_t g) {
    greedy[g] = greedy_positions(view, metric, grid[g]).size();
    packing[g] = std::max<std::uint64_t>(greedy[g], farthest_point_packing(view, metric, grid[g]));
  });
  curve.n_upper = greedy;
  for (std::size_t g = points - 1; g-- > 0;) curve.n_upper[g] = std::min(curve.n_upper[g], curve.n_upper[g + 1]);
  curve.n_lower = packing;
  if (tree && metric == Metric::Xi) {
    std::vector<std::uint64_t> exact(points);
    for (std::size_t g = 0; g < points; ++g) exact[g] = tree_covering_number(*tree, grid[g], &leaves);
    curve.exact = exact;
  }
  curve.distinct_points = greedy_positions(view, metric, 0.0).size();
  return curve;
}

EntropyIntegral entropy_integral(const CoveringCurve& curve, bool sqrt_log) {
  const auto g = [&](std::uint64_t n) {
    const double v = static_cast<double>(std::max<std::uint64_t>(n, 1));
    return sqrt_log ? std::sqrt(std::log(v)) : v;
  };
  const auto& eps = curve.epsilon_grid;
  EntropyIntegral out;
  // Only the part of the grid inside (0, 1] contributes.
  std::size_t first = 0;
  while (first < eps.size() && eps[first] > 1.0) ++first;
  const double below = g(curve.distinct_points);
  double value = 0.0, left = 0.0, right = 0.0, resolution = 1.0;
  if (first < eps.size()) {
    // from 1 down to the first grid point inside (0, 1]
    const double top = first > 0 ? g(curve.n_upper[first - 1]) : g(curve.n_upper[first]);
    const double width = 1.0 - eps[first];
    value += width * g(curve.n_upper[first]);
    left += width * g(curve.n_upper[first]);
    right += width * top;
    for (std::size_t i = first; i + 1 < eps.size(); ++i) {
      const double w = eps[i] - eps[i + 1];
      const double hi = g(curve.n_upper[i + 1]), lo = g(curve.n_upper[i]);
      value += w * (hi + lo) / 2.0;
      left += w * hi;
      right += w * lo;
      resolution = std::max(resolution, eps[i] / eps[i + 1]);
    }
    value += eps.back() * below;
    left += eps.back() * below;
    right += eps.back() * below;
  } else {
    value = left = right = below;
  }
  out.value = value;
  out.left_sum = left;
  out.right_sum = right;
  out.resolution = resolution;
  out.grid_too_coarse = left - right > 0.1 * value;
  // dyadic sums from the grid points requested at 2^-k
  int k = 0;
  double last = g(curve.n_upper.front());
  for (std::size_t i = 0; i < curve.requested_grid.size(); ++i) {
    if (curve.requested_grid[i] != std::ldexp(1.0, -k)) continue;
    last = g(curve.n_upper[i]);
    out.dyadic_lower += std::ldexp(last, -k - 1);
    out.dyadic_upper += std::ldexp(last, -k);
    ++k;
  }
  // below the last dyadic point the curve is at its floor
  out.dyadic_lower += std::ldexp(below, -k);
  out.dyadic_upper += std::ldexp(below, -k + 1);
  return out;
}

CoveringReport covering_report(const MetricView& view, const SkeletonTree* tree, unsigned threads) {
  CoveringReport report;
  report.xi_curve = covering_curve(view, Metric::Xi, default_epsilon_grid(view, Metric::Xi), tree, threads);
  report.rho_curve = covering_curve(view, Metric::Rho, default_epsilon_grid(view, Metric::Rho), nullptr, threads);
  report.c_mu = entropy_integral(report.xi_curve, false);
  report.d_mu = entropy_integral(report.rho_curve, true);
  return report;
}

std::string covering_to_csv(const CoveringReport& report) {
  std::ostringstream out;
  out << "metric,epsilon,n_lower,n_upper,exact\n";
  for (const auto* curve : {&report.xi_curve, &report.rho_curve}) {
    for (std::size_t g = 0; g < curve->epsilon_grid.size(); ++g) {
      out << to_string(curve->metric) << ',' << format_double(curve->epsilon_grid[g]) << ',' << curve->n_lower[g]
          << ',' << curve->n_upper[g] << ',';
      if (curve->exact) out << (*curve->exact)[g];
      out << '\n';
    }
  }
  return out.str();
}

}  // namespace corrbin
