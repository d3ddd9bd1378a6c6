#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "corrbin/metrics.hpp"
#include "corrbin/trees.hpp"

namespace corrbin {

// Sequential greedy cover in view order: an index becomes a center when no
// earlier center lies within eps. Centers are pairwise more than eps apart.
std::vector<Component> greedy_cover(const MetricView& view, Metric metric, double eps);

// Size of a greedy farthest-point set with pairwise distance > eps, starting at
// the first index; ties go to the lowest position.
std::size_t farthest_point_packing(const MetricView& view, Metric metric, double eps);

// Largest eps-separated set found: farthest-point set or greedy centers.
std::size_t packing_lower(const MetricView& view, Metric metric, double eps);

// Edges with top > eps >= bottom that carry a selected leaf: the closed-ball
// cover number of those leaves (all leaves when `leaves` is null).
std::uint64_t tree_covering_number(const SkeletonTree& tree, double eps,
                                   const std::vector<std::size_t>* leaves = nullptr);

// Dyadic points 2^-k down past half the smallest positive distance, merged with
// log-spaced points over the same range; decreasing, starts at 1.
std::vector<double> default_epsilon_grid(const MetricView& view, Metric metric, std::size_t per_decade = 8);

struct Nudge {
  double requested = 0.0;
  double used = 0.0;
};

struct CoveringCurve {
  Metric metric = Metric::Xi;
  std::vector<double> requested_grid;  // decreasing, before nudges
  std::vector<double> epsilon_grid;    // grid actually evaluated
  std::vector<std::uint64_t> n_upper;  // running-min greedy cover sizes
  std::vector<std::uint64_t> n_lower;  // packing lower bounds
  std::optional<std::vector<std::uint64_t>> exact;
  std::vector<Nudge> nudges;
  std::uint64_t distinct_points = 0;  // cover size below the smallest positive distance
};

struct EntropyIntegral {
  double value = 0.0;        // trapezoid on the grid plus the analytic piece below it
  double left_sum = 0.0;     // Riemann sums bracketing the monotone curve on the grid
  double right_sum = 0.0;
  double dyadic_lower = 0.0;  // sum 2^-k-1 N(2^-k)
  double dyadic_upper = 0.0;  // sum 2^-k N(2^-k)
  double resolution = 0.0;    // largest ratio between neighbouring grid points
  bool grid_too_coarse = false;  // Riemann gap above 10% of the value
};

struct CoveringReport {
  CoveringCurve xi_curve;
  CoveringCurve rho_curve;
  EntropyIntegral c_mu;  // integral of N_xi over (0, 1]
  EntropyIntegral d_mu;  // integral of sqrt(log N_rho) over (0, 1]
};

// Grid points within 1e-9 of a tree node level move down by 1e-9 when a tree is given.
CoveringCurve covering_curve(const MetricView& view, Metric metric, std::vector<double> grid,
                             const SkeletonTree* tree = nullptr, unsigned threads = 0);

// Integrates g(N) with g(N) = N for C_mu and sqrt(log N) for D_mu.
EntropyIntegral entropy_integral(const CoveringCurve& curve, bool sqrt_log);

CoveringReport covering_report(const MetricView& view, const SkeletonTree* tree = nullptr, unsigned threads = 0);

// Rows: metric,epsilon,n_lower,n_upper,exact ("" when absent).
std::string covering_to_csv(const CoveringReport& report);

}  // namespace corrbin
