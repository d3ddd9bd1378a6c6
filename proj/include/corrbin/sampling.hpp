#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "corrbin/process_models.hpp"
#include "corrbin/rng.hpp"

namespace corrbin {

using BinaryMatrix = Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic>;

struct SampleBatch {
  BinaryMatrix values;              // n x m, row = sample, column = component
  std::vector<Component> indices;
  std::uint64_t n = 0;
  SeedLineage lineage;
};

SampleBatch sample_batch(const ProcessModel& model, const std::vector<Component>& indices, std::uint64_t n,
                         SeedLineage lineage);

// Tree leaves are 0-based catalog positions; batch indices are position + 1.
// Nodes deeper than truncation_depth (a level index) are not materialized and
// their leaves collapse from the deepest materialized ancestor.
SampleBatch sample_tree_process(const SkeletonTree& tree, const std::vector<std::size_t>& leaves, std::uint64_t n,
                                SeedLineage lineage, std::size_t truncation_depth = SIZE_MAX);

// n (1 - sqrt(1 - 2 eps_depth)) / 2 for the level at truncation_depth.
double tree_tail_bias(const SkeletonTree& tree, std::uint64_t n, std::size_t truncation_depth = SIZE_MAX);

Eigen::VectorXd empirical_means(const SampleBatch& batch);

double sup_deviation(const SampleBatch& batch, const Eigen::VectorXd& means);

std::string batch_to_csv(const SampleBatch& batch);

// Depth L of the nested chain events in a sample: L >= k with probability 2 eps_k.
std::size_t chain_depth(const ThinChain& chain, const KeyedRng& rng, std::uint64_t sample);

// Value of component i in sample `sample`, read from keyed latents.
int component_value(const ProcessModel& model, const KeyedRng& rng, std::uint64_t sample, Component i);

struct LatentDraw {
  unsigned block = 1;
  std::vector<std::uint8_t> anchor;        // Z_0^(j)
  std::vector<std::uint8_t> block_switch;  // B_k^(j) (BlockMu) or D_k^(j) (BlockNu)
  std::vector<std::uint8_t> block_coin;    // Y_k^(j) (BlockNu)
};

LatentDraw draw_block_latents(const ProcessModel& model, unsigned k, std::uint64_t n, SeedLineage lineage);

// Law of a supremum of deviations |count/n - 1/2| over components with mean
// 1/2. Support point i is (n mod 2 + 2i) / (2n).
struct SupLaw {
  std::uint64_t n = 1;
  std::vector<double> log_cdf;  // log P(sup <= support(i))

  double support(std::size_t i) const { return static_cast<double>(n % 2 + 2 * i) / (2.0 * static_cast<double>(n)); }
  std::size_t size() const { return log_cdf.size(); }
  double expectation() const;
  // Smallest support point whose CDF reaches u.
  double draw(double u) const;
  std::vector<double> pmf() const;

  static SupLaw point_mass(std::uint64_t n, std::uint64_t ones);
  static SupLaw at_zero_law(std::uint64_t n);  // log CDF identically 0 (sup <= smallest point)
};

// Log pmf of fixed + Bin(a1, q1) + Bin(a0, q0) over counts 0..n.
std::vector<double> count_log_pmf(std::uint64_t n, std::uint64_t fixed, std::uint64_t a1, double q1, std::uint64_t a0,
                                  double q0);

// Law of the max of m iid components with the given count law; log_m = log m.
SupLaw iid_sup_law(std::uint64_t n, const std::vector<double>& log_pmf, double log_m);

// Pointwise product of CDFs (law of the max of independent suprema).
void combine_into(SupLaw& acc, const SupLaw& other);

enum class SupMode { ExactExpectation, SampledMax };

// Conditional law of sup over the block given its latents; block size is
// |S_k| (or the override).
SupLaw collapsed_block_sup(const ProcessModel& model, unsigned k, const LatentDraw& latents, std::uint64_t n);

struct CollapsedReplicate {
  double statistic = 0.0;   // E[sup | latents] or one sampled sup
  unsigned groups = 0;      // blocks / groups processed
  double residual = 0.0;    // bound on what the unprocessed tail could add
};

// One replicate of the collapsed estimator (BlockMu, BlockNu, ThinChain,
// WideTree, Product).
CollapsedReplicate collapsed_replicate(const ProcessModel& model, std::uint64_t n, SeedLineage lineage, SupMode mode);

// Exact Delta_n of a product measure with the given means.
double exact_product_delta(const std::vector<double>& means, std::uint64_t n);

}  // namespace corrbin
