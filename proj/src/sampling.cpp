#include "corrbin/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>

#include "corrbin/error.hpp"
#include "corrbin/io.hpp"

namespace corrbin {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log_add(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  const double hi = std::max(a, b);
  return hi + std::log1p(std::exp(std::min(a, b) - hi));
}

std::vector<double> binomial_log_pmf(std::uint64_t trials, double q) {
  std::vector<double> out(trials + 1, kNegInf);
  if (q <= 0.0) {
    out[0] = 0.0;
    return out;
  }
  if (q >= 1.0) {
    out[trials] = 0.0;
    return out;
  }
  const double lq = std::log(q), lr = std::log1p(-q);
  const double lt = std::lgamma(static_cast<double>(trials) + 1.0);
  for (std::uint64_t c = 0; c <= trials; ++c) {
    out[c] = lt - std::lgamma(static_cast<double>(c) + 1.0) - std::lgamma(static_cast<double>(trials - c) + 1.0) +
             static_cast<double>(c) * lq + static_cast<double>(trials - c) * lr;
  }
  return out;
}

// Per-sample cache of shared latents, filled on demand.
struct RowCache {
  int anchor = -1;
  std::size_t depth = SIZE_MAX;
  std::vector<int> sources;
  std::vector<signed char> nodes;
};

int tree_node_value(const SkeletonTree& tree, const KeyedRng& rng, std::uint64_t sample, std::size_t v,
                    std::vector<signed char>& cache) {
  if (cache.empty()) cache.assign(tree.nodes.size(), -1);
  std::vector<std::size_t> pending;
  std::size_t u = v;
  while (cache[u] < 0) {
    pending.push_back(u);
    if (tree.nodes[u].parent == kNoNode) break;
    u = tree.nodes[u].parent;
  }
  for (auto it = pending.rbegin(); it != pending.rend(); ++it) {
    const std::size_t w = *it;
    const auto& node = tree.nodes[w];
    if (node.parent == kNoNode) {
      cache[w] = static_cast<signed char>(rng.coin(sample, Tag::NodeZ, w));
    } else if (rng.uniform(sample, Tag::NodeU, w) >= edge_switch_probability(tree, w)) {
      cache[w] = cache[node.parent];
    } else {
      cache[w] = static_cast<signed char>(rng.coin(sample, Tag::NodeZ, w));
    }
  }
  return cache[v];
}

// Deepest ancestor-or-self of v with level index <= depth.
std::size_t materialized_ancestor(const SkeletonTree& tree, std::size_t v, std::size_t depth) {
  while (tree.nodes[v].level_index > depth) v = tree.nodes[v].parent;
  return v;
}

int tree_leaf_value(const SkeletonTree& tree, const KeyedRng& rng, std::uint64_t sample, std::size_t leaf,
                    std::size_t depth, std::vector<signed char>& cache) {
  const std::size_t edge = tree.leaves[leaf];
  const std::size_t w = materialized_ancestor(tree, tree.edges[edge].parent, depth);
  if (rng.uniform(sample, Tag::TailU, edge) < tail_refresh_probability(tree.nodes[w].level)) {
    return rng.coin(sample, Tag::TailZ, edge);
  }
  return tree_node_value(tree, rng, sample, w, cache);
}

int value_with_cache(const ProcessModel& model, const KeyedRng& rng, std::uint64_t j, Component i, RowCache& cache) {
  switch (model.kind()) {
    case Kind::Product:
      return rng.bernoulli(std::get<ProductParams>(model.spec().params).means(i), j, Tag::Product, i);
    case Kind::BlockMu: {
      const unsigned k = block_of(model.spec(), i);
      if (rng.bernoulli(std::ldexp(1.0, -static_cast<int>(k)), j, Tag::B, k)) return rng.coin(j, Tag::Z, i);
      return rng.coin(j, Tag::Z, 0);
    }
    case Kind::BlockNu: {
      const unsigned k = block_of(model.spec(), i);
      const auto gd = gamma_delta(k);
      if (rng.bernoulli(gd.delta, j, Tag::D, k)) return rng.coin(j, Tag::Y, k);
      if (rng.bernoulli(gd.gamma, j, Tag::C, i)) return rng.coin(j, Tag::Z, i);
      return rng.coin(j, Tag::Z, 0);
    }
    case Kind::ThinChain: {
      const auto& chain = model.chain();
      const std::size_t g = chain.group_of(i);
      if (g == 0) return rng.coin(j, Tag::Z, 1);
      if (cache.depth == SIZE_MAX) cache.depth = chain_depth(chain, rng, j);
      return cache.depth >= g ? rng.coin(j, Tag::Z, i) : rng.coin(j, Tag::Z, 1);
    }
    case Kind::WideTree:
      return tree_leaf_value(model.tree(), rng, j, i - 1, SIZE_MAX, cache.nodes);
    case Kind::SqrtDecay:
      if (rng.bernoulli(1.0 / std::sqrt(static_cast<double>(i)), j, Tag::A, i)) return rng.coin(j, Tag::Y, i);
      return rng.coin(j, Tag::Y, 0);
    case Kind::BlockSqrt: {
      const unsigned l = block_of(model.spec(), i);
      const bool a = rng.bernoulli(1.0 / std::sqrt(static_cast<double>(l)), j, Tag::A, l);
      const bool b = rng.bernoulli(1.0 / std::sqrt(static_cast<double>(i)), j, Tag::BSqrt, i);
      return (a || b) ? rng.coin(j, Tag::Y, i) : rng.coin(j, Tag::Y, 0);
    }
    case Kind::PnaXor:
    case Kind::Custom: {
      const auto& params = model.custom();
      if (cache.sources.empty()) {
        cache.sources.resize(params.sources.size());
        for (std::size_t s = 0; s < params.sources.size(); ++s) {
          cache.sources[s] = rng.bernoulli(params.sources[s], j, Tag::Source, s);
        }
      }
      return params.components[i - 1].eval(cache.sources);
    }
  }
  return 0;
}

}  // namespace

std::size_t chain_depth(const ThinChain& chain, const KeyedRng& rng, std::uint64_t sample) {
  std::size_t depth = 0;
  while (depth < chain.groups() && rng.uniform(sample, Tag::U, depth + 1) <= chain.step_threshold(depth + 1)) ++depth;
  return depth;
}

int component_value(const ProcessModel& model, const KeyedRng& rng, std::uint64_t sample, Component i) {
  model.check_index(i);
  RowCache cache;
  return value_with_cache(model, rng, sample, i, cache);
}

SampleBatch sample_batch(const ProcessModel& model, const std::vector<Component>& indices, std::uint64_t n,
                         SeedLineage lineage) {
  if (n < 1) throw Error(ErrorCode::InvalidSpec, "n must be >= 1");
  for (auto i : indices) model.check_index(i);
  SampleBatch batch;
  batch.indices = indices;
  batch.n = n;
  batch.lineage = lineage;
  batch.values.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(indices.size()));
  const KeyedRng rng(lineage);
  for (std::uint64_t j = 0; j < n; ++j) {
    RowCache cache;
    for (std::size_t c = 0; c < indices.size(); ++c) {
      batch.values(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(c)) =
          static_cast<std::uint8_t>(value_with_cache(model, rng, j, indices[c], cache));
    }
  }
  return batch;
}

SampleBatch sample_tree_process(const SkeletonTree& tree, const std::vector<std::size_t>& leaves, std::uint64_t n,
                                SeedLineage lineage, std::size_t truncation_depth) {
  if (truncation_depth < 1) throw Error(ErrorCode::InvalidSpec, "truncation depth must be >= 1");
  SampleBatch batch;
  batch.n = n;
  batch.lineage = lineage;
  for (auto q : leaves) {
    if (q >= tree.leaf_count()) throw Error(ErrorCode::UnknownLeaf, std::to_string(q));
    batch.indices.push_back(q + 1);
  }
  batch.values.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(leaves.size()));
  const KeyedRng rng(lineage);
  std::vector<signed char> cache;
  for (std::uint64_t j = 0; j < n; ++j) {
    cache.assign(tree.nodes.size(), -1);
    for (std::size_t c = 0; c < leaves.size(); ++c) {
      batch.values(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(c)) =
          static_cast<std::uint8_t>(tree_leaf_value(tree, rng, j, leaves[c], truncation_depth, cache));
    }
  }
  return batch;
}

double tree_tail_bias(const SkeletonTree& tree, std::uint64_t n, std::size_t truncation_depth) {
  const std::size_t depth = std::min(truncation_depth, tree.deepest_level_index());
  return static_cast<double>(n) * tail_refresh_probability(tree.sequence.level(depth)) / 2.0;
}

Eigen::VectorXd empirical_means(const SampleBatch& batch) {
  if (batch.values.rows() == 0) return Eigen::VectorXd::Zero(batch.values.cols());
  return batch.values.cast<double>().colwise().mean().transpose();
}

double sup_deviation(const SampleBatch& batch, const Eigen::VectorXd& means) {
  if (means.size() != batch.values.cols()) throw Error(ErrorCode::LengthMismatch, "means vs batch columns");
  if (means.size() == 0) return 0.0;
  return (empirical_means(batch) - means).cwiseAbs().maxCoeff();
}

std::string batch_to_csv(const SampleBatch& batch) {
  std::ostringstream out;
  out << "sample_id";
  for (auto i : batch.indices) out << ',' << i;
  out << '\n';
  for (Eigen::Index j = 0; j < batch.values.rows(); ++j) {
    out << j;
    for (Eigen::Index c = 0; c < batch.values.cols(); ++c) out << ',' << static_cast<int>(batch.values(j, c));
    out << '\n';
  }
  return out.str();
}

LatentDraw draw_block_latents(const ProcessModel& model, unsigned k, std::uint64_t n, SeedLineage lineage) {
  const KeyedRng rng(lineage);
  LatentDraw draw;
  draw.block = k;
  draw.anchor.resize(n);
  draw.block_switch.resize(n);
  if (model.kind() == Kind::BlockNu) draw.block_coin.resize(n);
  const double switch_p = model.kind() == Kind::BlockMu ? std::ldexp(1.0, -static_cast<int>(k)) : gamma_delta(k).delta;
  const Tag switch_tag = model.kind() == Kind::BlockMu ? Tag::B : Tag::D;
  model.blocks();
  for (std::uint64_t j = 0; j < n; ++j) {
    draw.anchor[j] = static_cast<std::uint8_t>(rng.coin(j, Tag::Z, 0));
    draw.block_switch[j] = rng.bernoulli(switch_p, j, switch_tag, k);
    if (model.kind() == Kind::BlockNu) draw.block_coin[j] = static_cast<std::uint8_t>(rng.coin(j, Tag::Y, k));
  }
  return draw;
}

double SupLaw::expectation() const {
  double e = support(0);
  const double step = 1.0 / static_cast<double>(n);
  for (std::size_t i = 1; i < log_cdf.size(); ++i) e += step * -std::expm1(log_cdf[i - 1]);
  return e;
}

double SupLaw::draw(double u) const {
  for (std::size_t i = 0; i < log_cdf.size(); ++i) {
    if (std::exp(log_cdf[i]) >= u) return support(i);
  }
  return support(log_cdf.size() - 1);
}

std::vector<double> SupLaw::pmf() const {
  std::vector<double> out(log_cdf.size());
  double prev = 0.0;
  for (std::size_t i = 0; i < log_cdf.size(); ++i) {
    const double cur = std::exp(log_cdf[i]);
    out[i] = cur - prev;
    prev = cur;
  }
  return out;
}

SupLaw SupLaw::point_mass(std::uint64_t n, std::uint64_t ones) {
  SupLaw law = at_zero_law(n);
  const std::uint64_t d = ones * 2 > n ? ones * 2 - n : n - ones * 2;
  const std::size_t idx = static_cast<std::size_t>((d - n % 2) / 2);
  for (std::size_t i = 0; i < idx; ++i) law.log_cdf[i] = kNegInf;
  return law;
}

SupLaw SupLaw::at_zero_law(std::uint64_t n) {
  SupLaw law;
  law.n = n;
  law.log_cdf.assign(static_cast<std::size_t>(n / 2 + 1), 0.0);
  return law;
}

std::vector<double> count_log_pmf(std::uint64_t n, std::uint64_t fixed, std::uint64_t a1, double q1, std::uint64_t a0,
                                  double q0) {
  if (fixed + a1 + a0 > n) throw Error(ErrorCode::LengthMismatch, "count decomposition exceeds n");
  std::vector<double> out(n + 1, kNegInf);
  const auto p1 = binomial_log_pmf(a1, q1);
  const auto p0 = binomial_log_pmf(a0, q0);
  for (std::uint64_t c1 = 0; c1 <= a1; ++c1) {
    if (p1[c1] == kNegInf) continue;
    for (std::uint64_t c0 = 0; c0 <= a0; ++c0) {
      if (p0[c0] == kNegInf) continue;
      auto& slot = out[fixed + c1 + c0];
      slot = log_add(slot, p1[c1] + p0[c0]);
    }
  }
  return out;
}

SupLaw iid_sup_law(std::uint64_t n, const std::vector<double>& log_pmf, double log_m) {
  SupLaw law = SupLaw::at_zero_law(n);
  const std::size_t points = law.size();
  // log P(d = d_i) with d = |2c - n|
  std::vector<double> at(points, kNegInf);
  for (std::uint64_t c = 0; c <= n; ++c) {
    const std::uint64_t d = c * 2 > n ? c * 2 - n : n - c * 2;
    auto& slot = at[static_cast<std::size_t>((d - n % 2) / 2)];
    slot = log_add(slot, log_pmf[c]);
  }
  std::vector<double> below(points), above(points);
  double acc = kNegInf;
  for (std::size_t i = 0; i < points; ++i) below[i] = acc = log_add(acc, at[i]);
  acc = kNegInf;
  for (std::size_t i = points; i-- > 0;) {
    above[i] = acc;
    acc = log_add(acc, at[i]);
  }
  static const double kLogHalf = std::log(0.5);
  for (std::size_t i = 0; i < points; ++i) {
    const double log_tail = above[i];
    double log_neg_log_f;
    if (log_tail == kNegInf) {
      law.log_cdf[i] = 0.0;
      continue;
    } else if (log_tail < -30.0) {
      log_neg_log_f = log_tail + std::log1p(0.5 * std::exp(log_tail));
    } else if (log_tail < kLogHalf) {
      log_neg_log_f = std::log(-std::log1p(-std::exp(log_tail)));
    } else {
      log_neg_log_f = below[i] == kNegInf ? std::numeric_limits<double>::infinity() : std::log(-below[i]);
    }
    law.log_cdf[i] = -std::exp(log_m + log_neg_log_f);
  }
  return law;
}

void combine_into(SupLaw& acc, const SupLaw& other) {
  if (acc.n != other.n) throw Error(ErrorCode::LengthMismatch, "sup laws with different n");
  for (std::size_t i = 0; i < acc.log_cdf.size(); ++i) acc.log_cdf[i] += other.log_cdf[i];
}

namespace {

std::vector<double> block_count_log_pmf(const ProcessModel& model, unsigned k, const LatentDraw& latents,
                                        std::uint64_t n) {
  if (latents.anchor.size() != n || latents.block_switch.size() != n) {
    throw Error(ErrorCode::LengthMismatch, "latent draw length differs from n");
  }
  std::uint64_t fixed = 0, a1 = 0, a0 = 0;
  if (model.kind() == Kind::BlockMu) {
    for (std::uint64_t j = 0; j < n; ++j) {
      if (latents.block_switch[j]) ++a1; else fixed += latents.anchor[j];
    }
    return count_log_pmf(n, fixed, a1, 0.5, 0, 0.0);
  }
  if (latents.block_coin.size() != n) throw Error(ErrorCode::LengthMismatch, "latent draw length differs from n");
  const double gamma = gamma_delta(k).gamma;
  for (std::uint64_t j = 0; j < n; ++j) {
    if (latents.block_switch[j]) fixed += latents.block_coin[j];
    else if (latents.anchor[j]) ++a1;
    else ++a0;
  }
  return count_log_pmf(n, fixed, a1, 1.0 - gamma / 2.0, a0, gamma / 2.0);
}

CollapsedReplicate collapsed_blocks(const ProcessModel& model, std::uint64_t n, SeedLineage lineage, SupMode mode) {
  const auto& params = model.blocks();
  const bool mu = model.kind() == Kind::BlockMu;
  const KeyedRng rng(lineage);
  unsigned last_block = 64;
  if (params.block_size_override) {
    if (!model.truncation()) throw Error(ErrorCode::TruncationMissing, "block size override needs a truncation");
    const auto m = *params.block_size_override;
    last_block = static_cast<unsigned>((model.truncation() + m - 1) / m);
  }
  CollapsedReplicate out;
  SupLaw law = SupLaw::at_zero_law(n);
  for (unsigned k = 1; k <= last_block; ++k) {
    const LatentDraw latents = draw_block_latents(model, k, n, lineage);
    double log_m = log_block_size(model.spec(), k);
    if (params.block_size_override && k == last_block) {
      log_m = std::log(static_cast<double>(model.truncation() - (k - 1) * *params.block_size_override));
    }
    const bool trivial = mu && std::none_of(latents.block_switch.begin(), latents.block_switch.end(),
                                            [](std::uint8_t b) { return b != 0; });
    if (trivial) {
      std::uint64_t ones = 0;
      for (auto z : latents.anchor) ones += z;
      combine_into(law, SupLaw::point_mass(n, ones));
    } else {
      combine_into(law, iid_sup_law(n, block_count_log_pmf(model, k, latents, n), log_m));
    }
    out.groups = k;
    if (params.block_size_override) continue;
    const double current = law.expectation();
    const double remaining = mu ? 0.5 * static_cast<double>(n) * std::ldexp(1.0, -static_cast<int>(k)) : 0.5 - current;
    out.residual = std::max(0.0, remaining);
    if (remaining <= 1e-4 * std::max(current, 1e-2)) break;
  }
  out.statistic = mode == SupMode::ExactExpectation ? law.expectation() : law.draw(rng.uniform(0, Tag::Sup, 0));
  return out;
}

CollapsedReplicate collapsed_chain(const ProcessModel& model, std::uint64_t n, SeedLineage lineage, SupMode mode) {
  const auto& chain = model.chain();
  const KeyedRng rng(lineage);
  std::vector<std::uint8_t> anchor(n);
  std::vector<std::size_t> depth(n);
  std::uint64_t ones = 0;
  std::size_t deepest = 0;
  for (std::uint64_t j = 0; j < n; ++j) {
    anchor[j] = static_cast<std::uint8_t>(rng.coin(j, Tag::Z, 1));
    ones += anchor[j];
    depth[j] = chain_depth(chain, rng, j);
    deepest = std::max(deepest, depth[j]);
  }
  SupLaw law = SupLaw::point_mass(n, ones);
  for (std::size_t k = 1; k <= deepest; ++k) {
    const std::uint64_t size = chain.group_size(k);
    if (size == 0) continue;
    std::uint64_t fresh = 0, fixed = 0;
    for (std::uint64_t j = 0; j < n; ++j) {
      if (depth[j] >= k) ++fresh; else fixed += anchor[j];
    }
    combine_into(law, iid_sup_law(n, count_log_pmf(n, fixed, fresh, 0.5, 0, 0.0), std::log(static_cast<double>(size))));
  }
  CollapsedReplicate out;
  out.groups = static_cast<unsigned>(deepest);
  if (!chain.finite()) {
    out.residual = 0.5 * static_cast<double>(n) * chain.event_probability(chain.groups());
  }
  out.statistic = mode == SupMode::ExactExpectation ? law.expectation() : law.draw(rng.uniform(0, Tag::Sup, 0));
  return out;
}

CollapsedReplicate collapsed_tree(const ProcessModel& model, std::uint64_t n, SeedLineage lineage, SupMode mode) {
  const auto& tree = model.tree();
  const KeyedRng rng(lineage);
  std::vector<std::uint64_t> per_node(tree.nodes.size(), 0);
  for (std::uint64_t q = 0; q < model.truncation(); ++q) ++per_node[tree.edges[tree.leaves[q]].parent];
  std::vector<std::uint64_t> ones(tree.nodes.size(), 0);
  std::vector<signed char> cache;
  for (std::uint64_t j = 0; j < n; ++j) {
    cache.assign(tree.nodes.size(), -1);
    for (std::size_t v = 0; v < tree.nodes.size(); ++v) {
      if (per_node[v]) ones[v] += static_cast<std::uint64_t>(tree_node_value(tree, rng, j, v, cache));
    }
  }
  SupLaw law = SupLaw::at_zero_law(n);
  unsigned groups = 0;
  for (std::size_t v = 0; v < tree.nodes.size(); ++v) {
    if (!per_node[v]) continue;
    const double refresh = tail_refresh_probability(tree.nodes[v].level);
    const auto pmf = count_log_pmf(n, 0, ones[v], 1.0 - refresh / 2.0, n - ones[v], refresh / 2.0);
    combine_into(law, iid_sup_law(n, pmf, std::log(static_cast<double>(per_node[v]))));
    ++groups;
  }
  CollapsedReplicate out;
  out.groups = groups;
  out.statistic = mode == SupMode::ExactExpectation ? law.expectation() : law.draw(rng.uniform(0, Tag::Sup, 0));
  return out;
}

}  // namespace

SupLaw collapsed_block_sup(const ProcessModel& model, unsigned k, const LatentDraw& latents, std::uint64_t n) {
  if (model.kind() != Kind::BlockMu && model.kind() != Kind::BlockNu) {
    throw Error(ErrorCode::UnsupportedKind, to_string(model.kind()));
  }
  if (latents.block != k) throw Error(ErrorCode::LengthMismatch, "latents drawn for a different block");
  return iid_sup_law(n, block_count_log_pmf(model, k, latents, n), log_block_size(model.spec(), k));
}

CollapsedReplicate collapsed_replicate(const ProcessModel& model, std::uint64_t n, SeedLineage lineage, SupMode mode) {
  switch (model.kind()) {
    case Kind::BlockMu:
    case Kind::BlockNu: return collapsed_blocks(model, n, lineage, mode);
    case Kind::ThinChain: return collapsed_chain(model, n, lineage, mode);
    case Kind::WideTree: return collapsed_tree(model, n, lineage, mode);
    case Kind::Product: {
      if (!model.truncation()) throw Error(ErrorCode::TruncationMissing, "product collapse needs a finite index set");
      std::vector<double> means;
      for (Component i = 1; i <= model.truncation(); ++i) means.push_back(mean(model, i));
      CollapsedReplicate out;
      out.statistic = exact_product_delta(means, n);
      out.groups = static_cast<unsigned>(means.size());
      return out;
    }
    default:
      throw Error(ErrorCode::ModeUnsupported, std::string("collapsed mode for ") + to_string(model.kind()));
  }
}

double exact_product_delta(const std::vector<double>& means, std::uint64_t n) {
  if (means.empty()) return 0.0;
  std::map<double, std::uint64_t> groups;
  for (double p : means) ++groups[p];
  struct Event {
    double dev;
    std::size_t group;
    double log_cdf;  // group's log CDF once this deviation is reached
  };
  std::vector<Event> events;
  std::vector<double> multiplicity;
  std::size_t g = 0;
  for (const auto& [p, count] : groups) {
    multiplicity.push_back(static_cast<double>(count));
    const auto lp = binomial_log_pmf(n, p);
    std::vector<std::pair<double, double>> devs;  // (deviation, log prob)
    for (std::uint64_t c = 0; c <= n; ++c) {
      if (lp[c] == kNegInf) continue;
      devs.emplace_back(std::abs(static_cast<double>(c) / static_cast<double>(n) - p), lp[c]);
    }
    std::sort(devs.begin(), devs.end());
    // tail after position i: suffix sums in log space
    std::vector<double> tail(devs.size(), kNegInf);
    double acc = kNegInf;
    for (std::size_t i = devs.size(); i-- > 0;) {
      tail[i] = acc;
      acc = log_add(acc, devs[i].second);
    }
    double below = kNegInf;
    for (std::size_t i = 0; i < devs.size(); ++i) {
      below = log_add(below, devs[i].second);
      if (i + 1 < devs.size() && devs[i + 1].first == devs[i].first) continue;
      const double log_cdf = tail[i] == kNegInf ? 0.0 : (tail[i] < std::log(0.5) ? std::log1p(-std::exp(tail[i])) : below);
      events.push_back({devs[i].first, g, log_cdf});
    }
    ++g;
  }
  std::sort(events.begin(), events.end(), [](const Event& a, const Event& b) {
    return a.dev < b.dev || (a.dev == b.dev && a.group < b.group);
  });
  std::vector<double> current(multiplicity.size(), kNegInf);
  std::size_t unreached = multiplicity.size();
  double log_h = 0.0;  // sum over reached groups of m log F
  double expectation = events.front().dev;
  for (std::size_t i = 0; i < events.size();) {
    const double v = events[i].dev;
    for (; i < events.size() && events[i].dev == v; ++i) {
      const auto& e = events[i];
      if (current[e.group] == kNegInf) --unreached; else log_h -= multiplicity[e.group] * current[e.group];
      current[e.group] = e.log_cdf;
      log_h += multiplicity[e.group] * e.log_cdf;
    }
    if (i == events.size()) break;
    const double next = events[i].dev;
    const double tail = unreached ? 1.0 : -std::expm1(log_h);
    expectation += (next - v) * tail;
  }
  return expectation;
}

}  // namespace corrbin
