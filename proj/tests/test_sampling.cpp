#include <algorithm>
#include <cmath>
#include <map>
#include <vector>

#include "corrbin/error.hpp"
#include "corrbin/sampling.hpp"
#include "doctest.h"

using namespace corrbin;

namespace {

ProcessSpec block_spec(Kind kind, std::uint64_t override_size, std::uint64_t truncation) {
  ProcessSpec spec;
  spec.kind = kind;
  BlockFamilyParams p;
  p.block_size_override = override_size;
  spec.params = p;
  spec.truncation = truncation;
  return spec;
}

// Count pmf of `fixed` sure ones plus a1 coins of bias q1 and a0 coins of bias q0,
// by enumerating every coin outcome.
std::vector<double> brute_count_pmf(std::uint64_t n, std::uint64_t fixed, unsigned a1, double q1, unsigned a0,
                                    double q0) {
  std::vector<double> pmf(n + 1, 0.0);
  const unsigned bits = a1 + a0;
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << bits); ++mask) {
    double w = 1.0;
    std::uint64_t c = fixed;
    for (unsigned b = 0; b < bits; ++b) {
      const int x = (mask >> b) & 1;
      const double q = b < a1 ? q1 : q0;
      w *= x ? q : 1 - q;
      c += x;
    }
    pmf[c] += w;
  }
  return pmf;
}

// Law of max_t |c_t / n - 1/2| over m iid counts, keyed by deviation computed
// as |2c - n| / (2n) so keys compare exactly with SupLaw::support.
std::map<double, double> brute_sup_law(std::uint64_t n, const std::vector<double>& pmf, unsigned m) {
  std::map<double, double> law;
  std::vector<std::uint64_t> c(m, 0);
  while (true) {
    double w = 1.0, sup = 0.0;
    for (unsigned t = 0; t < m; ++t) {
      w *= pmf[c[t]];
      const std::uint64_t d = 2 * c[t] > n ? 2 * c[t] - n : n - 2 * c[t];
      sup = std::max(sup, double(d) / double(2 * n));
    }
    law[sup] += w;
    unsigned t = 0;
    while (t < m && ++c[t] > n) c[t++] = 0;
    if (t == m) break;
  }
  return law;
}

double total_variation(const SupLaw& law, const std::map<double, double>& ref) {
  auto pmf = law.pmf();
  double tv = 0.0;
  std::map<double, double> mine;
  for (std::size_t i = 0; i < pmf.size(); ++i) mine[law.support(i)] += pmf[i];
  for (auto& [v, p] : ref) tv += std::abs(mine[v] - p);
  for (auto& [v, p] : mine)
    if (!ref.count(v)) tv += std::abs(p);
  return tv / 2;
}

// Conditional E[sup over all components | block latents] by exhaustive enumeration of
// every component's per-sample draws, for a block family with a size override.
double brute_conditional_sup(Kind kind, std::uint64_t m, std::uint64_t truncation, std::uint64_t n,
                             SeedLineage lineage, unsigned first_block = 1) {
  const KeyedRng rng(lineage);
  const unsigned blocks = static_cast<unsigned>((truncation + m - 1) / m);
  std::map<double, double> joint{{0.0, 1.0}};  // law of the running max
  for (unsigned k = first_block; k <= blocks; ++k) {
    const unsigned size = static_cast<unsigned>(std::min<std::uint64_t>(m, truncation - (k - 1) * m));
    // Per-component count pmf given this block's shared latents.
    std::vector<double> pmf(n + 1, 0.0);
    if (kind == Kind::BlockMu) {
      const double p = std::ldexp(1.0, -static_cast<int>(k));
      std::uint64_t fixed = 0;
      unsigned fresh = 0;
      for (std::uint64_t j = 0; j < n; ++j) {
        if (rng.bernoulli(p, j, Tag::B, k)) ++fresh; else fixed += rng.coin(j, Tag::Z, 0);
      }
      pmf = brute_count_pmf(n, fixed, fresh, 0.5, 0, 0.0);
    } else {
      // gamma, delta from the defining system by bisection.
      const double p = std::ldexp(1.0, -static_cast<int>(k));
      double lo = 0, hi = p;
      for (int it = 0; it < 300; ++it) {
        double d = 0.5 * (lo + hi), g = (p - d) / (1 - d);
        if ((1 - d) * (2 * g - g * g) - p > 0) lo = d; else hi = d;
      }
      const double delta = 0.5 * (lo + hi), gamma = (p - delta) / (1 - delta);
      // Each sample contributes Y_k (when D_k), else C_t ? Z_t : Z_0: enumerate C_t, Z_t per sample.
      std::vector<int> forced(n, -1), anchor(n);
      for (std::uint64_t j = 0; j < n; ++j) {
        if (rng.bernoulli(delta, j, Tag::D, k)) forced[j] = rng.coin(j, Tag::Y, k);
        anchor[j] = rng.coin(j, Tag::Z, 0);
      }
      for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << (2 * n)); ++mask) {
        double w = 1.0;
        std::uint64_t c = 0;
        for (std::uint64_t j = 0; j < n; ++j) {
          const int cj = (mask >> (2 * j)) & 1, zj = (mask >> (2 * j + 1)) & 1;
          w *= (cj ? gamma : 1 - gamma) * 0.5;
          c += forced[j] >= 0 ? forced[j] : (cj ? zj : anchor[j]);
        }
        pmf[c] += w;
      }
    }
    auto block_law = brute_sup_law(n, pmf, size);
    std::map<double, double> next;
    for (auto& [a, pa] : joint)
      for (auto& [b, pb] : block_law) next[std::max(a, b)] += pa * pb;
    joint.swap(next);
  }
  double e = 0.0;
  for (auto& [v, p] : joint) e += v * p;
  return e;
}

}  // namespace

TEST_SUITE("sampling") {
  TEST_CASE("count pmf matches coin enumeration") {
    for (std::uint64_t n : {1, 3, 6}) {
      for (unsigned a1 = 0; a1 <= n; ++a1) {
        for (unsigned a0 = 0; a1 + a0 <= n; ++a0) {
          const std::uint64_t fixed = (n - a1 - a0) / 2;
          auto lp = count_log_pmf(n, fixed, a1, 0.8, a0, 0.15);
          auto ref = brute_count_pmf(n, fixed, a1, 0.8, a0, 0.15);
          for (std::uint64_t c = 0; c <= n; ++c) CHECK(std::abs(std::exp(lp[c]) - ref[c]) <= 1e-14);
        }
      }
    }
    CHECK_THROWS_AS(count_log_pmf(2, 1, 1, 0.5, 1, 0.5), Error);
  }

  TEST_CASE("iid sup law matches brute force") {
    for (std::uint64_t n = 1; n <= 4; ++n) {
      for (unsigned m = 1; m <= 8; ++m) {
        for (double q : {0.5, 0.3, 0.05}) {
          const unsigned a1 = static_cast<unsigned>(n / 2 + 1 > n ? n : n / 2 + 1);
          auto lp = count_log_pmf(n, 0, a1, q, static_cast<unsigned>(n - a1), 1 - q);
          auto pmf = brute_count_pmf(n, 0, a1, q, static_cast<unsigned>(n - a1), 1 - q);
          auto law = iid_sup_law(n, lp, std::log(double(m)));
          INFO("n=" << n << " m=" << m << " q=" << q);
          CHECK(total_variation(law, brute_sup_law(n, pmf, m)) <= 1e-12);
        }
      }
    }
  }

  TEST_CASE("iid sup law stays accurate for huge multiplicities") {
    // P(sup < 1/2) = (1 - 2^-n)^m with fair counts; compare in log space.
    const std::uint64_t n = 40;
    auto lp = count_log_pmf(n, 0, n, 0.5, 0, 0.0);
    const double log_m = std::log(1e15);
    auto law = iid_sup_law(n, lp, log_m);
    const double ref = std::exp(log_m) * std::log1p(-2 * std::ldexp(1.0, -40));
    CHECK(law.log_cdf[law.size() - 2] == doctest::Approx(ref).epsilon(1e-9));
  }

  TEST_CASE("sup law helpers") {
    auto zero = SupLaw::at_zero_law(4);
    CHECK(zero.expectation() == 0.0);
    auto pm = SupLaw::point_mass(5, 1);
    CHECK(pm.expectation() == doctest::Approx(0.3));
    CHECK(pm.draw(0.7) == doctest::Approx(0.3));
    SupLaw acc = SupLaw::point_mass(4, 2);
    combine_into(acc, SupLaw::point_mass(4, 3));
    CHECK(acc.expectation() == doctest::Approx(0.25));
    CHECK_THROWS_AS(combine_into(acc, SupLaw::point_mass(5, 1)), Error);
  }

  TEST_CASE("exact product delta matches enumeration") {
    CHECK(exact_product_delta({0.5}, 2) == doctest::Approx(0.25).epsilon(1e-15));
    std::vector<std::vector<double>> cases = {{0.5, 0.5}, {0.2, 0.7, 0.2}, {0.1, 0.45, 0.9}, {0.3}};
    for (const auto& means : cases) {
      for (std::uint64_t n = 1; n <= 4; ++n) {
        const std::size_t m = means.size();
        const unsigned bits = static_cast<unsigned>(m * n);
        double ref = 0.0;
        for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << bits); ++mask) {
          double w = 1.0, sup = 0.0;
          for (std::size_t c = 0; c < m; ++c) {
            std::uint64_t ones = 0;
            for (std::uint64_t j = 0; j < n; ++j) {
              const int x = (mask >> (c * n + j)) & 1;
              w *= x ? means[c] : 1 - means[c];
              ones += x;
            }
            sup = std::max(sup, std::abs(double(ones) / double(n) - means[c]));
          }
          ref += w * sup;
        }
        CHECK(std::abs(exact_product_delta(means, n) - ref) <= 1e-12);
      }
    }
  }

  TEST_CASE("single fair component at n = 2") {
    ProcessSpec coin = load_spec(std::string(CORRBIN_SPECS) + "/fair_coin.json");
    ProcessModel model(coin);
    Eigen::VectorXd half = Eigen::VectorXd::Constant(1, 0.5);
    std::map<double, int> seen;
    const int reps = 20000;
    for (int r = 0; r < reps; ++r) {
      auto batch = sample_batch(model, {1}, 2, SeedLineage{4, std::uint64_t(r)});
      seen[sup_deviation(batch, half)]++;
    }
    CHECK(seen.size() == 2);
    CHECK(seen.count(0.0) == 1);
    CHECK(seen.count(0.5) == 1);
    CHECK(std::abs(seen[0.5] / double(reps) - 0.5) < 5 * std::sqrt(0.25 / reps));
  }

  TEST_CASE("empirical means and sup deviation") {
    SampleBatch batch;
    batch.values = BinaryMatrix::Zero(2, 3);
    CHECK(empirical_means(batch).isZero());
    batch.values(1, 1) = 1;
    CHECK(empirical_means(batch)(1) == 0.5);
    Eigen::VectorXd exact = empirical_means(batch);
    CHECK(sup_deviation(batch, exact) == 0.0);
    CHECK_THROWS_AS(sup_deviation(batch, Eigen::VectorXd::Zero(2)), Error);
    batch.indices = {1, 2, 3};
    CHECK(batch_to_csv(batch) == "sample_id,1,2,3\n0,0,0,0\n1,0,1,0\n");
  }

  TEST_CASE("product columns converge to their means") {
    auto spec = load_spec(std::string(CORRBIN_SPECS) + "/product_power.json");
    ProcessModel model(spec);
    std::vector<Component> idx = {1, 2, 3, 10, 50};
    const std::uint64_t n = 100000;
    auto batch = sample_batch(model, idx, n, SeedLineage{8, 0});
    auto means = empirical_means(batch);
    for (std::size_t c = 0; c < idx.size(); ++c) {
      const double p = mean(model, idx[c]);
      CHECK(std::abs(means(c) - p) <= 4 * std::sqrt(p * (1 - p) / n));
      CHECK(means(c) >= batch.values.col(c).minCoeff());
      CHECK(means(c) <= batch.values.col(c).maxCoeff());
    }
  }

  TEST_CASE("block mu columns copy the anchor when the block switch is off") {
    ProcessModel model(block_spec(Kind::BlockMu, 4, 16));
    const SeedLineage lineage{21, 2};
    const KeyedRng rng(lineage);
    std::vector<Component> idx(16);
    for (Component i = 1; i <= 16; ++i) idx[i - 1] = i;
    auto batch = sample_batch(model, idx, 500, lineage);
    int checked = 0;
    for (std::uint64_t j = 0; j < 500; ++j) {
      for (unsigned k = 1; k <= 4; ++k) {
        if (rng.bernoulli(std::ldexp(1.0, -static_cast<int>(k)), j, Tag::B, k)) continue;
        for (unsigned c = 0; c < 4; ++c) {
          CHECK(batch.values(j, 4 * (k - 1) + c) == rng.coin(j, Tag::Z, 0));
          ++checked;
        }
      }
    }
    CHECK(checked > 500);
  }

  TEST_CASE("block nu sampler matches a reference generator draw for draw") {
    ProcessModel model(block_spec(Kind::BlockNu, 4, 64));
    std::vector<Component> idx(64);
    for (Component i = 1; i <= 64; ++i) idx[i - 1] = i;
    for (std::uint64_t seed : {1, 2, 3}) {
      const SeedLineage lineage{seed, seed * 7};
      auto batch = sample_batch(model, idx, 2, lineage);
      const KeyedRng rng(lineage);
      for (std::uint64_t j = 0; j < 2; ++j) {
        for (Component t = 1; t <= 64; ++t) {
          const unsigned k = static_cast<unsigned>((t - 1) / 4 + 1);
          const auto gd = gamma_delta(k);
          const int d = rng.uniform(j, Tag::D, k) < gd.delta;
          const int c = rng.uniform(j, Tag::C, t) < gd.gamma;
          const int y = static_cast<int>(rng.bits(j, Tag::Y, k) >> 63);
          const int zt = static_cast<int>(rng.bits(j, Tag::Z, t) >> 63);
          const int z0 = static_cast<int>(rng.bits(j, Tag::Z, 0) >> 63);
          const int x = d * y + (1 - d) * ((1 - c) * z0 + c * zt);
          CHECK(batch.values(j, t - 1) == x);
        }
      }
    }
  }

  TEST_CASE("block nu all-ones probability without block switches") {
    const std::uint64_t n = 3;
    const unsigned k = 2;
    const double gamma = gamma_delta(k).gamma;
    auto lp = count_log_pmf(n, 0, 0, 0.0, n, gamma / 2);
    const double m = 254;
    const double any_all_ones = -std::expm1(m * std::log1p(-std::exp(lp[n])));
    CHECK(any_all_ones == doctest::Approx(1 - std::pow(1 - std::pow(gamma / 2, 3), m)).epsilon(1e-12));
  }

  TEST_CASE("collapsed blocks equal the exhaustive conditional oracle") {
    for (Kind kind : {Kind::BlockMu, Kind::BlockNu}) {
      for (std::uint64_t r = 0; r < 6; ++r) {
        ProcessModel model(block_spec(kind, 6, 14));
        const SeedLineage lineage{77, r};
        auto rep = collapsed_replicate(model, 3, lineage, SupMode::ExactExpectation);
        CHECK(rep.groups == 3);
        CHECK(std::abs(rep.statistic - brute_conditional_sup(kind, 6, 14, 3, lineage)) <= 1e-12);
      }
    }
    ProcessModel untruncated(block_spec(Kind::BlockMu, 6, 0));
    CHECK_THROWS_AS(collapsed_replicate(untruncated, 3, SeedLineage{1, 0}, SupMode::ExactExpectation), Error);
  }

  TEST_CASE("collapsed block sup matches per-block brute force") {
    ProcessModel model(block_spec(Kind::BlockNu, 6, 60));
    const std::uint64_t n = 3;
    for (unsigned k = 1; k <= 4; ++k) {
      auto lat = draw_block_latents(model, k, n, SeedLineage{5, k});
      auto law = collapsed_block_sup(model, k, lat, n);
      CHECK(law.size() == n / 2 + 1);
      CHECK(std::abs(law.expectation() - brute_conditional_sup(Kind::BlockNu, 6, 6 * k, n, SeedLineage{5, k}, k)) <=
            1e-12);
    }
    LatentDraw wrong = draw_block_latents(model, 1, n, SeedLineage{5, 1});
    CHECK_THROWS_AS(collapsed_block_sup(model, 2, wrong, n), Error);
  }

  TEST_CASE("wide tree tail bias") {
    auto spec = load_spec(std::string(CORRBIN_SPECS) + "/widetree.json");
    ProcessModel model(spec);
    const auto& tree = model.tree();
    const double bias = tree_tail_bias(tree, 8);
    const double eps = tree.sequence.level(tree.deepest_level_index());
    CHECK(bias == doctest::Approx(8 * (1 - std::sqrt(1 - 2 * eps)) / 2));
    CHECK(bias < 0.01);
  }

  TEST_CASE("tree sampler marginals are fair") {
    auto spec = load_spec(std::string(CORRBIN_SPECS) + "/tree_small.json");
    ProcessModel model(spec);
    std::vector<std::size_t> leaves = {0, 3, 7, 14};
    const std::uint64_t n = 100000;
    auto batch = sample_tree_process(model.tree(), leaves, n, SeedLineage{2, 0}, 3);
    auto means = empirical_means(batch);
    for (Eigen::Index c = 0; c < means.size(); ++c) CHECK(std::abs(means(c) - 0.5) < 4 * std::sqrt(0.25 / n));
    CHECK_THROWS_AS(sample_tree_process(model.tree(), {99}, 1, SeedLineage{}), Error);
  }

  TEST_CASE("component_value agrees with sample_batch") {
    for (const char* name : {"blocksqrt", "sqrtdecay", "thinchain", "pnaxor", "tree_small"}) {
      ProcessModel model(load_spec(std::string(CORRBIN_SPECS) + "/" + name + ".json"));
      const std::uint64_t m = std::min<std::uint64_t>(model.truncation(), 40);
      std::vector<Component> idx(m);
      for (Component i = 1; i <= m; ++i) idx[i - 1] = i;
      const SeedLineage lineage{13, 1};
      auto batch = sample_batch(model, idx, 20, lineage);
      const KeyedRng rng(lineage);
      for (std::uint64_t j = 0; j < 20; ++j)
        for (Component i = 1; i <= m; ++i) CHECK(batch.values(j, i - 1) == component_value(model, rng, j, i));
    }
  }
}
