#include <cmath>
#include <vector>

#include "corrbin/bounds.hpp"
#include "corrbin/error.hpp"
#include "doctest.h"

using namespace corrbin;

namespace {

MeanSequence power(double exponent, double scale = 1.0) {
  return [=](std::uint64_t j) { return scale * std::pow(static_cast<double>(j) + 1.0, -exponent); };
}

}  // namespace

TEST_SUITE("bounds") {
  TEST_CASE("probe indices") {
    auto probes = probe_indices(1'000'000);
    CHECK(probes.front() == 1);
    CHECK(probes[999] == 1000);
    CHECK(probes.back() == 1'000'000);
    for (std::size_t i = 1000; i + 1 < probes.size(); ++i) {
      CHECK(probes[i] > probes[i - 1]);
      CHECK(double(probes[i]) / double(probes[i - 1]) <= 1.011);
    }
    CHECK(probe_indices(10).size() == 10);
  }

  TEST_CASE("T functional") {
    auto half = functional_T(power(2));
    CHECK(half.value == doctest::Approx(0.5).epsilon(1e-12));
    CHECK_FALSE(half.diverges);
    for (double alpha : {0.5, 1.0, 3.0}) {
      auto t = functional_T(power(1 / alpha));
      CHECK(t.value == doctest::Approx(alpha).epsilon(1e-12));
      CHECK_FALSE(t.diverges);
    }
    auto constant = functional_T([](std::uint64_t) { return 0.3; });
    CHECK(constant.diverges);
    CHECK(constant.argmax == 1'000'000);
  }

  TEST_CASE("S functional") {
    auto s = functional_S(power(1));
    CHECK(s.value == doctest::Approx(std::log(3.0) / 3).epsilon(1e-14));
    CHECK(s.argmax == 2);
    CHECK(s.value == doctest::Approx(0.3662).epsilon(1e-4));
    CHECK(functional_S([](std::uint64_t) { return 0.0; }).value == 0.0);
    // log(x) / x^2 decreases for x > sqrt(e), so over integers x = j + 1 >= 2 the max is at x = 2.
    auto s2 = functional_S(power(2));
    CHECK(s2.value == doctest::Approx(std::log(2.0) / 4).epsilon(1e-14));
    CHECK(s2.argmax == 1);
  }

  TEST_CASE("independent rate regimes") {
    auto big = independent_rate(power(2), 1'000'000);
    CHECK(big.first_regime);
    CHECK(big.sqrt_term > big.log_term);
    CHECK(big.sqrt_term == doctest::Approx(std::sqrt(std::log(2.0) / 4 / 1e6)).epsilon(1e-12));
    auto zero = independent_rate([](std::uint64_t) { return 0.0; }, 10, 1000);
    CHECK_FALSE(zero.first_regime);
    CHECK(zero.value == 0.0);
    auto tiny = independent_rate([](std::uint64_t j) { return j == 1 ? 1e-4 : 0.0; }, 100, 1000);
    CHECK_FALSE(tiny.first_regime);
    CHECK(tiny.value == doctest::Approx(1e-4));
    // sup_j 2 j c (j+1)^-2 = c / 2 at j = 1: the flag flips at c = 2 / n.
    const std::uint64_t n = 1000;
    CHECK(independent_rate(power(2, 2.0 / n * 1.01), n, 10000).first_regime);
    CHECK_FALSE(independent_rate(power(2, 2.0 / n * 0.99), n, 10000).first_regime);
  }

  TEST_CASE("chaining bound") {
    std::vector<double> eps = {1.0, 0.5, 0.25, 0.125, 1e-3};
    std::vector<std::uint64_t> one(eps.size(), 1);
    auto flat = chaining_bound(eps, one, 1.0, 100);
    CHECK(flat.infimum == doctest::Approx(1e-3 + std::sqrt(std::log(2.0) / 100)));
    CHECK(flat.argmin == 1e-3);
    CHECK(flat.closed_form == doctest::Approx(std::sqrt(std::log(200.0) / 100)));
    CHECK(chaining_bound(eps, one, 1.0, 1).closed_form == doctest::Approx(std::sqrt(std::log(2.0))));
    CHECK(chaining_bound(eps, one, 1e6, 2).closed_form == 1.0);
    CHECK_THROWS_AS(chaining_bound(eps, {1, 2}, 1.0, 10), Error);
  }

  TEST_CASE("thin chain closed-form chaining uses its C") {
    ProcessModel model(load_spec(std::string(CORRBIN_SPECS) + "/thinchain.json"));
    std::vector<Component> idx(64);
    for (Component i = 1; i <= 64; ++i) idx[i - 1] = i;
    auto report = covering_report(closed_form_view(model, idx), nullptr, 1);
    const double c = report.c_mu.value;
    for (std::uint64_t n : {16, 256, 4096}) {
      auto b = chaining_bound(report.xi_curve.epsilon_grid, report.xi_curve.n_upper, c, n);
      CHECK(b.closed_form == doctest::Approx(std::min(1.0, std::sqrt(std::log(n * (1 + c)) / n))));
      CHECK(b.infimum <= 1.0 + std::sqrt(std::log(2.0) / n));
    }
  }

  TEST_CASE("dudley bound scales like one over root n") {
    CHECK(dudley_bound(0.0, 10) == 0.0);
    CHECK(dudley_bound(0.7, 400) == doctest::Approx(dudley_bound(0.7, 100) / 2));
    CHECK(dudley_bound(1.0, 1) == 24.0);
    CHECK_THROWS_AS(dudley_bound(-1.0, 4), Error);
  }

  TEST_CASE("divergence evidence") {
    auto grow = divergence_evidence({{16, 4}, {64, 9}, {256, 20}}, 0.1);
    CHECK(grow.growing);
    CHECK(grow.floor == doctest::Approx(0.01 / 6));
    auto flat = divergence_evidence({{16, 4}, {64, 4}, {256, 4}}, 0.1);
    CHECK_FALSE(flat.growing);
    CHECK(flat.floor == 0.0);
    CHECK_THROWS_AS(divergence_evidence({{16, 4}, {64, 9}}, 0.1), Error);
  }

  TEST_CASE("block nu packings grow and give a floor below one half") {
    ProcessSpec spec;
    spec.kind = Kind::BlockNu;
    spec.params = BlockFamilyParams{};
    ProcessModel model(spec);
    const double eps = 0.05;
    std::vector<std::pair<std::uint64_t, std::uint64_t>> packings;
    for (std::uint64_t t : {8, 32, 128}) {
      std::vector<Component> idx(t);
      for (Component i = 1; i <= t; ++i) idx[i - 1] = i;
      packings.emplace_back(t, packing_lower(closed_form_view(model, idx), Metric::Xi, eps));
    }
    auto ev = divergence_evidence(packings, eps);
    CHECK(ev.growing);
    CHECK(ev.floor == doctest::Approx(eps * eps / 6));
    CHECK(ev.floor < 0.5);
  }

  TEST_CASE("bound set csv") {
    BoundSet set;
    set.n = 16;
    set.chaining = chaining_bound({1.0, 0.5}, {1, 2}, 1.5, 16);
    set.c_mu = 1.5;
    set.dudley = dudley_bound(0.3, 16);
    auto csv = bound_sets_to_csv({set});
    CHECK(csv.rfind("n,T,S,rate_regime,rate_value,chaining_value,closedform_chaining,C_mu,D_mu,dudley_value,max_floor\n", 0) == 0);
    CHECK(csv.find("\n16,,,,,") != std::string::npos);
    auto j = bound_set_to_json(set);
    CHECK(j.at("n") == 16);
    CHECK_FALSE(j.contains("T"));
  }
}
