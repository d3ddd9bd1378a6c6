#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "corrbin/covering.hpp"
#include "json.hpp"

namespace corrbin {

using MeanSequence = std::function<double(std::uint64_t)>;  // p_j for j >= 1

// Probe indices: every j up to 1000, then geometric steps of ratio 1.01 up to horizon.
std::vector<std::uint64_t> probe_indices(std::uint64_t horizon);

struct Functional {
  double value = 0.0;
  std::uint64_t argmax = 0;
  std::uint64_t horizon = 0;
  // Running sup still rising over the last decade of probes.
  bool diverges = false;
};

Functional functional_T(const MeanSequence& p, std::uint64_t horizon = 1'000'000);
Functional functional_S(const MeanSequence& p, std::uint64_t horizon = 1'000'000);

// Rate expressions up to universal constants (constant 1).
struct IndependentRate {
  bool first_regime = false;  // n sup 2 j p_j > 1
  double sup_2jp = 0.0;
  double sqrt_term = 0.0;     // sqrt(S / n)
  double log_term = 0.0;      // sup log(j+1) / (n log(2 + log(j+1) / (n p_j)))
  double mass = 0.0;          // sum p_j over 1..horizon
  double value = 0.0;
};

IndependentRate independent_rate(const MeanSequence& p, std::uint64_t n, std::uint64_t horizon = 1'000'000);

struct ChainingBound {
  std::vector<double> epsilon;
  std::vector<double> curve;  // eps + sqrt(log(N(eps) + 1) / n)
  double infimum = 0.0;
  double argmin = 0.0;
  double closed_form = 0.0;   // 1 ∧ sqrt(log(n (1 + C)) / n)
};

ChainingBound chaining_bound(const std::vector<double>& epsilon, const std::vector<std::uint64_t>& cover,
                             double c_mu, std::uint64_t n);

double dudley_bound(double d_mu, std::uint64_t n);

struct DivergenceEvidence {
  double epsilon = 0.0;
  std::vector<std::pair<std::uint64_t, std::uint64_t>> packings;  // (truncation, packing size)
  bool growing = false;
  double floor = 0.0;  // eps^2 / 6 when growing, else 0
};

DivergenceEvidence divergence_evidence(std::vector<std::pair<std::uint64_t, std::uint64_t>> packings, double eps);

struct BoundSet {
  std::uint64_t n = 1;
  Functional T;
  Functional S;
  IndependentRate rate;
  bool has_means = false;
  ChainingBound chaining;
  double c_mu = 0.0;
  double d_mu = 0.0;
  double dudley = 0.0;
  std::vector<DivergenceEvidence> floors;
};

nlohmann::json bound_set_to_json(const BoundSet& set);
std::string bound_sets_to_csv(const std::vector<BoundSet>& sets);

}  // namespace corrbin
