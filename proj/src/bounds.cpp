#include "corrbin/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "corrbin/error.hpp"
#include "corrbin/io.hpp"

namespace corrbin {

std::vector<std::uint64_t> probe_indices(std::uint64_t horizon) {
  std::vector<std::uint64_t> out;
  for (std::uint64_t j = 1; j <= std::min<std::uint64_t>(horizon, 1000); ++j) out.push_back(j);
  double x = 1000.0;
  for (;;) {
    x *= 1.01;
    const auto j = static_cast<std::uint64_t>(std::ceil(x));
    if (j >= horizon) break;
    if (j > out.back()) out.push_back(j);
  }
  if (horizon > out.back()) out.push_back(horizon);
  return out;
}

namespace {

Functional probe_sup(const MeanSequence& p, std::uint64_t horizon, const std::function<double(std::uint64_t, double)>& term) {
  if (horizon < 1) throw Error(ErrorCode::InvalidSpec, "probe horizon must be >= 1");
  Functional out;
  out.horizon = horizon;
  double before_last_decade = 0.0;
  const std::uint64_t decade = std::max<std::uint64_t>(1, horizon / 10);
  for (auto j : probe_indices(horizon)) {
    const double v = term(j, p(j));
    if (v > out.value) {
      out.value = v;
      out.argmax = j;
    }
    if (j <= decade) before_last_decade = out.value;
  }
  out.diverges = horizon >= 100 && out.value > before_last_decade * (1.0 + 1e-3) + 1e-12;
  return out;
}

}  // namespace

Functional functional_T(const MeanSequence& p, std::uint64_t horizon) {
  return probe_sup(p, horizon, [](std::uint64_t j, double pj) {
    if (pj <= 0.0) return 0.0;
    if (pj >= 1.0) return std::numeric_limits<double>::infinity();
    return std::log(static_cast<double>(j) + 1.0) / std::log(1.0 / pj);
  });
}

Functional functional_S(const MeanSequence& p, std::uint64_t horizon) {
  return probe_sup(p, horizon, [](std::uint64_t j, double pj) { return pj * std::log(static_cast<double>(j) + 1.0); });
}

IndependentRate independent_rate(const MeanSequence& p, std::uint64_t n, std::uint64_t horizon) {
  if (n < 1) throw Error(ErrorCode::InvalidSpec, "n must be >= 1");
  const double nn = static_cast<double>(n);
  IndependentRate out;
  for (std::uint64_t j = 1; j <= horizon; ++j) out.mass += p(j);
  for (auto j : probe_indices(horizon)) {
    const double pj = p(j), lj = std::log(static_cast<double>(j) + 1.0);
    out.sup_2jp = std::max(out.sup_2jp, 2.0 * static_cast<double>(j) * pj);
    if (pj > 0.0) out.log_term = std::max(out.log_term, lj / (nn * std::log(2.0 + lj / (nn * pj))));
  }
  out.first_regime = nn * out.sup_2jp > 1.0;
  out.sqrt_term = std::sqrt(functional_S(p, horizon).value / nn);
  out.value = out.first_regime ? std::min(1.0, out.sqrt_term + out.log_term) : std::min(1.0 / nn, out.mass);
  return out;
}

ChainingBound chaining_bound(const std::vector<double>& epsilon, const std::vector<std::uint64_t>& cover, double c_mu,
                             std::uint64_t n) {
  if (epsilon.size() != cover.size() || epsilon.empty()) throw Error(ErrorCode::LengthMismatch, "grid vs cover sizes");
  if (n < 1) throw Error(ErrorCode::InvalidSpec, "n must be >= 1");
  const double nn = static_cast<double>(n);
  ChainingBound out;
  out.epsilon = epsilon;
  out.infimum = std::numeric_limits<double>::infinity();
  for (std::size_t g = 0; g < epsilon.size(); ++g) {
    const double v = epsilon[g] + std::sqrt(std::log(static_cast<double>(cover[g]) + 1.0) / nn);
    out.curve.push_back(v);
    if (v < out.infimum) {
      out.infimum = v;
      out.argmin = epsilon[g];
    }
  }
  out.closed_form = std::min(1.0, std::sqrt(std::max(0.0, std::log(nn * (1.0 + c_mu))) / nn));
  return out;
}

double dudley_bound(double d_mu, std::uint64_t n) {
  if (d_mu < 0.0 || n < 1) throw Error(ErrorCode::InvalidSpec, "dudley bound needs D >= 0 and n >= 1");
  return 24.0 * d_mu / std::sqrt(static_cast<double>(n));
}

DivergenceEvidence divergence_evidence(std::vector<std::pair<std::uint64_t, std::uint64_t>> packings, double eps) {
  if (packings.size() < 3) throw Error(ErrorCode::InvalidSpec, "divergence evidence needs at least 3 truncations");
  std::sort(packings.begin(), packings.end());
  DivergenceEvidence out;
  out.epsilon = eps;
  out.packings = packings;
  out.growing = true;
  for (std::size_t i = 1; i < packings.size(); ++i) {
    if (packings[i].second <= packings[i - 1].second) out.growing = false;
  }
  out.floor = out.growing ? eps * eps / 6.0 : 0.0;
  return out;
}

namespace {

nlohmann::json functional_json(const Functional& f) {
  return {{"value", f.value}, {"argmax", f.argmax}, {"horizon", f.horizon}, {"diverges", f.diverges}};
}

}  // namespace

nlohmann::json bound_set_to_json(const BoundSet& set) {
  nlohmann::json j = {{"n", set.n},
                      {"note", "rate expressions up to universal constants (constant 1)"},
                      {"chaining_value", set.chaining.infimum},
                      {"chaining_argmin", set.chaining.argmin},
                      {"closedform_chaining", set.chaining.closed_form},
                      {"C_mu", set.c_mu},
                      {"D_mu", set.d_mu},
                      {"dudley_value", set.dudley}};
  if (set.has_means) {
    j["T"] = functional_json(set.T);
    j["S"] = functional_json(set.S);
    j["independent_rate"] = {{"first_regime", set.rate.first_regime}, {"sup_2jp", set.rate.sup_2jp},
                             {"sqrt_term", set.rate.sqrt_term},       {"log_term", set.rate.log_term},
                             {"mass", set.rate.mass},                 {"value", set.rate.value}};
  }
  nlohmann::json curve = nlohmann::json::array();
  for (std::size_t g = 0; g < set.chaining.epsilon.size(); ++g) {
    curve.push_back({set.chaining.epsilon[g], set.chaining.curve[g]});
  }
  j["chaining_curve"] = curve;
  nlohmann::json floors = nlohmann::json::array();
  for (const auto& f : set.floors) {
    if (f.growing) floors.push_back({{"epsilon", f.epsilon}, {"floor", f.floor}});
  }
  j["lower_candidates"] = floors;
  return j;
}

std::string bound_sets_to_csv(const std::vector<BoundSet>& sets) {
  std::ostringstream out;
  out << "n,T,S,rate_regime,rate_value,chaining_value,closedform_chaining,C_mu,D_mu,dudley_value,max_floor\n";
  for (const auto& s : sets) {
    double floor = 0.0;
    for (const auto& f : s.floors) floor = std::max(floor, f.floor);
    out << s.n << ',' << (s.has_means ? format_double(s.T.value) : "") << ','
        << (s.has_means ? format_double(s.S.value) : "") << ','
        << (s.has_means ? (s.rate.first_regime ? "1" : "2") : "") << ','
        << (s.has_means ? format_double(s.rate.value) : "") << ',' << format_double(s.chaining.infimum) << ','
        << format_double(s.chaining.closed_form) << ',' << format_double(s.c_mu) << ',' << format_double(s.d_mu)
        << ',' << format_double(s.dudley) << ',' << format_double(floor) << '\n';
  }
  return out.str();
}

}  // namespace corrbin
