#include "corrbin/verify.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <random>

#include "corrbin/delta_estimator.hpp"
#include "corrbin/error.hpp"
#include "corrbin/io.hpp"
#include "corrbin/metrics.hpp"
#include "corrbin/parallel.hpp"
#include "corrbin/sampling.hpp"

namespace corrbin {

using nlohmann::json;

const char* to_string(CheckStatus status) {
  switch (status) {
    case CheckStatus::Pass: return "pass";
    case CheckStatus::Fail: return "fail";
    case CheckStatus::Inconclusive: return "inconclusive";
  }
  return "fail";
}

json report_to_json(const CheckReport& report) {
  return {{"check", report.name},         {"status", to_string(report.status)}, {"margin", report.margin},
          {"tolerance", report.tolerance}, {"parameters", report.parameters},   {"seed", report.seed},
          {"details", report.details}};
}

VerifyConfig verify_config_from_json(const json& j) {
  VerifyConfig c;
  const json defaults = verify_config_to_json(c);
  for (const auto& [key, _] : j.items()) {
    if (!defaults.contains(key)) throw Error(ErrorCode::InvalidSpec, "unknown verify config field '" + key + "'");
  }
  c.max_block = j.value("max_block", c.max_block);
  c.gamma_max_k = j.value("gamma_max_k", c.gamma_max_k);
  c.mgf_p_steps = j.value("mgf_p_steps", c.mgf_p_steps);
  c.mgf_r_steps = j.value("mgf_r_steps", c.mgf_r_steps);
  c.mgf_t_steps = j.value("mgf_t_steps", c.mgf_t_steps);
  c.mgf_t_max = j.value("mgf_t_max", c.mgf_t_max);
  c.mgf_tolerance = j.value("mgf_tolerance", c.mgf_tolerance);
  c.concavity_points = j.value("concavity_points", c.concavity_points);
  c.concavity_tolerance = j.value("concavity_tolerance", c.concavity_tolerance);
  c.triangle_trials = j.value("triangle_trials", c.triangle_trials);
  c.triangle_tolerance = j.value("triangle_tolerance", c.triangle_tolerance);
  c.decoupling_n = j.value("decoupling_n", c.decoupling_n);
  c.decoupling_replicates = j.value("decoupling_replicates", c.decoupling_replicates);
  c.level = j.value("level", c.level);
  c.sc_samples = j.value("sc_samples", c.sc_samples);
  c.sc_epsilon_block = j.value("sc_epsilon_block", c.sc_epsilon_block);
  c.sc_epsilon_chain = j.value("sc_epsilon_chain", c.sc_epsilon_chain);
  c.sc_epsilon_sqrt = j.value("sc_epsilon_sqrt", c.sc_epsilon_sqrt);
  c.threads = j.value("threads", c.threads);
  return c;
}

json verify_config_to_json(const VerifyConfig& c) {
  return {{"max_block", c.max_block},
          {"gamma_max_k", c.gamma_max_k},
          {"mgf_p_steps", c.mgf_p_steps},
          {"mgf_r_steps", c.mgf_r_steps},
          {"mgf_t_steps", c.mgf_t_steps},
          {"mgf_t_max", c.mgf_t_max},
          {"mgf_tolerance", c.mgf_tolerance},
          {"concavity_points", c.concavity_points},
          {"concavity_tolerance", c.concavity_tolerance},
          {"triangle_trials", c.triangle_trials},
          {"triangle_tolerance", c.triangle_tolerance},
          {"decoupling_n", c.decoupling_n},
          {"decoupling_replicates", c.decoupling_replicates},
          {"level", c.level},
          {"sc_samples", c.sc_samples},
          {"sc_epsilon_block", c.sc_epsilon_block},
          {"sc_epsilon_chain", c.sc_epsilon_chain},
          {"sc_epsilon_sqrt", c.sc_epsilon_sqrt},
          {"threads", c.threads}};
}

namespace {

CheckStatus status_of(bool ok) { return ok ? CheckStatus::Pass : CheckStatus::Fail; }

}  // namespace

CheckReport check_gamma_delta(const VerifyConfig& config) {
  CheckReport out;
  out.name = "gamma_delta";
  out.tolerance = 1e-12;
  out.parameters = {{"k_max", config.gamma_max_k}};
  double worst = 0.0, ratio_low = 1.0, ratio_high = 1.0;
  for (unsigned k = 1; k <= config.gamma_max_k; ++k) {
    const auto gd = gamma_delta(k);
    const double target = std::ldexp(1.0, -static_cast<int>(k));
    worst = std::max(worst, std::abs((1.0 - gd.delta) * (2.0 * gd.gamma - gd.gamma * gd.gamma) - target));
    worst = std::max(worst, std::abs(gd.gamma + gd.delta - gd.gamma * gd.delta - target));
    if (k >= 10) {
      const double ratio = gd.gamma / std::ldexp(1.0, -static_cast<int>(k) - 1);
      ratio_low = std::min(ratio_low, ratio);
      ratio_high = std::max(ratio_high, ratio);
    }
  }
  out.margin = worst;
  out.details = {{"max_residual", worst}, {"ratio_min_k_ge_10", ratio_low}, {"ratio_max_k_ge_10", ratio_high}};
  out.status = status_of(worst <= out.tolerance && ratio_low >= 0.95 && ratio_high <= 1.05);
  return out;
}

CheckReport check_covariance_twins(const VerifyConfig& config) {
  CheckReport out;
  out.name = "covariance_twins";
  out.tolerance = 1e-12;
  out.parameters = {{"max_block", config.max_block}};
  double worst = 0.0;
  std::uint64_t probes = 0;
  for (unsigned k = 1; k <= config.max_block; ++k) {
    for (unsigned l = k; l <= config.max_block; ++l) {
      worst = std::max(worst, std::abs(block_cross_moment(Kind::BlockMu, k, l) - block_cross_moment(Kind::BlockNu, k, l)));
      ++probes;
    }
  }
  out.margin = worst;
  out.details = {{"max_abs_difference", worst}, {"block_pairs", probes}};
  out.status = status_of(worst <= out.tolerance);
  return out;
}

CheckReport check_third_moments(const VerifyConfig& config) {
  CheckReport out;
  out.name = "third_moments";
  out.tolerance = 1e-12;
  out.parameters = {{"max_block", config.max_block}};
  double worst = 0.0;
  std::uint64_t probes = 0;
  const unsigned m = config.max_block;
  for (unsigned a = 1; a <= m; ++a)
    for (unsigned b = 1; b <= m; ++b)
      for (unsigned c = 1; c <= m; ++c) {
        const double mu = block_third_moment(Kind::BlockMu, a, b, c);
        const double nu = block_third_moment(Kind::BlockNu, a, b, c);
        worst = std::max(worst, std::abs(mu - nu));
        ++probes;
      }
  out.margin = worst;
  out.details = {{"max_abs_difference", worst}, {"block_triples", probes}};
  out.status = status_of(worst <= out.tolerance);
  return out;
}

double mgf_difference(double p_i, double p_j, double r, double t) {
  const double atoms[4][3] = {{r, 1.0, 1.0}, {p_i - r, 1.0, 0.0}, {p_j - r, 0.0, 1.0}, {1.0 - p_i - p_j + r, 0.0, 0.0}};
  double total = 0.0;
  for (const auto& a : atoms) {
    if (a[0] <= 0.0) continue;
    total += a[0] * std::exp(t * ((a[1] - p_i) - (a[2] - p_j)));
  }
  return total;
}

CheckReport check_mgf_bound(const VerifyConfig& config) {
  CheckReport out;
  out.name = "mgf_bound";
  out.tolerance = config.mgf_tolerance;
  out.parameters = {{"p_steps", config.mgf_p_steps},
                    {"r_steps", config.mgf_r_steps},
                    {"t_steps", config.mgf_t_steps},
                    {"t_max", config.mgf_t_max}};
  const std::size_t ps = config.mgf_p_steps;
  struct Worst {
    double slack = std::numeric_limits<double>::infinity();
    double log_slack = std::numeric_limits<double>::infinity();
    double at[4] = {0, 0, 0, 0};
    std::uint64_t cells = 0;
  };
  std::vector<Worst> rows(ps);
  parallel_for(ps, config.threads ? config.threads : default_threads(), [&](std::size_t a) {
    Worst& w = rows[a];
    const double pi = static_cast<double>(a + 1) / static_cast<double>(ps + 1);
    for (std::size_t b = 0; b < ps; ++b) {
      const double pj = static_cast<double>(b + 1) / static_cast<double>(ps + 1);
      const double lo = std::max(0.0, pi + pj - 1.0), hi = std::min(pi, pj);
      for (std::size_t s = 0; s < config.mgf_r_steps; ++s) {
        const double r = config.mgf_r_steps == 1
                             ? lo
                             : lo + (hi - lo) * static_cast<double>(s) / static_cast<double>(config.mgf_r_steps - 1);
        const double xi = pi + pj - 2.0 * r;
        if (xi <= 1e-15) continue;
        const double scale = 1.0 / std::log(2.0 / xi);
        for (std::size_t q = 0; q < config.mgf_t_steps; ++q) {
          const double t = config.mgf_t_steps == 1
                               ? 0.0
                               : config.mgf_t_max * static_cast<double>(q) / static_cast<double>(config.mgf_t_steps - 1);
          const double log_rhs = t * t * scale;
          const double log_lhs = std::log(mgf_difference(pi, pj, r, t));
          const double slack = -std::expm1(log_lhs - log_rhs) * std::exp(log_rhs);
          ++w.cells;
          if (log_rhs - log_lhs < w.log_slack) w.log_slack = log_rhs - log_lhs;
          if (slack < w.slack) {
            w.slack = slack;
            w.at[0] = pi;
            w.at[1] = pj;
            w.at[2] = r;
            w.at[3] = t;
          }
        }
      }
    }
  });
  Worst total;
  for (const auto& w : rows) {
    total.cells += w.cells;
    total.log_slack = std::min(total.log_slack, w.log_slack);
    if (w.slack < total.slack) total = Worst{w.slack, total.log_slack, {w.at[0], w.at[1], w.at[2], w.at[3]}, total.cells};
  }
  out.margin = total.slack;
  out.details = {{"min_slack", total.slack},
                 {"min_log_slack", total.log_slack},
                 {"cells", total.cells},
                 {"worst_cell", {{"p_i", total.at[0]}, {"p_j", total.at[1]}, {"r", total.at[2]}, {"t", total.at[3]}}}};
  out.status = status_of(total.slack >= -out.tolerance);
  return out;
}

CheckReport check_rho_is_metric(const VerifyConfig& config, std::uint64_t seed) {
  CheckReport out;
  out.name = "rho_metric";
  out.seed = seed;
  out.tolerance = config.concavity_tolerance;
  out.parameters = {{"concavity_points", config.concavity_points}, {"triangle_trials", config.triangle_trials}};
  const double crossover = 2.0 * std::exp(-1.5);
  const std::size_t pts = config.concavity_points;
  double worst_second = -std::numeric_limits<double>::infinity();
  bool monotone = true;
  for (std::size_t m = 1; m < pts; ++m) {
    const double h = crossover / static_cast<double>(pts);
    const double f0 = rho_of_xi(h * static_cast<double>(m - 1)), f1 = rho_of_xi(h * static_cast<double>(m)),
                 f2 = rho_of_xi(h * static_cast<double>(m + 1));
    worst_second = std::max(worst_second, f0 - 2.0 * f1 + f2);
    if (f1 < f0 || f2 < f1) monotone = false;
  }
  const double branch_at_crossover = std::sqrt(2.0 / std::log(2.0 / crossover));
  const double crossover_gap = std::abs(branch_at_crossover - kRhoCap);
  std::mt19937_64 gen(seed);
  std::exponential_distribution<double> expo(1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  double worst_triangle = 0.0, worst_xi_triangle = 0.0;
  for (std::uint64_t trial = 0; trial < config.triangle_trials; ++trial) {
    double w[8], sum = 0.0;
    for (double& x : w) {
      x = expo(gen);
      const double u = unit(gen);
      if (u < 0.3) x = 0.0;
      else if (u < 0.45) x *= 1e-6;
      sum += x;
    }
    if (sum <= 0.0) {
      w[0] = sum = 1.0;
    }
    double d[3] = {0, 0, 0};  // xi(a,b), xi(b,c), xi(a,c) for bits a=0, b=1, c=2
    for (int s = 0; s < 8; ++s) {
      const int a = s & 1, b = s >> 1 & 1, c = s >> 2 & 1;
      const double pr = w[s] / sum;
      if (a != b) d[0] += pr;
      if (b != c) d[1] += pr;
      if (a != c) d[2] += pr;
    }
    const double r0 = rho_of_xi(d[0]), r1 = rho_of_xi(d[1]), r2 = rho_of_xi(d[2]);
    worst_triangle = std::max({worst_triangle, r2 - r0 - r1, r0 - r1 - r2, r1 - r0 - r2});
    worst_xi_triangle = std::max({worst_xi_triangle, d[2] - d[0] - d[1], d[0] - d[1] - d[2], d[1] - d[0] - d[2]});
  }
  out.margin = -worst_second;
  out.details = {{"max_second_difference", worst_second},
                 {"f_at_zero", rho_of_xi(0.0)},
                 {"crossover", crossover},
                 {"crossover_gap", crossover_gap},
                 {"monotone", monotone},
                 {"max_triangle_violation", worst_triangle},
                 {"max_xi_triangle_violation", worst_xi_triangle}};
  out.status = status_of(worst_second <= config.concavity_tolerance && rho_of_xi(0.0) == 0.0 && crossover_gap <= 1e-12 &&
                         monotone && worst_triangle <= config.triangle_tolerance &&
                         worst_xi_triangle <= config.triangle_tolerance);
  return out;
}

PzResult pz_enumerate(const ProcessModel& model) {
  if (model.kind() != Kind::Custom && model.kind() != Kind::PnaXor) {
    throw Error(ErrorCode::UnsupportedKind, "exact enumeration needs a Custom or PnaXor model");
  }
  const auto& params = model.custom();
  const std::size_t d = model.truncation();
  std::vector<int> involved;
  for (std::size_t i = 0; i < d; ++i) params.components[i].collect_sources(involved);
  std::sort(involved.begin(), involved.end());
  involved.erase(std::unique(involved.begin(), involved.end()), involved.end());
  PzResult out;
  std::vector<double> means(d, 0.0);
  std::vector<std::vector<double>> joint(d, std::vector<double>(d, 0.0));
  enumerate_sources(params, involved, [&](double w, const std::vector<int>& values) {
    std::vector<int> x(d);
    bool any = false;
    for (std::size_t i = 0; i < d; ++i) {
      x[i] = params.components[i].eval(values);
      any = any || x[i];
    }
    if (any) out.p_any += w;
    for (std::size_t i = 0; i < d; ++i) {
      if (!x[i]) continue;
      means[i] += w;
      for (std::size_t j = 0; j < d; ++j) {
        if (x[j]) joint[i][j] += w;
      }
    }
  });
  double none = 1.0;
  for (double p : means) none *= 1.0 - p;
  out.p_any_independent = 1.0 - none;
  out.max_covariance = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = i + 1; j < d; ++j) out.max_covariance = std::max(out.max_covariance, joint[i][j] - means[i] * means[j]);
  if (d < 2) out.max_covariance = 0.0;
  return out;
}

CheckReport check_pz_decoupling(const std::vector<std::pair<std::string, ProcessSpec>>& family) {
  CheckReport out;
  out.name = "pz_decoupling";
  out.tolerance = 0.0;
  double worst = std::numeric_limits<double>::infinity();
  json cases = json::array();
  bool ok = true;
  for (const auto& [name, spec] : family) {
    const ProcessModel model(spec);
    const auto pz = pz_enumerate(model);
    const double margin = pz.p_any - 0.5 * pz.p_any_independent;
    // the claim covers negatively correlated coordinates only
    const bool applies = pz.max_covariance <= 1e-12;
    if (applies) {
      worst = std::min(worst, margin);
      ok = ok && margin >= 0.0;
    }
    cases.push_back({{"case", name},
                     {"p_any", pz.p_any},
                     {"p_any_independent", pz.p_any_independent},
                     {"max_covariance", pz.max_covariance},
                     {"margin", margin},
                     {"applies", applies}});
  }
  out.margin = worst;
  out.details = {{"cases", cases}};
  out.parameters = {{"cases", family.size()}};
  out.status = status_of(ok);
  return out;
}

CheckReport check_delta_decoupling(const std::string& name, const ProcessSpec& spec, const VerifyConfig& config,
                                   std::uint64_t seed) {
  const ProcessModel model(spec);
  if (!model.truncation()) throw Error(ErrorCode::TruncationMissing, "decoupling check needs a finite index set");
  std::vector<double> means;
  double max_cov = -std::numeric_limits<double>::infinity();
  for (Component i = 1; i <= model.truncation(); ++i) means.push_back(mean(model, i));
  for (Component i = 1; i <= model.truncation(); ++i)
    for (Component j = i + 1; j <= model.truncation(); ++j)
      max_cov = std::max(max_cov, cross_moment(model, i, j) - means[i - 1] * means[j - 1]);
  if (max_cov > 1e-12) {
    throw Error(ErrorCode::CovarianceSignViolation, name + ": positive covariance " + format_double(max_cov));
  }
  CheckReport out;
  out.name = "delta_decoupling:" + name;
  out.seed = seed;
  out.tolerance = 0.0;
  out.parameters = {{"spec", spec_to_json(spec)}, {"n", config.decoupling_n},
                    {"replicates", config.decoupling_replicates}, {"level", config.level}};
  EstimatorOptions options;
  options.level = config.level;
  options.threads = config.threads;
  double worst = std::numeric_limits<double>::infinity();
  json rows = json::array();
  for (auto n : config.decoupling_n) {
    const auto est = estimate_delta(spec, n, config.decoupling_replicates, seed, options);
    const double product = exact_product_delta(means, n);
    const double margin = est.ci_high - 0.25 * product;
    worst = std::min(worst, margin);
    rows.push_back({{"n", n}, {"estimate", est.estimate}, {"ci_high", est.ci_high}, {"product_exact", product},
                    {"ratio", product > 0.0 ? est.estimate / product : 1.0}, {"margin", margin}});
  }
  out.margin = worst;
  out.details = {{"max_covariance", max_cov}, {"rows", rows}};
  out.status = status_of(worst >= 0.0);
  return out;
}

namespace {

std::vector<std::uint64_t> default_probe_events() {
  std::vector<std::uint64_t> out;
  for (std::uint64_t k = 1; k <= 200; ++k) out.push_back(k);
  for (double x = 200.0; x < 1e9; x *= 1.5) out.push_back(static_cast<std::uint64_t>(x) + 1);
  return out;
}

std::vector<Component> geometric_indices(Component from, double until, double ratio) {
  std::vector<Component> out;
  for (double x = static_cast<double>(from); x < until; x *= ratio) out.push_back(static_cast<Component>(x));
  return out;
}

void sort_unique(std::vector<Component>& v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
}

ScWitness block_mu_witness(const ProcessModel& model, double eps) {
  const auto& spec = model.spec();
  unsigned first = 1;
  while (std::ldexp(1.0, -static_cast<int>(first)) > eps) ++first;
  ScWitness w;
  w.name = "BlockMu";
  w.max_events = 1;
  w.growth_bound = 1.0;
  w.anchor_center = true;
  Component head = 0;
  if (first > 1) {
    const auto range = block_range(spec, first - 1);
    if (!range) throw Error(ErrorCode::WitnessIncomplete, "head blocks exceed 64-bit indices");
    head = range->second;
  }
  w.centers = head + 1;
  w.event_probability = [first](std::uint64_t k) { return std::ldexp(1.0, -static_cast<int>(first + k - 1)); };
  w.event = [first](const KeyedRng& rng, std::uint64_t j, std::uint64_t k) {
    const auto block = first + k - 1;
    return rng.bernoulli(std::ldexp(1.0, -static_cast<int>(block)), j, Tag::B, block);
  };
  w.center = [&model](const KeyedRng& rng, std::uint64_t j, std::uint64_t c) {
    return c == 0 ? rng.coin(j, Tag::Z, 0) : component_value(model, rng, j, c);
  };
  w.cover = [&spec, first](Component i) -> std::pair<std::uint64_t, std::vector<std::uint64_t>> {
    const unsigned block = block_of(spec, i);
    if (block < first) return {i, {}};
    return {0, {block - first + 1}};
  };
  for (unsigned k = 1; k <= 4; ++k) {
    const auto range = block_range(spec, k);
    if (!range) break;
    const auto [a, b] = *range;
    for (Component i : {a, a + 1, a + (b - a) / 3, a + (b - a) / 2, b - 1, b}) {
      if (i >= a && i <= b) w.probe_indices.push_back(i);
    }
  }
  sort_unique(w.probe_indices);
  w.probe_events = default_probe_events();
  return w;
}

ScWitness chain_witness(const ProcessModel& model, double eps) {
  const auto& chain = model.chain();
  std::size_t k = 0;
  while (k + 1 <= chain.groups() && chain.event_probability(k + 1) > eps) ++k;
  // E = {L >= k + 1}; components in groups <= k are their own centers.
  const std::size_t deep = k + 1;
  ScWitness w;
  w.name = "ThinChain";
  w.max_events = 1;
  w.growth_bound = 1.0;
  w.anchor_center = false;
  w.centers = k == 0 ? 1 : chain.group_last(k);
  const double p_event = deep <= chain.groups() ? chain.event_probability(deep) : 0.0;
  w.event_probability = [p_event](std::uint64_t e) { return e == 1 ? p_event : 0.0; };
  w.event = [&chain, deep](const KeyedRng& rng, std::uint64_t j, std::uint64_t e) {
    return e == 1 && chain_depth(chain, rng, j) >= deep;
  };
  w.center = [&model](const KeyedRng& rng, std::uint64_t j, std::uint64_t c) {
    return component_value(model, rng, j, c);
  };
  const auto centers = w.centers;
  w.cover = [&chain, centers](Component i) -> std::pair<std::uint64_t, std::vector<std::uint64_t>> {
    if (i <= centers) return {i, {}};
    (void)chain;
    return {1, {1}};
  };
  for (Component i = 1; i <= std::min<Component>(model.truncation() ? model.truncation() : chain.materialized_components(), 4096);
       ++i) {
    w.probe_indices.push_back(i);
  }
  w.probe_events = {1, 2, 3};
  return w;
}

ScWitness sqrt_decay_witness(const ProcessModel& model, double eps) {
  const auto k_eps = static_cast<std::uint64_t>(std::ceil(1.0 / (eps * eps)));
  ScWitness w;
  w.name = "SqrtDecay";
  w.max_events = 1;
  w.growth_bound = 4.0;
  w.anchor_center = true;
  w.centers = k_eps + 1;
  // X_i differs from Y_0 when A_i = 1 and the fresh coin disagrees.
  w.event_probability = [k_eps](std::uint64_t k) { return 0.5 / std::sqrt(static_cast<double>(k + k_eps)); };
  w.event = [&model, k_eps](const KeyedRng& rng, std::uint64_t j, std::uint64_t k) {
    return component_value(model, rng, j, k + k_eps) != rng.coin(j, Tag::Y, 0);
  };
  w.center = [&model](const KeyedRng& rng, std::uint64_t j, std::uint64_t c) {
    return c == 0 ? rng.coin(j, Tag::Y, 0) : component_value(model, rng, j, c);
  };
  w.cover = [k_eps](Component i) -> std::pair<std::uint64_t, std::vector<std::uint64_t>> {
    if (i <= k_eps) return {i, {}};
    return {0, {i - k_eps}};
  };
  for (Component i = 1; i <= 2 * k_eps + 64; ++i) w.probe_indices.push_back(i);
  for (auto i : geometric_indices(2 * k_eps + 64, 1e12, 1.7)) w.probe_indices.push_back(i);
  sort_unique(w.probe_indices);
  w.probe_events = default_probe_events();
  return w;
}

ScWitness block_sqrt_witness(const ProcessModel& model, double eps) {
  const auto i0 = static_cast<std::uint64_t>(std::ceil(1.0 / (eps * eps)));
  if (i0 >= 63) throw Error(ErrorCode::WitnessIncomplete, "head beyond 64-bit indices");
  const Component head = Component{1} << i0;
  ScWitness w;
  w.name = "BlockSqrt";
  w.max_events = 2;
  w.growth_bound = 4.0;
  w.anchor_center = true;
  w.centers = head + 1;
  // odd k: A_{i0 + (k-1)/2}; even k: B_{i0 + (k-2)/2}
  w.event_probability = [i0](std::uint64_t k) {
    return 1.0 / std::sqrt(static_cast<double>(i0 + (k - 1) / 2));
  };
  w.event = [i0](const KeyedRng& rng, std::uint64_t j, std::uint64_t k) {
    const std::uint64_t m = i0 + (k - 1) / 2;
    const double p = 1.0 / std::sqrt(static_cast<double>(m));
    return k % 2 == 1 ? rng.bernoulli(p, j, Tag::A, m) : rng.bernoulli(p, j, Tag::BSqrt, m);
  };
  w.center = [&model](const KeyedRng& rng, std::uint64_t j, std::uint64_t c) {
    return c == 0 ? rng.coin(j, Tag::Y, 0) : component_value(model, rng, j, c);
  };
  const auto& spec = model.spec();
  w.cover = [&spec, i0, head](Component i) -> std::pair<std::uint64_t, std::vector<std::uint64_t>> {
    if (i <= head) return {i, {}};
    const std::uint64_t l = block_of(spec, i);
    return {0, {2 * (l - i0) + 1, 2 * (i - i0) + 2}};
  };
  for (Component i = 1; i <= 64; ++i) w.probe_indices.push_back(i);
  for (Component i = head - 4; i <= head + 64; ++i) w.probe_indices.push_back(i);
  for (auto i : geometric_indices(head + 65, 1e15, 1.9)) w.probe_indices.push_back(i);
  sort_unique(w.probe_indices);
  w.probe_events = default_probe_events();
  return w;
}

}  // namespace

ScWitness shipped_witness(const ProcessModel& model, double eps) {
  if (!(eps > 0.0 && eps < 1.0)) throw Error(ErrorCode::InvalidSpec, "witness epsilon must lie in (0, 1)");
  switch (model.kind()) {
    case Kind::BlockMu: return block_mu_witness(model, eps);
    case Kind::ThinChain: return chain_witness(model, eps);
    case Kind::SqrtDecay: return sqrt_decay_witness(model, eps);
    case Kind::BlockSqrt: return block_sqrt_witness(model, eps);
    default: throw Error(ErrorCode::WitnessIncomplete, std::string("no shipped witness for ") + to_string(model.kind()));
  }
}

CheckReport verify_sc_witness(const ProcessModel& model, const ScWitness& witness, double eps, std::uint64_t samples,
                              std::uint64_t seed, unsigned threads) {
  if (!witness.event || !witness.event_probability || !witness.center || !witness.cover) {
    throw Error(ErrorCode::WitnessIncomplete, witness.name + ": missing witness component");
  }
  std::vector<std::pair<std::uint64_t, std::vector<std::uint64_t>>> covers;
  for (auto i : witness.probe_indices) {
    covers.push_back(witness.cover(i));
    if (covers.back().second.size() > witness.max_events) {
      throw Error(ErrorCode::WitnessIncomplete, witness.name + ": cover of " + std::to_string(i) + " uses too many events");
    }
    if (covers.back().first >= witness.centers && !(covers.back().first == witness.centers && !witness.anchor_center)) {
      throw Error(ErrorCode::WitnessIncomplete, witness.name + ": center outside the declared list");
    }
  }
  double max_prob = 0.0, growth = 0.0;
  for (auto k : witness.probe_events) {
    const double p = witness.event_probability(k);
    max_prob = std::max(max_prob, p);
    if (p > 0.0) growth = std::max(growth, std::log(static_cast<double>(k) + 1.0) / std::log(1.0 / p));
  }
  const KeyedRng rng({seed, 0});
  constexpr std::size_t kChunks = 64;
  std::vector<std::uint64_t> violations(kChunks, 0), disagreements(kChunks, 0);
  parallel_for(kChunks, threads ? threads : default_threads(), [&](std::size_t chunk) {
    const std::uint64_t begin = samples * chunk / kChunks, end = samples * (chunk + 1) / kChunks;
    for (std::uint64_t j = begin; j < end; ++j) {
      for (std::size_t q = 0; q < witness.probe_indices.size(); ++q) {
        const auto& [c, events] = covers[q];
        if (component_value(model, rng, j, witness.probe_indices[q]) == witness.center(rng, j, c)) continue;
        ++disagreements[chunk];
        const bool covered = std::any_of(events.begin(), events.end(),
                                         [&](std::uint64_t k) { return witness.event(rng, j, k); });
        if (!covered) ++violations[chunk];
      }
    }
  });
  std::uint64_t total_violations = 0, total_disagreements = 0;
  for (std::size_t c = 0; c < kChunks; ++c) {
    total_violations += violations[c];
    total_disagreements += disagreements[c];
  }
  CheckReport out;
  out.name = "sc_witness:" + witness.name;
  out.seed = seed;
  out.tolerance = 0.0;
  out.margin = static_cast<double>(total_violations);
  out.parameters = {{"epsilon", eps},
                    {"samples", samples},
                    {"probe_indices", witness.probe_indices.size()},
                    {"probe_events", witness.probe_events.size()},
                    {"K", witness.max_events},
                    {"centers", witness.centers}};
  out.details = {{"inclusion_violations", total_violations},
                 {"disagreements", total_disagreements},
                 {"max_event_probability", max_prob},
                 {"growth_statistic", growth},
                 {"growth_bound", witness.growth_bound}};
  out.status = status_of(total_violations == 0 && max_prob <= eps && growth <= witness.growth_bound);
  return out;
}

std::vector<std::pair<std::string, ProcessSpec>> pz_family() {
  const auto src = [](int s) {
    Expr e;
    e.op = Expr::Op::Src;
    e.value = s;
    return e;
  };
  const auto op = [](Expr::Op o, std::vector<Expr> args) {
    Expr e;
    e.op = o;
    e.args = std::move(args);
    return e;
  };
  const auto custom = [](std::vector<double> sources, std::vector<Expr> comps) {
    ProcessSpec spec;
    spec.kind = Kind::Custom;
    spec.params = CustomParams{std::move(sources), std::move(comps)};
    return spec;
  };
  std::vector<std::pair<std::string, ProcessSpec>> out;
  out.emplace_back("xor_triple", custom({0.5, 0.5}, {src(0), src(1), op(Expr::Op::Xor, {src(0), src(1)})}));
  out.emplace_back("anti_pair", custom({0.3}, {src(0), op(Expr::Op::Not, {src(0)})}));
  const auto neg = [&](int s) { return op(Expr::Op::Not, {src(s)}); };
  out.emplace_back("one_hot_four", custom({0.5, 0.5}, {op(Expr::Op::And, {neg(0), neg(1)}), op(Expr::Op::And, {neg(0), src(1)}),
                                                       op(Expr::Op::And, {src(0), neg(1)}), op(Expr::Op::And, {src(0), src(1)})}));
  out.emplace_back("independent_triple", custom({0.2, 0.5, 0.7}, {src(0), src(1), src(2)}));
  ProcessSpec xr;
  xr.kind = Kind::PnaXor;
  xr.params = XorParams{3};
  out.emplace_back("pna_xor_3", xr);
  return out;
}

std::vector<std::pair<std::string, ProcessSpec>> negative_covariance_family() {
  std::vector<std::pair<std::string, ProcessSpec>> out;
  for (auto& [name, spec] : pz_family()) {
    if (name != "xor_triple") out.emplace_back(name, spec);
  }
  return out;
}

std::vector<std::pair<std::string, ProcessSpec>> witness_family() {
  std::vector<std::pair<std::string, ProcessSpec>> out;
  ProcessSpec mu;
  mu.kind = Kind::BlockMu;
  mu.params = BlockFamilyParams{};
  out.emplace_back("BlockMu", mu);
  ProcessSpec chain;
  chain.kind = Kind::ThinChain;
  ChainParams cp;
  cp.sequence.levels.form = LevelRule::Form::Geometric;
  cp.sequence.levels.first = 0.5;
  cp.sequence.levels.ratio = 0.5;
  cp.sequence.counts.form = CountRule::Form::Linear;
  cp.sequence.counts.slope = 1.0;
  chain.params = cp;
  out.emplace_back("ThinChain", chain);
  ProcessSpec sd;
  sd.kind = Kind::SqrtDecay;
  sd.params = SqrtParams{};
  out.emplace_back("SqrtDecay", sd);
  ProcessSpec bs;
  bs.kind = Kind::BlockSqrt;
  bs.params = SqrtParams{};
  out.emplace_back("BlockSqrt", bs);
  return out;
}

std::vector<std::string> suite_names() { return {"all", "identities", "mgf", "rho", "decoupling", "witnesses"}; }

std::vector<CheckReport> run_suite(const std::string& suite, std::uint64_t seed, const VerifyConfig& config) {
  const auto names = suite_names();
  if (std::find(names.begin(), names.end(), suite) == names.end()) {
    throw Error(ErrorCode::InvalidSpec, "unknown suite '" + suite + "'");
  }
  const bool all = suite == "all";
  std::vector<CheckReport> out;
  std::uint64_t stream = 0;
  const auto next_seed = [&] { return mix64(seed ^ mix64(++stream)); };
  if (all || suite == "identities") {
    out.push_back(check_gamma_delta(config));
    out.push_back(check_covariance_twins(config));
    out.push_back(check_third_moments(config));
  }
  if (all || suite == "mgf") out.push_back(check_mgf_bound(config));
  if (all || suite == "rho") out.push_back(check_rho_is_metric(config, next_seed()));
  if (all || suite == "decoupling") {
    out.push_back(check_pz_decoupling(pz_family()));
    for (const auto& [name, spec] : negative_covariance_family()) {
      out.push_back(check_delta_decoupling(name, spec, config, next_seed()));
    }
  }
  if (all || suite == "witnesses") {
    for (const auto& [name, spec] : witness_family()) {
      const ProcessModel model(spec);
      const double eps = spec.kind == Kind::BlockMu     ? config.sc_epsilon_block
                         : spec.kind == Kind::ThinChain ? config.sc_epsilon_chain
                                                        : config.sc_epsilon_sqrt;
      out.push_back(verify_sc_witness(model, shipped_witness(model, eps), eps, config.sc_samples, next_seed(),
                                      config.threads));
    }
  }
  for (auto& r : out) r.parameters["config"] = verify_config_to_json(config);
  return out;
}

}  // namespace corrbin
