#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "corrbin/process_models.hpp"
#include "corrbin/rng.hpp"
#include "json.hpp"

namespace corrbin {

enum class CheckStatus { Pass, Fail, Inconclusive };
const char* to_string(CheckStatus status);

struct CheckReport {
  std::string name;
  CheckStatus status = CheckStatus::Fail;
  double margin = 0.0;     // worst case; sign convention per check, see `details`
  double tolerance = 0.0;
  nlohmann::json parameters = nlohmann::json::object();
  std::uint64_t seed = 0;
  nlohmann::json details = nlohmann::json::object();
};

nlohmann::json report_to_json(const CheckReport& report);

// Grid densities and tolerances; every field can be overridden from JSON.
struct VerifyConfig {
  unsigned max_block = 6;
  unsigned gamma_max_k = 40;
  std::size_t mgf_p_steps = 99;  // p in {0.01, ..., 0.99}
  std::size_t mgf_r_steps = 10;
  std::size_t mgf_t_steps = 11;  // t in [0, mgf_t_max]
  double mgf_t_max = 10.0;
  double mgf_tolerance = 1e-9;
  std::size_t concavity_points = 10000;
  double concavity_tolerance = 1e-9;
  std::uint64_t triangle_trials = 10000;
  double triangle_tolerance = 1e-12;
  std::vector<std::uint64_t> decoupling_n = {4, 16, 64};
  std::uint64_t decoupling_replicates = 2000;
  double level = 0.99;
  std::uint64_t sc_samples = 100000;
  double sc_epsilon_block = 0.125;
  double sc_epsilon_chain = 0.05;
  double sc_epsilon_sqrt = 0.25;
  unsigned threads = 0;
};

VerifyConfig verify_config_from_json(const nlohmann::json& j);
nlohmann::json verify_config_to_json(const VerifyConfig& config);

CheckReport check_gamma_delta(const VerifyConfig& config);
CheckReport check_covariance_twins(const VerifyConfig& config);
CheckReport check_third_moments(const VerifyConfig& config);

// Exact 4-atom expectation of exp(t((X_i - p_i) - (X_j - p_j))).
double mgf_difference(double p_i, double p_j, double r, double t);
CheckReport check_mgf_bound(const VerifyConfig& config);

CheckReport check_rho_is_metric(const VerifyConfig& config, std::uint64_t seed);

struct PzResult {
  double p_any = 0.0;              // P(Z > 0)
  double p_any_independent = 0.0;  // P(Z~ > 0)
  double max_covariance = 0.0;     // largest pairwise covariance
};
// Exact enumeration over the sources of a Custom or PnaXor model.
PzResult pz_enumerate(const ProcessModel& model);
CheckReport check_pz_decoupling(const std::vector<std::pair<std::string, ProcessSpec>>& family);

// Throws CovarianceSignViolation when a closed-form pairwise covariance is positive.
CheckReport check_delta_decoupling(const std::string& name, const ProcessSpec& spec, const VerifyConfig& config,
                                   std::uint64_t seed);

// Condition (SC) witness: events read latents, centers are latent variables.
struct ScWitness {
  std::string name;
  std::size_t max_events = 1;  // K
  double growth_bound = 1.0;   // declared bound on sup log(k+1) / log(1 / P(E_k))
  std::uint64_t centers = 0;   // center 0 is the shared anchor when `anchor_center`, else component 1
  bool anchor_center = true;
  std::function<double(std::uint64_t)> event_probability;  // k >= 1
  std::function<bool(const KeyedRng&, std::uint64_t, std::uint64_t)> event;  // (rng, sample, k)
  std::function<int(const KeyedRng&, std::uint64_t, std::uint64_t)> center;  // (rng, sample, c)
  // index -> (center, events whose union contains the disagreement)
  std::function<std::pair<std::uint64_t, std::vector<std::uint64_t>>(Component)> cover;
  std::vector<Component> probe_indices;
  std::vector<std::uint64_t> probe_events;
};

ScWitness shipped_witness(const ProcessModel& model, double eps);
CheckReport verify_sc_witness(const ProcessModel& model, const ScWitness& witness, double eps, std::uint64_t samples,
                              std::uint64_t seed, unsigned threads = 0);

// Catalog specs used by the suite.
std::vector<std::pair<std::string, ProcessSpec>> pz_family();
std::vector<std::pair<std::string, ProcessSpec>> negative_covariance_family();
std::vector<std::pair<std::string, ProcessSpec>> witness_family();

// Suites: all, identities, mgf, rho, decoupling, witnesses.
std::vector<std::string> suite_names();
std::vector<CheckReport> run_suite(const std::string& suite, std::uint64_t seed, const VerifyConfig& config = {});

}  // namespace corrbin
