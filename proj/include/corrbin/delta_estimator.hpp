#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "corrbin/process_models.hpp"
#include "corrbin/sampling.hpp"

namespace corrbin {

enum class EstimatorMode { Enumerated, Collapsed };
const char* to_string(EstimatorMode mode);
EstimatorMode mode_from_string(const std::string& name);

struct EstimatorOptions {
  EstimatorMode mode = EstimatorMode::Enumerated;
  double level = 0.95;  // two-sided CI level
  unsigned threads = 0;  // 0: default_threads()
  SupMode sup_mode = SupMode::ExactExpectation;
};

struct DeltaEstimate {
  std::uint64_t n = 1;
  std::uint64_t replicates = 0;
  EstimatorMode mode = EstimatorMode::Enumerated;
  double estimate = 0.0;
  double stddev = 0.0;  // sample standard deviation of replicate statistics
  double ci_low = 0.0;
  double ci_high = 0.0;
  double level = 0.95;
  std::uint64_t truncation = 0;  // 0: untruncated
  std::uint64_t seed = 0;
  double residual = 0.0;  // largest collapsed-horizon residual over replicates
  std::vector<double> statistics;

  double half_width() const { return (ci_high - ci_low) / 2.0; }
};

// Master seed of the replicate streams for sample size n.
std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t n);

// Replicate statistic: sup deviation over components 1..truncation (enumerated)
// or the collapsed per-group law.
double replicate_statistic(const ProcessModel& model, std::uint64_t n, SeedLineage lineage, const EstimatorOptions& options,
                           double* residual = nullptr);

DeltaEstimate estimate_delta(const ProcessSpec& spec, std::uint64_t n, std::uint64_t replicates, std::uint64_t seed,
                             const EstimatorOptions& options = {});

std::vector<DeltaEstimate> convergence_curve(const ProcessSpec& spec, const std::vector<std::uint64_t>& ns,
                                             std::uint64_t replicates, std::uint64_t seed,
                                             const EstimatorOptions& options = {});

// Columns: spec,n,replicates,estimate,ci_low,ci_high,mode,truncation,seed.
std::string estimates_to_csv(const std::vector<DeltaEstimate>& rows, const std::string& spec_name);

}  // namespace corrbin
