#include "corrbin/delta_estimator.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

#include "corrbin/error.hpp"
#include "corrbin/io.hpp"
#include "corrbin/parallel.hpp"

namespace corrbin {

const char* to_string(EstimatorMode mode) { return mode == EstimatorMode::Enumerated ? "enumerated" : "collapsed"; }

EstimatorMode mode_from_string(const std::string& name) {
  if (name == "enumerated") return EstimatorMode::Enumerated;
  if (name == "collapsed") return EstimatorMode::Collapsed;
  throw Error(ErrorCode::ModeUnsupported, name);
}

std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t n) { return mix64(seed ^ mix64(n + 0x9e3779b97f4a7c15ULL)); }

namespace {

constexpr std::size_t kColumnChunk = 4096;

double enumerated_statistic(const ProcessModel& model, std::uint64_t n, SeedLineage lineage) {
  const std::uint64_t total = model.truncation();
  double sup = 0.0;
  std::vector<Component> chunk;
  for (Component first = 1; first <= total; first += kColumnChunk) {
    chunk.clear();
    for (Component i = first; i <= std::min<Component>(total, first + kColumnChunk - 1); ++i) chunk.push_back(i);
    const auto batch = sample_batch(model, chunk, n, lineage);
    Eigen::VectorXd means(static_cast<Eigen::Index>(chunk.size()));
    for (std::size_t c = 0; c < chunk.size(); ++c) means(static_cast<Eigen::Index>(c)) = mean(model, chunk[c]);
    sup = std::max(sup, sup_deviation(batch, means));
  }
  return sup;
}

bool collapsible(Kind kind) {
  return kind == Kind::BlockMu || kind == Kind::BlockNu || kind == Kind::WideTree || kind == Kind::ThinChain ||
         kind == Kind::Product;
}

}  // namespace

double replicate_statistic(const ProcessModel& model, std::uint64_t n, SeedLineage lineage, const EstimatorOptions& options,
                           double* residual) {
  if (options.mode == EstimatorMode::Enumerated) {
    if (!model.truncation()) throw Error(ErrorCode::TruncationMissing, "enumerated mode needs a truncation");
    return enumerated_statistic(model, n, lineage);
  }
  const auto rep = collapsed_replicate(model, n, lineage, options.sup_mode);
  if (residual) *residual = rep.residual;
  return rep.statistic;
}

DeltaEstimate estimate_delta(const ProcessSpec& spec, std::uint64_t n, std::uint64_t replicates, std::uint64_t seed,
                             const EstimatorOptions& options) {
  if (replicates < 2) throw Error(ErrorCode::InvalidSpec, "replicates must be >= 2");
  if (n < 1) throw Error(ErrorCode::InvalidSpec, "n must be >= 1");
  if (options.mode == EstimatorMode::Collapsed && !collapsible(spec.kind)) {
    throw Error(ErrorCode::ModeUnsupported, std::string("collapsed mode for ") + to_string(spec.kind));
  }
  const ProcessModel model(spec);
  if (options.mode == EstimatorMode::Enumerated && !model.truncation()) {
    throw Error(ErrorCode::TruncationMissing, "enumerated mode needs a truncation");
  }
  DeltaEstimate out;
  out.n = n;
  out.replicates = replicates;
  out.mode = options.mode;
  out.level = options.level;
  out.truncation = model.truncation();
  out.seed = seed;
  out.statistics.assign(replicates, 0.0);
  std::vector<double> residuals(replicates, 0.0);
  const std::uint64_t master = stream_seed(seed, n);
  if (options.mode == EstimatorMode::Collapsed && spec.kind == Kind::Product) {
    // the product law is exact and seed-free
    const double exact = replicate_statistic(model, n, {master, 0}, options);
    std::fill(out.statistics.begin(), out.statistics.end(), exact);
  } else {
    parallel_for(replicates, options.threads ? options.threads : default_threads(), [&](std::size_t r) {
      out.statistics[r] = replicate_statistic(model, n, {master, r}, options, &residuals[r]);
    });
  }
  const double count = static_cast<double>(replicates);
  double sum = 0.0;
  for (double s : out.statistics) sum += s;
  out.estimate = sum / count;
  double ss = 0.0;
  for (double s : out.statistics) ss += (s - out.estimate) * (s - out.estimate);
  out.stddev = std::sqrt(ss / (count - 1.0));
  const double half = normal_quantile_two_sided(options.level) * out.stddev / std::sqrt(count);
  out.ci_low = out.estimate - half;
  out.ci_high = out.estimate + half;
  for (double r : residuals) out.residual = std::max(out.residual, r);
  return out;
}

std::vector<DeltaEstimate> convergence_curve(const ProcessSpec& spec, const std::vector<std::uint64_t>& ns,
                                             std::uint64_t replicates, std::uint64_t seed,
                                             const EstimatorOptions& options) {
  if (ns.empty()) throw Error(ErrorCode::InvalidSpec, "empty n list");
  std::vector<DeltaEstimate> out;
  for (auto n : ns) out.push_back(estimate_delta(spec, n, replicates, seed, options));
  return out;
}

std::string estimates_to_csv(const std::vector<DeltaEstimate>& rows, const std::string& spec_name) {
  std::ostringstream out;
  out << "spec,n,replicates,estimate,ci_low,ci_high,mode,truncation,seed\n";
  for (const auto& e : rows) {
    out << spec_name << ',' << e.n << ',' << e.replicates << ',' << format_double(e.estimate) << ','
        << format_double(e.ci_low) << ',' << format_double(e.ci_high) << ',' << to_string(e.mode) << ','
        << e.truncation << ',' << e.seed << '\n';
  }
  return out.str();
}

}  // namespace corrbin
