// Command-line front end: every subcommand writes its artifacts under --out.
#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <sstream>

#include "corrbin/bounds.hpp"
#include "corrbin/covering.hpp"
#include "corrbin/delta_estimator.hpp"
#include "corrbin/error.hpp"
#include "corrbin/io.hpp"
#include "corrbin/metrics.hpp"
#include "corrbin/process_models.hpp"
#include "corrbin/sampling.hpp"
#include "corrbin/trees.hpp"
#include "corrbin/verify.hpp"
#include "json.hpp"

namespace {

using namespace corrbin;
using nlohmann::json;

constexpr int kExitCheckFailed = 1;
constexpr int kExitUsage = 2;
constexpr int kExitIo = 3;

struct RunConfig {
  std::string subcommand;
  std::string spec_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  std::uint64_t replicates = 1000;
  std::vector<std::uint64_t> ns;
  std::vector<double> eps_grid;
  std::string mode = "enumerated";
  std::uint64_t truncation = 0;
  std::string suite = "all";
  std::string config_path;
  unsigned threads = 0;
  double level = 0.95;
  // tree
  std::vector<double> levels;
  std::vector<std::uint64_t> counts;
  std::string export_format = "dot";
  std::uint64_t split_budget = 0;
};

// Hash of every flag that shapes an artifact, plus the spec text.
std::string config_hash(const RunConfig& c) {
  std::ostringstream s;
  s << c.subcommand << '|' << c.seed << '|' << c.replicates << '|' << c.mode << '|' << c.truncation << '|' << c.suite
    << '|' << c.level << '|' << c.export_format << '|' << c.split_budget << '|';
  for (auto n : c.ns) s << n << ',';
  s << '|';
  for (auto e : c.eps_grid) s << format_double(e) << ',';
  s << '|';
  for (auto e : c.levels) s << format_double(e) << ',';
  s << '|';
  for (auto n : c.counts) s << n << ',';
  s << '|';
  if (!c.spec_path.empty()) s << read_file(c.spec_path);
  if (!c.config_path.empty()) s << read_file(c.config_path);
  return fnv1a_hex(s.str());
}

std::string stamp(const RunConfig& c, const std::string& hash) {
  return "# config_hash=" + hash + " seed=" + std::to_string(c.seed) + "\n";
}

std::string out_path(const RunConfig& c, const std::string& name) {
  std::filesystem::create_directories(c.out_dir);
  return (std::filesystem::path(c.out_dir) / name).string();
}

void write_artifact(const RunConfig& c, const std::string& name, const std::string& body) {
  try {
    write_file(out_path(c, name), body);
  } catch (const std::filesystem::filesystem_error& e) {
    throw Error(ErrorCode::Io, e.what());
  }
}

ProcessSpec load(const RunConfig& c) {
  if (c.spec_path.empty()) throw Error(ErrorCode::InvalidSpec, "--spec is required");
  ProcessSpec spec = load_spec(c.spec_path);
  if (c.truncation) spec.truncation = c.truncation;
  return spec;
}

std::string spec_name(const RunConfig& c) { return std::filesystem::path(c.spec_path).stem().string(); }

std::vector<Component> component_range(const ProcessModel& model) {
  if (!model.truncation()) throw Error(ErrorCode::TruncationMissing, "this subcommand needs --truncation");
  std::vector<Component> out;
  for (Component i = 1; i <= model.truncation(); ++i) out.push_back(i);
  return out;
}

int run_catalog(const RunConfig& c, const std::string& hash) {
  if (c.spec_path.empty()) {
    for (auto kind : {Kind::Product, Kind::BlockMu, Kind::BlockNu, Kind::ThinChain, Kind::WideTree, Kind::SqrtDecay,
                      Kind::BlockSqrt, Kind::PnaXor, Kind::Custom}) {
      std::cout << to_string(kind) << "\n";
    }
    return 0;
  }
  const ProcessModel model(load(c));
  std::ostringstream csv;
  csv << stamp(c, hash) << "spec,i,mean\n";
  for (auto i : component_range(model)) csv << spec_name(c) << ',' << i << ',' << format_double(mean(model, i)) << '\n';
  write_artifact(c, "catalog.csv", csv.str());
  std::cout << to_string(model.kind()) << ": " << model.truncation() << " components\n";
  return 0;
}

int run_sample(const RunConfig& c, const std::string& hash) {
  const ProcessModel model(load(c));
  const std::uint64_t n = c.ns.empty() ? 1 : c.ns.front();
  const auto batch = sample_batch(model, component_range(model), n, {c.seed, 0});
  write_artifact(c, "sample.csv", stamp(c, hash) + batch_to_csv(batch));
  std::cout << "sampled " << n << " x " << batch.indices.size() << "\n";
  return 0;
}

int run_moments(const RunConfig& c, const std::string& hash) {
  const ProcessSpec spec = load(c);
  const ProcessModel model(spec);
  const auto indices = component_range(model);
  const std::uint64_t n = c.ns.empty() ? 1000 : c.ns.front();
  const auto view = empirical_moments(spec, indices, n, c.replicates, c.seed, c.threads);
  write_artifact(c, "moments.csv", stamp(c, hash) + view_to_csv(view));
  double worst_z = 0.0;
  try {
    const auto exact = closed_form_view(model, indices);
    for (Eigen::Index a = 0; a < view.r.rows(); ++a)
      for (Eigen::Index b = a; b < view.r.cols(); ++b) {
        const double se = std::max(view.r_se(a, b), 1e-12);
        worst_z = std::max(worst_z, std::abs(view.r(a, b) - exact.r(a, b)) / se);
      }
    std::cout << "max |empirical - closed form| / se = " << worst_z << "\n";
  } catch (const Error& e) {
    if (e.code() != ErrorCode::NoClosedForm) throw;
  }
  return 0;
}

int run_metric(const RunConfig& c, const std::string& hash) {
  const ProcessModel model(load(c));
  const auto view = closed_form_view(model, component_range(model));
  std::ostringstream csv;
  csv << stamp(c, hash) << "i,j,xi,rho\n";
  for (std::size_t a = 0; a < view.size(); ++a)
    for (std::size_t b = a + 1; b < view.size(); ++b)
      csv << view.indices[a] << ',' << view.indices[b] << ',' << format_double(view.xi_at(a, b)) << ','
          << format_double(view.distance_at(Metric::Rho, a, b)) << '\n';
  write_artifact(c, "metric.csv", csv.str());
  json report = {{"config_hash", hash}, {"seed", c.seed}, {"indices", view.size()}};
  if (view.size() >= 3) {
    const auto ax = metric_axiom_check(view, 100000, c.seed);
    report["max_triangle_xi"] = ax.max_triangle_xi;
    report["max_triangle_rho"] = ax.max_triangle_rho;
    report["max_symmetry"] = ax.max_symmetry;
    report["quotient_pairs"] = ax.quotient_pairs;
    report["triples"] = ax.triples;
    report["passed"] = ax.passed();
  }
  write_artifact(c, "metric.json", report.dump(2) + "\n");
  return report.value("passed", true) ? 0 : kExitCheckFailed;
}

CoveringReport cover_for(const RunConfig& c, const ProcessModel& model, const MetricView& view) {
  const SkeletonTree* tree = model.kind() == Kind::WideTree ? &model.tree() : nullptr;
  if (c.eps_grid.empty()) return covering_report(view, tree, c.threads);
  CoveringReport report;
  report.xi_curve = covering_curve(view, Metric::Xi, c.eps_grid, tree, c.threads);
  report.rho_curve = covering_curve(view, Metric::Rho, c.eps_grid, nullptr, c.threads);
  report.c_mu = entropy_integral(report.xi_curve, false);
  report.d_mu = entropy_integral(report.rho_curve, true);
  return report;
}

json integral_json(const EntropyIntegral& e) {
  return {{"value", e.value},         {"left_sum", e.left_sum},         {"right_sum", e.right_sum},
          {"dyadic_lower", e.dyadic_lower}, {"dyadic_upper", e.dyadic_upper}, {"resolution", e.resolution},
          {"grid_too_coarse", e.grid_too_coarse}};
}

int run_cover(const RunConfig& c, const std::string& hash) {
  const ProcessModel model(load(c));
  const auto view = closed_form_view(model, component_range(model));
  const auto report = cover_for(c, model, view);
  write_artifact(c, "cover.csv", stamp(c, hash) + covering_to_csv(report));
  json nudges = json::array();
  for (const auto& n : report.xi_curve.nudges) nudges.push_back({n.requested, n.used});
  const json out = {{"config_hash", hash}, {"seed", c.seed},      {"C_mu", integral_json(report.c_mu)},
                    {"D_mu", integral_json(report.d_mu)}, {"nudges", nudges}};
  write_artifact(c, "cover.json", out.dump(2) + "\n");
  if (report.c_mu.grid_too_coarse || report.d_mu.grid_too_coarse) std::cerr << "warning: grid too coarse\n";
  std::cout << "C_mu=" << format_double(report.c_mu.value) << " D_mu=" << format_double(report.d_mu.value) << "\n";
  return 0;
}

int run_tree(const RunConfig& c, const std::string& hash) {
  SkeletonTree tree;
  if (!c.spec_path.empty()) {
    tree = ProcessModel(load(c)).tree();
  } else {
    if (c.levels.empty() || c.counts.empty()) throw Error(ErrorCode::InvalidSpec, "tree needs --levels and --counts");
    LevelRule levels;
    levels.values = c.levels;
    CountRule counts;
    counts.values = c.counts;
    LevelCountSequence seq{levels, counts};
    const std::uint64_t budget = c.split_budget ? c.split_budget : budget_through_level(seq, *seq.discontinuities());
    tree = build_skeleton(levels, counts, budget);
  }
  if (c.export_format == "dot") {
    write_artifact(c, "tree.dot", "// config_hash=" + hash + "\n" + export_dot(tree));
  } else if (c.export_format == "json") {
    json j = tree_to_json(tree);
    j["config_hash"] = hash;
    write_artifact(c, "tree.json", j.dump(2) + "\n");
  } else {
    throw Error(ErrorCode::InvalidSpec, "unknown export format '" + c.export_format + "'");
  }
  std::cout << tree.nodes.size() << " nodes, " << tree.leaf_count() << " leaves\n";
  return 0;
}

int run_bounds(const RunConfig& c, const std::string& hash) {
  const ProcessSpec spec = load(c);
  const ProcessModel model(spec);
  const auto view = closed_form_view(model, component_range(model));
  const auto cover = cover_for(c, model, view);
  const std::vector<std::uint64_t> ns = c.ns.empty() ? std::vector<std::uint64_t>{16, 256, 4096} : c.ns;
  std::vector<BoundSet> sets;
  json reports = json::array();
  for (auto n : ns) {
    BoundSet set;
    set.n = n;
    set.c_mu = cover.c_mu.value;
    set.d_mu = cover.d_mu.value;
    set.chaining = chaining_bound(cover.xi_curve.epsilon_grid, cover.xi_curve.n_upper, set.c_mu, n);
    set.dudley = dudley_bound(set.d_mu, n);
    if (spec.kind == Kind::Product) {
      set.has_means = true;
      const auto& rule = std::get<ProductParams>(spec.params).means;
      const MeanSequence p = [&](std::uint64_t j) { return j <= model.truncation() ? rule(j) : 0.0; };
      set.T = functional_T(p, model.truncation());
      set.S = functional_S(p, model.truncation());
      set.rate = independent_rate(p, n, model.truncation());
    }
    reports.push_back(bound_set_to_json(set));
    sets.push_back(set);
  }
  write_artifact(c, "bounds.csv", stamp(c, hash) + bound_sets_to_csv(sets));
  write_artifact(c, "bounds.json", json{{"config_hash", hash}, {"seed", c.seed}, {"bounds", reports}}.dump(2) + "\n");
  return 0;
}

int run_delta(const RunConfig& c, const std::string& hash) {
  const ProcessSpec spec = load(c);
  EstimatorOptions options;
  options.mode = mode_from_string(c.mode);
  options.threads = c.threads;
  options.level = c.level;
  const std::vector<std::uint64_t> ns = c.ns.empty() ? std::vector<std::uint64_t>{1} : c.ns;
  const auto rows = convergence_curve(spec, ns, c.replicates, c.seed, options);
  write_artifact(c, "delta.csv", stamp(c, hash) + estimates_to_csv(rows, spec_name(c)));
  for (const auto& r : rows) {
    std::cout << "n=" << r.n << " estimate=" << format_double(r.estimate) << " ci=[" << format_double(r.ci_low) << ", "
              << format_double(r.ci_high) << "]\n";
  }
  return 0;
}

int run_verify(const RunConfig& c, const std::string& hash) {
  VerifyConfig config;
  if (!c.config_path.empty()) config = verify_config_from_json(json::parse(read_file(c.config_path)));
  config.threads = c.threads;
  const auto reports = run_suite(c.suite, c.seed, config);
  std::ostringstream summary;
  summary << stamp(c, hash) << "check,status,margin,tolerance\n";
  bool ok = true;
  for (const auto& r : reports) {
    json j = report_to_json(r);
    j["parameters"]["config"].erase("threads");  // thread count does not shape results
    j["config_hash"] = hash;
    std::string file = r.name;
    for (auto& ch : file) {
      if (ch == ':') ch = '_';
    }
    write_artifact(c, "verify_" + file + ".json", j.dump(2) + "\n");
    summary << r.name << ',' << to_string(r.status) << ',' << format_double(r.margin) << ','
            << format_double(r.tolerance) << '\n';
    std::cout << (r.status == CheckStatus::Pass ? "PASS " : "FAIL ") << r.name << "\n";
    ok = ok && r.status == CheckStatus::Pass;
  }
  write_artifact(c, "verify_summary.csv", summary.str());
  return ok ? 0 : kExitCheckFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Correlated binary process toolkit"};
  app.require_subcommand(1);
  RunConfig c;
  const char* env_out = std::getenv("CORRBIN_OUT");
  c.out_dir = env_out ? env_out : "out";

  const auto common = [&](CLI::App* sub) {
    sub->add_option("--spec", c.spec_path, "Process spec JSON");
    sub->add_option("--out", c.out_dir, "Output directory (default $CORRBIN_OUT or ./out)");
    sub->add_option("--seed", c.seed, "Master seed");
    sub->add_option("--threads", c.threads, "Worker threads (0: all cores)");
    sub->add_option("--truncation", c.truncation, "Override the spec truncation");
  };
  std::map<std::string, CLI::App*> subs;
  for (const auto* name : {"catalog", "sample", "moments", "metric", "cover", "tree", "bounds", "delta", "verify"}) {
    subs[name] = app.add_subcommand(name);
    common(subs[name]);
  }
  subs["catalog"]->description("List process kinds, or the component means of a spec");
  subs["sample"]->description("Draw n samples of the truncated process");
  subs["moments"]->description("Empirical means and cross moments");
  subs["metric"]->description("Closed-form xi and rho tables with an axiom report");
  subs["cover"]->description("Covering and packing curves with entropy integrals");
  subs["tree"]->description("Build a skeleton tree and export it");
  subs["bounds"]->description("Rate expressions, chaining and Dudley bounds");
  subs["delta"]->description("Monte Carlo estimate of the expected sup deviation");
  subs["verify"]->description("Run property suites");
  for (const auto* name : {"sample", "moments", "bounds", "delta"}) subs[name]->add_option("--n", c.ns, "Sample sizes")->delimiter(',');
  for (const auto* name : {"moments", "delta"}) subs[name]->add_option("--replicates", c.replicates, "Replicates");
  for (const auto* name : {"cover", "bounds"}) subs[name]->add_option("--eps-grid", c.eps_grid, "Epsilon grid")->delimiter(',');
  subs["delta"]->add_option("--mode", c.mode, "enumerated or collapsed")->check(CLI::IsMember({"enumerated", "collapsed"}));
  subs["delta"]->add_option("--level", c.level, "Confidence level");
  subs["verify"]->add_option("--suite", c.suite, "Suite name")->check(CLI::IsMember(suite_names()));
  subs["verify"]->add_option("--config", c.config_path, "Verify config JSON");
  subs["tree"]->add_option("--levels", c.levels, "Level list")->delimiter(',');
  subs["tree"]->add_option("--counts", c.counts, "Count list")->delimiter(',');
  subs["tree"]->add_option("--export", c.export_format, "dot or json")->check(CLI::IsMember({"dot", "json"}));
  subs["tree"]->add_option("--split-budget", c.split_budget, "Split budget (0: all splits)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }
  for (const auto& [name, sub] : subs) {
    if (sub->parsed()) c.subcommand = name;
  }
  try {
    const std::string hash = config_hash(c);
    if (c.subcommand == "catalog") return run_catalog(c, hash);
    if (c.subcommand == "sample") return run_sample(c, hash);
    if (c.subcommand == "moments") return run_moments(c, hash);
    if (c.subcommand == "metric") return run_metric(c, hash);
    if (c.subcommand == "cover") return run_cover(c, hash);
    if (c.subcommand == "tree") return run_tree(c, hash);
    if (c.subcommand == "bounds") return run_bounds(c, hash);
    if (c.subcommand == "delta") return run_delta(c, hash);
    if (c.subcommand == "verify") return run_verify(c, hash);
  } catch (const Error& e) {
    std::cerr << e.what() << "\n";
    return e.code() == ErrorCode::Io ? kExitIo : kExitUsage;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "invalid-spec: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "io: " << e.what() << "\n";
    return kExitIo;
  }
  return kExitUsage;
}
