// Acceptance runner: one PASS/FAIL line per criterion. Optional arguments
// select criteria by number.
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "corrbin/bounds.hpp"
#include "corrbin/covering.hpp"
#include "corrbin/delta_estimator.hpp"
#include "corrbin/io.hpp"
#include "corrbin/metrics.hpp"
#include "corrbin/parallel.hpp"
#include "corrbin/process_models.hpp"
#include "corrbin/sampling.hpp"
#include "corrbin/verify.hpp"

using namespace corrbin;
namespace fs = std::filesystem;

namespace {

const std::string kSpecs = CORRBIN_SPECS;
const std::string kCli = CORRBIN_CLI;
constexpr std::uint64_t kSeed = 20240601;

ProcessSpec catalog(const std::string& name) { return load_spec(kSpecs + "/" + name + ".json"); }

std::vector<Component> first(std::uint64_t m) {
  std::vector<Component> idx(m);
  for (Component i = 1; i <= m; ++i) idx[i - 1] = i;
  return idx;
}

ProcessSpec block_spec(Kind kind, std::uint64_t override_size, std::uint64_t truncation) {
  ProcessSpec spec;
  spec.kind = kind;
  BlockFamilyParams p;
  p.block_size_override = override_size;
  spec.params = p;
  spec.truncation = truncation;
  return spec;
}

EstimatorOptions collapsed(double level = 0.95, unsigned threads = 0) {
  EstimatorOptions o;
  o.mode = EstimatorMode::Collapsed;
  o.level = level;
  o.threads = threads;
  return o;
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

// 1. Covariance twins.
Outcome covariance_twins() {
  auto report = check_covariance_twins(VerifyConfig{});
  // Second route: full closed-form views over components spanning blocks 1..6.
  ProcessModel mu(block_spec(Kind::BlockMu, 3, 18)), nu(block_spec(Kind::BlockNu, 3, 18));
  auto vm = closed_form_view(mu, first(18)), vn = closed_form_view(nu, first(18));
  const double view_gap = (vm.r - vn.r).cwiseAbs().maxCoeff();
  return {report.margin <= 1e-12 && view_gap <= 1e-12,
          "block-pair max |diff| " + fmt(report.margin) + ", view max |diff| " + fmt(view_gap)};
}

// 2. Third moments.
Outcome third_moments() {
  auto report = check_third_moments(VerifyConfig{});
  ProcessModel mu(block_spec(Kind::BlockMu, 3, 18)), nu(block_spec(Kind::BlockNu, 3, 18));
  double worst = 0.0;
  for (Component i = 1; i <= 18; ++i)
    for (Component j = i; j <= 18; ++j)
      for (Component k = j; k <= 18; ++k)
        worst = std::max(worst, std::abs(third_moment(mu, i, j, k) - third_moment(nu, i, j, k)));
  return {report.margin <= 1e-12 && worst <= 1e-12,
          "block-triple max |diff| " + fmt(report.margin) + ", component-triple max |diff| " + fmt(worst)};
}

// 3. gamma/delta system.
Outcome gamma_delta_system() {
  double residual = 0.0, lo = 1e9, hi = -1e9;
  for (unsigned k = 1; k <= 40; ++k) {
    const auto gd = gamma_delta(k);
    const double p = std::ldexp(1.0, -static_cast<int>(k));
    residual = std::max(residual, std::abs((1 - gd.delta) * (2 * gd.gamma - gd.gamma * gd.gamma) - p));
    residual = std::max(residual, std::abs(gd.gamma + gd.delta - gd.gamma * gd.delta - p));
    if (k >= 10) {
      lo = std::min(lo, gd.gamma / (p / 2));
      hi = std::max(hi, gd.gamma / (p / 2));
    }
  }
  const auto report = check_gamma_delta(VerifyConfig{});
  return {report.status == CheckStatus::Pass && residual <= 1e-12 && lo >= 0.95 && hi <= 1.05,
          "max residual " + fmt(residual) + ", ratio range [" + fmt(lo) + ", " + fmt(hi) + "]"};
}

// 4. MGF inequality.
Outcome mgf_inequality() {
  auto r = check_mgf_bound(VerifyConfig{});
  return {r.margin >= -1e-9, "min slack " + fmt(r.margin) + " over " + r.details.at("cells").dump() + " cells"};
}

// 5. rho metric axioms.
Outcome rho_axioms() {
  auto r = check_rho_is_metric(VerifyConfig{}, kSeed);
  return {r.status == CheckStatus::Pass, r.details.dump()};
}

// 6. BlockNu divergence floor.
Outcome nu_floor() {
  auto spec = catalog("blocknu");
  bool pass = true;
  std::ostringstream detail;
  for (std::uint64_t n : {2, 3}) {
    const auto gd = gamma_delta(static_cast<unsigned>(n));
    const double size = std::exp(log_block_size(spec, static_cast<unsigned>(n)));
    const double floor = 0.5 - gd.delta / 2 - std::exp(-std::pow(gd.gamma / 2, double(n)) * size);
    auto e = estimate_delta(spec, n, 1000, kSeed, collapsed());
    const bool ok = e.estimate >= floor - e.half_width();
    pass = pass && ok;
    detail << "n=" << n << " estimate " << fmt(e.estimate) << " +- " << fmt(e.half_width()) << " floor " << fmt(floor)
           << "; ";
  }
  return {pass, detail.str()};
}

// 7. BlockMu convergence.
Outcome mu_convergence() {
  auto curve = convergence_curve(catalog("blockmu"), {4, 16, 64, 256, 1024}, 1000, kSeed, collapsed());
  bool pass = curve.back().estimate < 0.1;
  std::ostringstream detail;
  for (std::size_t i = 0; i < curve.size(); ++i) {
    if (i && curve[i].estimate > curve[i - 1].estimate + curve[i - 1].half_width() + curve[i].half_width()) pass = false;
    detail << "n=" << curve[i].n << ":" << fmt(curve[i].estimate) << " ";
  }
  return {pass, detail.str()};
}

// 8. Wide-tree constancy.
Outcome wide_tree() {
  auto spec = catalog("widetree");
  ProcessModel model(spec);
  const double bias = tree_tail_bias(model.tree(), 8);
  bool pass = bias < 0.01;
  std::ostringstream detail;
  detail << "tail bias at n=8 " << fmt(bias) << "; ";
  for (auto mode : {EstimatorMode::Collapsed, EstimatorMode::Enumerated}) {
    EstimatorOptions o;
    o.mode = mode;
    auto curve = convergence_curve(spec, {1, 2, 4, 8}, 200, kSeed, o);
    detail << to_string(mode) << ":";
    for (const auto& e : curve) {
      pass = pass && std::abs(e.estimate - 0.5) <= 0.05;
      detail << " " << fmt(e.estimate);
    }
    detail << "; ";
  }
  return {pass, detail.str()};
}

// 9. Tree metric identity.
Outcome tree_metric() {
  ProcessModel model(catalog("widetree"));
  const auto& tree = model.tree();
  std::mt19937_64 gen(kSeed);
  std::uniform_int_distribution<std::size_t> pick(0, tree.leaf_count() - 1);
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  while (pairs.size() < 50) {
    auto a = pick(gen), b = pick(gen);
    if (a != b) pairs.emplace_back(a, b);
  }
  std::vector<std::size_t> leaves;
  for (auto [a, b] : pairs) {
    leaves.push_back(a);
    leaves.push_back(b);
  }
  constexpr std::size_t kChunks = 20;
  constexpr std::uint64_t kPerChunk = 50000;  // 10^6 draws per pair
  std::vector<std::vector<std::uint64_t>> differ(kChunks, std::vector<std::uint64_t>(pairs.size(), 0));
  parallel_for(kChunks, 0, [&](std::size_t c) {
    auto batch = sample_tree_process(tree, leaves, kPerChunk, SeedLineage{kSeed, c});
    for (std::size_t q = 0; q < pairs.size(); ++q)
      for (std::uint64_t s = 0; s < kPerChunk; ++s)
        differ[c][q] += batch.values(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(2 * q)) !=
                        batch.values(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(2 * q + 1));
  });
  const double total = double(kChunks * kPerChunk);
  double worst = 0.0;
  for (std::size_t q = 0; q < pairs.size(); ++q) {
    std::uint64_t count = 0;
    for (std::size_t c = 0; c < kChunks; ++c) count += differ[c][q];
    const double d = leaf_distance(tree, pairs[q].first, pairs[q].second);
    const double se = std::sqrt(d * (1 - d) / total);
    worst = std::max(worst, std::abs(count / total - d) / se);
  }
  return {worst <= 4.0, "50 pairs, 1e6 draws each, worst |z| " + fmt(worst)};
}

// 10. Covering sandwich and tree exactness.
Outcome covering() {
  bool pass = true;
  std::ostringstream detail;
  std::uint64_t points = 0, sandwich_fail = 0, exact_fail = 0;
  for (const auto& entry : fs::directory_iterator(kSpecs)) {
    const auto name = entry.path().stem().string();
    ProcessModel model(load_spec(entry.path().string()));
    const std::uint64_t m = model.truncation() ? model.truncation() : 256;
    auto view = closed_form_view(model, first(m));
    const SkeletonTree* tree = model.kind() == Kind::WideTree ? &model.tree() : nullptr;
    auto report = covering_report(view, tree);
    for (const auto* curve : {&report.xi_curve, &report.rho_curve}) {
      for (std::size_t g = 0; g < curve->epsilon_grid.size(); ++g) {
        const double eps = curve->epsilon_grid[g];
        const auto lower2 = packing_lower(view, curve->metric, 2 * eps);
        ++points;
        if (!(lower2 <= curve->n_upper[g] && curve->n_upper[g] <= curve->n_lower[g])) ++sandwich_fail;
        if (tree && curve->metric == Metric::Xi) {
          const auto greedy = greedy_cover(view, Metric::Xi, eps).size();
          const auto exact = tree_covering_number(*tree, eps);
          if (greedy != exact || greedy != (*curve->exact)[g]) ++exact_fail;
        }
      }
    }
  }
  // Reference counts at the midpoints of the reference level intervals.
  ProcessModel ref(catalog("tree_small"));
  const std::vector<double> levels = {0.5, 0.4, 0.3, 0.2, 0.15, 0.1, 0.06, 0.03};
  std::vector<double> mids;
  for (std::size_t k = 0; k + 1 < levels.size(); ++k) mids.push_back(0.5 * (levels[k] + levels[k + 1]));
  auto ref_curve = covering_curve(closed_form_view(ref, first(ref.truncation())), Metric::Xi, mids, &ref.tree());
  const std::vector<std::uint64_t> want = {1, 2, 7, 10, 13, 14, 15};
  const bool ref_ok = ref_curve.n_upper == want && *ref_curve.exact == want;
  pass = sandwich_fail == 0 && exact_fail == 0 && ref_ok;
  detail << points << " grid points, sandwich failures " << sandwich_fail << ", tree mismatches " << exact_fail
         << ", reference counts " << (ref_ok ? "reproduced" : "differ");
  return {pass, detail.str()};
}

// 11. Bound ordering.
Outcome bound_ordering() {
  bool pass = true;
  std::ostringstream detail;
  for (const char* name : {"thinchain", "product_power"}) {
    auto spec = catalog(name);
    ProcessModel model(spec);
    const std::uint64_t m = model.truncation() ? model.truncation() : 256;
    auto report = covering_report(closed_form_view(model, first(m)));
    const double c = report.c_mu.value, d = report.d_mu.value;
    detail << name << " C=" << fmt(c) << " D=" << fmt(d) << ":";
    for (std::uint64_t n : {16, 256, 4096}) {
      auto e = estimate_delta(spec, n, 1000, kSeed, collapsed(0.99));
      const double chain = chaining_bound(report.xi_curve.epsilon_grid, report.xi_curve.n_upper, c, n).closed_form;
      const double dudley = dudley_bound(d, n);
      pass = pass && e.ci_high <= chain && e.ci_high <= dudley;
      detail << " n=" << n << " [" << fmt(e.ci_low) << "," << fmt(e.ci_high) << "] <= " << fmt(chain) << ", "
             << fmt(dudley) << ";";
    }
  }
  return {pass, detail.str()};
}

// 12. Decoupling.
Outcome decoupling() {
  auto pz = check_pz_decoupling(pz_family());
  bool pass = pz.status == CheckStatus::Pass && pz.tolerance == 0.0;
  std::ostringstream detail;
  detail << "exact min margin " << fmt(pz.margin) << "; MC margins:";
  VerifyConfig config;
  std::uint64_t stream = 0;
  for (const auto& [name, spec] : negative_covariance_family()) {
    auto r = check_delta_decoupling(name, spec, config, mix64(kSeed ^ ++stream));
    pass = pass && r.status == CheckStatus::Pass;
    detail << " " << name << " " << fmt(r.margin);
  }
  return {pass, detail.str()};
}

// 13. SC witnesses.
Outcome witnesses() {
  VerifyConfig config;
  bool pass = true;
  std::ostringstream detail;
  for (const auto& [name, spec] : witness_family()) {
    ProcessModel model(spec);
    const double eps = spec.kind == Kind::BlockMu     ? config.sc_epsilon_block
                       : spec.kind == Kind::ThinChain ? config.sc_epsilon_chain
                                                      : config.sc_epsilon_sqrt;
    auto r = verify_sc_witness(model, shipped_witness(model, eps), eps, 100000, kSeed);
    const auto violations = r.details.at("inclusion_violations").get<std::uint64_t>();
    pass = pass && r.status == CheckStatus::Pass && violations == 0;
    detail << name << ": " << violations << " violations / " << r.details.at("disagreements").dump()
           << " disagreements; ";
  }
  return {pass, detail.str()};
}

// 14. Determinism across worker counts.
int run_cli(const std::string& args) {
  const std::string cmd = kCli + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string library_artifacts(unsigned threads) {
  std::ostringstream all;
  auto o = collapsed(0.95, threads);
  all << estimates_to_csv(convergence_curve(catalog("blockmu"), {4, 64}, 300, kSeed, o), "blockmu");
  all << estimates_to_csv(convergence_curve(catalog("blocknu"), {2, 3}, 300, kSeed, o), "blocknu");
  all << estimates_to_csv(convergence_curve(catalog("widetree"), {1, 8}, 100, kSeed, o), "widetree");
  all << estimates_to_csv(convergence_curve(catalog("thinchain"), {16, 256}, 300, kSeed, o), "thinchain");
  EstimatorOptions e;
  e.threads = threads;
  all << estimates_to_csv(convergence_curve(catalog("sqrtdecay"), {4, 16}, 200, kSeed, e), "sqrtdecay");
  ProcessModel tree(catalog("tree_small"));
  all << covering_to_csv(covering_report(closed_form_view(tree, first(15)), &tree.tree(), threads));
  all << view_to_csv(empirical_moments(catalog("blocknu_small"), first(16), 64, 50, kSeed, threads));
  VerifyConfig config;
  config.threads = threads;
  for (auto& r : run_suite("all", kSeed, config)) {
    auto j = report_to_json(r);
    j["parameters"]["config"].erase("threads");
    all << j.dump() << "\n";
  }
  return all.str();
}

Outcome determinism() {
  const fs::path root = fs::temp_directory_path() / ("corrbin_acceptance_" + std::to_string(::getpid()));
  fs::remove_all(root);
  const std::vector<std::string> commands = {
      "delta --spec " + kSpecs + "/blocknu.json --n 2,3 --replicates 1000 --mode collapsed",
      "delta --spec " + kSpecs + "/blockmu.json --n 4,16,64,256,1024 --replicates 1000 --mode collapsed",
      "delta --spec " + kSpecs + "/widetree.json --n 1,2,4,8 --replicates 200 --mode collapsed",
      "delta --spec " + kSpecs + "/blocksqrt.json --n 16 --replicates 200",
      "moments --spec " + kSpecs + "/blocknu_small.json --n 64 --replicates 50",
      "cover --spec " + kSpecs + "/tree_small.json",
      "bounds --spec " + kSpecs + "/thinchain.json --n 16,256,4096",
      "sample --spec " + kSpecs + "/widetree.json --n 8",
      "verify --suite all",
  };
  std::string reference_lib;
  std::vector<std::string> reference_files;
  bool pass = true;
  std::uint64_t files = 0;
  for (unsigned threads : {1u, 4u, 8u}) {
    const auto lib = library_artifacts(threads);
    if (reference_lib.empty()) reference_lib = lib;
    pass = pass && lib == reference_lib;
    std::vector<std::string> contents;
    for (std::size_t c = 0; c < commands.size(); ++c) {
      const fs::path out = root / std::to_string(threads) / std::to_string(c);
      if (run_cli(commands[c] + " --seed " + std::to_string(kSeed) + " --threads " + std::to_string(threads) +
                  " --out " + out.string()) != 0) {
        pass = false;
        continue;
      }
      std::vector<fs::path> paths;
      for (const auto& f : fs::directory_iterator(out)) paths.push_back(f.path());
      std::sort(paths.begin(), paths.end());
      for (const auto& p : paths) contents.push_back(p.filename().string() + "\n" + read_file(p.string()));
    }
    if (reference_files.empty()) {
      reference_files = contents;
      files = contents.size();
    }
    pass = pass && contents == reference_files;
  }
  fs::remove_all(root);
  return {pass && files > 0, std::to_string(files) + " CLI artifacts and the library artifact bundle compared at 1, 4, 8 threads"};
}

struct Criterion {
  int id;
  const char* name;
  double budget_seconds;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> criteria = {
      {1, "covariance twins", 1, covariance_twins},
      {2, "third moments", 1, third_moments},
      {3, "gamma/delta system", 1, gamma_delta_system},
      {4, "mgf inequality", 60, mgf_inequality},
      {5, "rho metric axioms", 10, rho_axioms},
      {6, "divergent twin floor", 300, nu_floor},
      {7, "convergent twin curve", 300, mu_convergence},
      {8, "wide tree constancy", 300, wide_tree},
      {9, "tree metric identity", 120, tree_metric},
      {10, "covering sandwich and exactness", 60, covering},
      {11, "bound ordering", 300, bound_ordering},
      {12, "decoupling", 120, decoupling},
      {13, "sc witnesses", 120, witnesses},
      {14, "determinism", 600, determinism},
  };
  std::set<int> selected;
  for (int a = 1; a < argc; ++a) selected.insert(std::atoi(argv[a]));
  int failures = 0;
  for (const auto& c : criteria) {
    if (!selected.empty() && !selected.count(c.id)) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = secs < c.budget_seconds;
    const bool ok = o.pass && in_time;
    failures += !ok;
    std::printf("criterion %2d %-32s %s  (%.2fs of %.0fs%s) %s\n", c.id, c.name, ok ? "PASS" : "FAIL", secs,
                c.budget_seconds, in_time ? "" : ", over budget", o.detail.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
