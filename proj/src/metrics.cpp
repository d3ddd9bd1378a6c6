#include "corrbin/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "corrbin/error.hpp"
#include "corrbin/io.hpp"
#include "corrbin/parallel.hpp"
#include "corrbin/sampling.hpp"
#include "json.hpp"

namespace corrbin {

const char* to_string(Metric metric) { return metric == Metric::Xi ? "xi" : "rho"; }

std::size_t MetricView::position(Component i) const {
  const auto it = std::find(indices.begin(), indices.end(), i);
  if (it == indices.end()) throw Error(ErrorCode::IndexUnknown, "component " + std::to_string(i) + " not in view");
  return static_cast<std::size_t>(it - indices.begin());
}

double MetricView::xi_at(std::size_t a, std::size_t b) const {
  if (a == b) return 0.0;
  const auto ia = static_cast<Eigen::Index>(a), ib = static_cast<Eigen::Index>(b);
  return std::max(0.0, p(ia) + p(ib) - 2.0 * r(ia, ib));
}

double MetricView::distance_at(Metric metric, std::size_t a, std::size_t b) const {
  const double x = xi_at(a, b);
  return metric == Metric::Xi ? x : rho_of_xi(x);
}

double rho_of_xi(double xi) {
  if (xi <= 0.0) return 0.0;
  const double log_term = std::log(2.0 / xi);
  // log(2/xi) <= 3/2 puts the subgaussian branch at or above the cap
  if (log_term <= 1.5) return kRhoCap;
  return std::min(kRhoCap, std::sqrt(2.0 / log_term));
}

double xi_of_rho(double eps) {
  if (eps <= 0.0) return 0.0;
  if (eps >= kRhoCap) return 1.0;
  return 2.0 * std::exp(-2.0 / (eps * eps));
}

double xi(const MetricView& view, Component i, Component j) { return view.xi_at(view.position(i), view.position(j)); }

double rho(const MetricView& view, Component i, Component j) { return rho_of_xi(xi(view, i, j)); }

MetricView closed_form_view(const ProcessModel& model, const std::vector<Component>& indices) {
  MetricView view;
  view.indices = indices;
  const auto m = static_cast<Eigen::Index>(indices.size());
  view.p.resize(m);
  view.r.resize(m, m);
  for (Eigen::Index a = 0; a < m; ++a) {
    view.p(a) = mean(model, indices[a]);
    view.r(a, a) = view.p(a);
    for (Eigen::Index b = 0; b < a; ++b) view.r(a, b) = view.r(b, a) = cross_moment(model, indices[a], indices[b]);
  }
  return view;
}

MetricView empirical_moments(const ProcessSpec& spec, const std::vector<Component>& indices, std::uint64_t n,
                             std::uint64_t replicates, std::uint64_t seed, unsigned threads) {
  if (n * replicates < 1) throw Error(ErrorCode::InvalidSpec, "n * replicates must be >= 1");
  const ProcessModel model(spec);
  const auto m = static_cast<Eigen::Index>(indices.size());
  std::vector<Eigen::MatrixXd> partial(replicates);
  parallel_for(replicates, threads ? threads : default_threads(), [&](std::size_t rep) {
    const auto batch = sample_batch(model, indices, n, {seed, rep});
    const Eigen::MatrixXd x = batch.values.cast<double>();
    partial[rep] = x.transpose() * x;  // integer counts, exact in double
  });
  Eigen::MatrixXd counts = Eigen::MatrixXd::Zero(m, m);
  for (const auto& part : partial) counts += part;
  const double total = static_cast<double>(n * replicates);
  MetricView view;
  view.indices = indices;
  view.source = MetricView::Source::Empirical;
  view.samples = n * replicates;
  view.r = 0.5 * (counts + counts.transpose()) / total;
  view.p = view.r.diagonal();
  view.r_se = (view.r.array() * (1.0 - view.r.array()) / total).sqrt().matrix();
  view.p_se = view.r_se.diagonal();
  return view;
}

bool AxiomReport::passed() const {
  return max_triangle_xi <= tolerance && max_triangle_rho <= tolerance && max_symmetry <= tolerance &&
         max_diagonal <= tolerance;
}

namespace {

void check_triple(const MetricView& view, std::size_t a, std::size_t b, std::size_t c, AxiomReport& report) {
  const double ab = view.xi_at(a, b), bc = view.xi_at(b, c), ac = view.xi_at(a, c);
  const double worst_xi = std::max({ac - ab - bc, ab - ac - bc, bc - ab - ac});
  const double rab = rho_of_xi(ab), rbc = rho_of_xi(bc), rac = rho_of_xi(ac);
  const double worst_rho = std::max({rac - rab - rbc, rab - rac - rbc, rbc - rab - rac});
  report.max_triangle_xi = std::max(report.max_triangle_xi, worst_xi);
  report.max_triangle_rho = std::max(report.max_triangle_rho, worst_rho);
  ++report.triples;
}

}  // namespace

AxiomReport metric_axiom_check(const MetricView& view, std::uint64_t trials, std::uint64_t seed) {
  const std::size_t m = view.size();
  if (m < 3) throw Error(ErrorCode::InvalidSpec, "axiom check needs at least 3 indices");
  AxiomReport report;
  report.tolerance =
      view.source == MetricView::Source::ClosedForm ? 1e-12 : 5.0 / std::sqrt(static_cast<double>(view.samples));
  for (std::size_t a = 0; a < m; ++a) {
    const auto ia = static_cast<Eigen::Index>(a);
    report.max_diagonal = std::max(report.max_diagonal, std::abs(view.r(ia, ia) - view.p(ia)));
    for (std::size_t b = a + 1; b < m; ++b) {
      const auto ib = static_cast<Eigen::Index>(b);
      report.max_symmetry = std::max(report.max_symmetry, std::abs(view.r(ia, ib) - view.r(ib, ia)));
      if (view.xi_at(a, b) == 0.0) ++report.quotient_pairs;
    }
  }
  if (m <= 64) {
    for (std::size_t a = 0; a < m; ++a)
      for (std::size_t b = a + 1; b < m; ++b)
        for (std::size_t c = b + 1; c < m; ++c) check_triple(view, a, b, c, report);
  } else {
    std::mt19937_64 gen(seed);
    std::uniform_int_distribution<std::size_t> pick(0, m - 1);
    for (std::uint64_t t = 0; t < trials; ++t) check_triple(view, pick(gen), pick(gen), pick(gen), report);
  }
  report.max_triangle_xi = std::max(0.0, report.max_triangle_xi);
  report.max_triangle_rho = std::max(0.0, report.max_triangle_rho);
  return report;
}

std::string view_to_csv(const MetricView& view) {
  nlohmann::json header = {{"source", view.source == MetricView::Source::ClosedForm ? "closed-form" : "empirical"},
                           {"samples", view.samples},
                           {"indices", view.indices}};
  std::ostringstream out;
  out << "# " << header.dump() << "\n";
  out << "i,j,r_ij,se\n";
  const bool has_se = view.r_se.size() > 0;
  for (std::size_t a = 0; a < view.size(); ++a) {
    for (std::size_t b = a; b < view.size(); ++b) {
      const auto ia = static_cast<Eigen::Index>(a), ib = static_cast<Eigen::Index>(b);
      out << view.indices[a] << ',' << view.indices[b] << ',' << format_double(view.r(ia, ib)) << ','
          << (has_se ? format_double(view.r_se(ia, ib)) : "0") << '\n';
    }
  }
  return out.str();
}

MetricView view_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line.rfind("# ", 0) != 0) throw Error(ErrorCode::InvalidSpec, "missing view header");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(line.substr(2));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidSpec, std::string("view header: ") + e.what());
  }
  MetricView view;
  view.indices = header.at("indices").get<std::vector<Component>>();
  view.samples = header.at("samples").get<std::uint64_t>();
  const bool empirical = header.at("source").get<std::string>() == "empirical";
  view.source = empirical ? MetricView::Source::Empirical : MetricView::Source::ClosedForm;
  const auto m = static_cast<Eigen::Index>(view.indices.size());
  view.r = Eigen::MatrixXd::Constant(m, m, std::nan(""));
  Eigen::MatrixXd se = Eigen::MatrixXd::Zero(m, m);
  if (!std::getline(in, line) || line != "i,j,r_ij,se") throw Error(ErrorCode::InvalidSpec, "bad view column header");
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split(line, ',');
    if (f.size() != 4) throw Error(ErrorCode::InvalidSpec, "bad view row: " + line);
    const auto a = static_cast<Eigen::Index>(view.position(std::stoull(f[0])));
    const auto b = static_cast<Eigen::Index>(view.position(std::stoull(f[1])));
    view.r(a, b) = view.r(b, a) = std::stod(f[2]);
    se(a, b) = se(b, a) = std::stod(f[3]);
  }
  if (view.r.hasNaN()) throw Error(ErrorCode::InvalidSpec, "view table incomplete");
  view.p = view.r.diagonal();
  if (empirical) {
    view.r_se = se;
    view.p_se = se.diagonal();
  }
  return view;
}

}  // namespace corrbin
