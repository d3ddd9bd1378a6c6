#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "corrbin/process_models.hpp"

namespace corrbin {

enum class Metric { Xi, Rho };
const char* to_string(Metric metric);

// Means and cross moments over a finite index list.
struct MetricView {
  enum class Source { ClosedForm, Empirical };

  std::vector<Component> indices;
  Eigen::VectorXd p;
  Eigen::MatrixXd r;  // symmetric, r(a, a) = p(a)
  Source source = Source::ClosedForm;
  std::uint64_t samples = 0;  // pooled draws behind an empirical view
  Eigen::VectorXd p_se;       // empty for closed-form views
  Eigen::MatrixXd r_se;

  std::size_t size() const { return indices.size(); }
  // Position of component i in the index list; throws IndexUnknown.
  std::size_t position(Component i) const;
  double xi_at(std::size_t a, std::size_t b) const;
  double distance_at(Metric metric, std::size_t a, std::size_t b) const;
};

double rho_of_xi(double xi);
// Inverse bridge below the cap: rho <= eps iff xi <= xi_of_rho(eps).
double xi_of_rho(double eps);
inline constexpr double kRhoCap = 1.1547005383792515;  // 2 / sqrt(3)

double xi(const MetricView& view, Component i, Component j);
double rho(const MetricView& view, Component i, Component j);

MetricView closed_form_view(const ProcessModel& model, const std::vector<Component>& indices);

// Pools n * replicates draws; replicate r uses lineage (seed, r).
MetricView empirical_moments(const ProcessSpec& spec, const std::vector<Component>& indices, std::uint64_t n,
                             std::uint64_t replicates, std::uint64_t seed, unsigned threads = 0);

struct AxiomReport {
  double max_triangle_xi = 0.0;
  double max_triangle_rho = 0.0;
  double max_symmetry = 0.0;
  double max_diagonal = 0.0;
  std::uint64_t triples = 0;
  std::uint64_t quotient_pairs = 0;  // distinct indices at distance 0
  double tolerance = 0.0;            // 1e-12 closed form, 5/sqrt(samples) empirical
  bool passed() const;
};

// All triples when the view has at most 64 indices, else `trials` sampled triples.
AxiomReport metric_axiom_check(const MetricView& view, std::uint64_t trials = 100000, std::uint64_t seed = 0);

// Long CSV: a JSON header line "# {...}" then rows i,j,r_ij,se for i <= j.
std::string view_to_csv(const MetricView& view);
MetricView view_from_csv(const std::string& text);

}  // namespace corrbin
