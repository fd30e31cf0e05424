#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "detlab/ensembles.hpp"
#include "detlab/experiments.hpp"
#include "detlab/mde.hpp"
#include "detlab/reference.hpp"

namespace detlab {

/// u -> mu(u), u in R^m with 1 <= m <= 3.
struct MeasureFamily {
  std::string name;
  std::size_t dimension = 1;
  std::function<ReferenceMeasure(std::span<const double>)> evaluate;

  /// Semicircle of scale sigma centered at u (m = 1).
  static MeasureFamily shifted_semicircle(double sigma = 1.0);
  /// `base` translated by u (m = 1).
  static MeasureFamily shifted(ReferenceMeasure base);
  /// Density of the Dyson equation with mean A0 + sum_i u_i A_i.
  static MeasureFamily mde_family(MdeProblem base, std::vector<SymMatrix> directions,
                                  DensityOptions density = {});
};

/// Closed domain: optional per-coordinate box, half-spaces a.u <= b and a
/// ball. An empty domain description means all of R^m.
struct Domain {
  struct HalfSpace {
    std::vector<double> a;
    double b = 0.0;
  };
  struct Ball {
    std::vector<double> center;
    double radius = 0.0;
  };
  std::vector<std::pair<double, double>> box;
  std::vector<HalfSpace> half_spaces;
  std::optional<Ball> ball;

  bool contains(std::span<const double> u, double slack = 1e-12) const;
};

struct VarProblem {
  MeasureFamily family;
  double alpha = 0.5;
  // Penalty alpha |u|^penalty_exponent.
  double penalty_exponent = 2.0;
  Domain domain;

  void validate() const;
};

/// log-potential of mu(u) at 0 minus the penalty.
double s_alpha(const VarProblem& problem, std::span<const double> u);

struct VarOptions {
  std::size_t grid_points = 401;  // per axis for m = 1; fewer for m > 1
  double tolerance = 1e-10;       // golden-section bracket width
  std::optional<double> growth_constant;  // C in log(C max(|u|, 1))
  double max_radius = 1e4;
  unsigned threads = 1;
};

struct VarSolution {
  std::vector<double> u;
  double value = 0.0;
  double search_radius = 0.0;
  double growth_constant = 0.0;
  std::size_t evaluations = 0;
};

/// Throws unbounded-domain-no-decay when the decay envelope never falls
/// below the incumbent inside max_radius.
VarSolution solve_unrestricted(const VarProblem& problem, const VarOptions& options = {});

enum class Membership { in_G_plus_eps, in_G, in_G_minus_eps, outside };
std::string_view to_string(Membership m);

struct MembershipResult {
  Membership cls = Membership::outside;
  double left_edge = 0.0;
  double mass_below = 0.0;  // mu((-inf, -eps))
  double tolerance = 0.0;   // edge resolution of the measure
};

MembershipResult good_set_membership(const VarProblem& problem, std::span<const double> u, double eps);

struct RestrictedTrace {
  double eps = 0.0;
  std::vector<double> u;
  double value = 0.0;
};

struct RestrictedSolution {
  std::vector<double> u;
  double value = 0.0;
  std::vector<RestrictedTrace> trace;  // eps decreasing, last entry eps = 0
};

/// Supremum over D intersected with the good set, approached through the
/// inner sets {left edge >= 2 eps}. Throws empty-good-set.
RestrictedSolution solve_restricted(const VarProblem& problem, const VarOptions& options = {},
                                    std::vector<double> eps_sequence = {});

struct LaplaceOptions {
  std::size_t N = 200;
  std::vector<double> u_grid;
  bool restricted = false;
  RunOptions run;
};

/// (1/N) log of the trapezoid integral over u_grid of
/// exp(-N alpha u^2) exp(N g(u)) [times the positive-definite fraction when
/// restricted], where g(u) is the mean-of-logs determinant growth of
/// spec_builder(u). Throws grid-misses-maximizer.
ExperimentReport laplace_crosscheck(const VarProblem& problem,
                                    const std::function<EnsembleSpec(double)>& spec_builder,
                                    const LaplaceOptions& options, std::optional<double> oracle = {});

/// CSV with header "u1[,u2,u3],s_alpha,membership".
void write_trace_csv(std::ostream& out, const VarProblem& problem, const std::vector<std::vector<double>>& points,
                     double eps);

}  // namespace detlab
