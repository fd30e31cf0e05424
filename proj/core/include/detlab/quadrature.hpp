#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace detlab::quad {

struct Rule {
  std::vector<double> nodes;    // on [-1, 1]
  std::vector<double> weights;
};

/// n-point Gauss-Legendre rule, cached per n.
const Rule& gauss_legendre(std::size_t n);

/// Plain composite Gauss-Legendre over `panels` equal panels.
double integrate(const std::function<double(double)>& f, double a, double b,
                 std::size_t panels = 1, std::size_t order = 20);

struct Result {
  double value = 0.0;
  double error = 0.0;  // difference between the two finest refinements
};

/// Integrates f over [a, b] when f may have integrable algebraic or
/// logarithmic singularities at either endpoint. Panels are refined
/// geometrically toward each flagged endpoint; refinement stops once two
/// successive levels differ by at most `tol`.
Result integrate_graded(const std::function<double(double)>& f, double a, double b,
                        bool singular_a, bool singular_b, double tol = 1e-10);

/// Same, after splitting [a, b] at the interior `breaks` (each break is
/// treated as singular from both sides).
Result integrate_with_breaks(const std::function<double(double)>& f, double a, double b,
                             std::span<const double> breaks, double tol = 1e-10);

}  // namespace detlab::quad
