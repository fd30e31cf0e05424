#pragma once

#include <complex>
#include <cstddef>
#include <iosfwd>
#include <string_view>
#include <variant>
#include <vector>

namespace detlab {

/// A deterministic probability measure on the real line: a scaled and
/// shifted semicircle law, a Marchenko-Pastur law, or a piecewise-linear
/// density tabulated on a uniform grid.
class ReferenceMeasure {
 public:
  struct Semicircle {
    double sigma = 1.0;
    double center = 0.0;
  };
  struct MarchenkoPastur {
    double gamma = 1.0;
    double shift = 0.0;
  };
  struct Grid {
    double x0 = 0.0;
    double step = 1.0;
    std::vector<double> density;
    // Width of the Cauchy smoothing already present in `density` (0 if none).
    double smoothing = 0.0;
    std::vector<double> cumulative;  // trapezoid mass of [x0, x_k]
  };
  using Representation = std::variant<Semicircle, MarchenkoPastur, Grid>;

  ReferenceMeasure() : rep_(Semicircle{}) {}

  static ReferenceMeasure semicircle(double sigma = 1.0, double center = 0.0);
  static ReferenceMeasure marchenko_pastur(double gamma);
  /// Negative samples are clamped to zero and the density is rescaled to unit
  /// trapezoid mass; the applied factor is stored in *renormalization.
  static ReferenceMeasure grid(double x0, double step, std::vector<double> density,
                               double smoothing = 0.0, double* renormalization = nullptr);
  /// Triangular bump of half-width `width` at c, a stand-in for a point mass.
  static ReferenceMeasure narrow_grid(double c, double width, std::size_t points = 21);

  const Representation& representation() const noexcept { return rep_; }
  std::string_view kind() const;
  bool is_grid() const noexcept { return std::holds_alternative<Grid>(rep_); }
  double smoothing() const;

  double density(double x) const;
  double cdf(double x) const;
  double left_edge() const;
  double right_edge() const;
  /// Interval outside of which the density vanishes identically.
  double support_min() const;
  double support_max() const;
  /// Relative density level used to locate grid edges.
  double edge_threshold() const;

  /// \int mu(d lambda) / (lambda - z), Im z > 0.
  std::complex<double> stieltjes(std::complex<double> z) const;
  /// \int log|lambda - E| mu(d lambda).
  double log_potential(double E) const;
  double moment(int k) const;

  ReferenceMeasure shifted(double c) const;
  /// Stieltjes inversion at height eta0: the density convolved with a Cauchy
  /// kernel of width eta0, tabulated on `points` nodes over [l - 1, r + 1].
  ReferenceMeasure smoothed(double eta0, std::size_t points = 4001) const;
  /// Same, on a caller-chosen grid.
  ReferenceMeasure smoothed_on(double eta0, double x0, double step, std::size_t points) const;

  /// CSV with header "x,density". Grids print their own nodes; closed forms
  /// are sampled at `points` nodes across the support.
  void write_csv(std::ostream& out, std::size_t points = 1001) const;

 private:
  explicit ReferenceMeasure(Representation rep) : rep_(std::move(rep)) {}
  Representation rep_;
};

/// Grid nodes x0 + k * step for k < count.
std::vector<double> grid_nodes(double x0, double step, std::size_t count);

}  // namespace detlab
