#pragma once

#include <array>
#include <complex>
#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "detlab/reference.hpp"
#include "detlab/sym_matrix.hpp"

namespace detlab {

/// Uniform measure on a sorted list of atoms.
class EmpiricalMeasure {
 public:
  EmpiricalMeasure() = default;
  /// Sorts `atoms` ascending.
  explicit EmpiricalMeasure(std::vector<double> atoms);

  std::span<const double> atoms() const noexcept { return atoms_; }
  std::size_t size() const noexcept { return atoms_.size(); }
  double operator[](std::size_t i) const { return atoms_[i]; }
  double min() const { return atoms_.front(); }
  double max() const { return atoms_.back(); }

  /// Fraction of atoms <= x.
  double cdf(double x) const;
  double moment(int k) const;
  EmpiricalMeasure shifted(double c) const;

  /// CSV with header "atom", one atom per row.
  void write_csv(std::ostream& out) const;

 private:
  std::vector<double> atoms_;
};

/// All eigenvalues, ascending. Householder tridiagonalization followed by
/// implicit-shift QL, without eigenvectors.
EmpiricalMeasure eigvals_sym(const SymMatrix& m);
std::vector<double> eigvals_sym(std::span<const double> row_major, std::size_t n);

struct SignLogDet {
  int sign = 1;
  double logabs = 0.0;
};

SignLogDet sign_log_abs_det(const SymMatrix& m);
/// From a known spectrum; `norm` is the operator norm used in the zero
/// threshold (defaults to max |lambda|).
SignLogDet sign_log_abs_det(const EmpiricalMeasure& spectrum, std::optional<double> norm = {});

double ks_distance(const EmpiricalMeasure& a, const EmpiricalMeasure& b);
double ks_distance(const EmpiricalMeasure& a, const ReferenceMeasure& b);
double ks_distance(const ReferenceMeasure& a, const EmpiricalMeasure& b);
double ks_distance(const ReferenceMeasure& a, const ReferenceMeasure& b);

double w1_distance(const EmpiricalMeasure& a, const EmpiricalMeasure& b);
double w1_distance(const EmpiricalMeasure& a, const ReferenceMeasure& b);
double w1_distance(const ReferenceMeasure& a, const EmpiricalMeasure& b);
double w1_distance(const ReferenceMeasure& a, const ReferenceMeasure& b);

// Bounded-Lipschitz surrogate min(W1, 2). It dominates d_BL and is within a
// factor 2 of it for measures supported on a common bounded set.
double bl_distance(const EmpiricalMeasure& a, const EmpiricalMeasure& b);
double bl_distance(const EmpiricalMeasure& a, const ReferenceMeasure& b);
double bl_distance(const ReferenceMeasure& a, const EmpiricalMeasure& b);
double bl_distance(const ReferenceMeasure& a, const ReferenceMeasure& b);

/// Regularization scales for log|det|. `schedule` derives every scale from
/// the control exponent kappa and the dimension.
struct RegLogParams {
  double eta = 0.1;
  double K = 1e3;
  std::optional<double> E;

  double kappa = 0.0;
  double t = 0.0;
  double w_b = 0.0;
  double p_b = 0.0;
  double epsilon = 0.0;

  static RegLogParams schedule(double N, double kappa = 0.1);
  void validate() const;
};

double log_eta(double lambda, double eta);
double log_eta_K(double lambda, double eta, double K);

struct Convex3 {
  double log1 = 0.0;  // convex
  double log2 = 0.0;  // concave
  double log3 = 0.0;  // concave
};

Convex3 convex3_pieces(double lambda, double eta, double K);

/// Constants for splitting x -> log_eta^K(x^2 - E) into convex and concave
/// parts. For E > 0 all five pieces are used; for E <= 0 pieces 4 and 5 are
/// identically zero.
struct Convex5Setup {
  double E = 0.0;
  double eta = 0.0;
  double K = 0.0;
  bool five = false;
  double b = 0.0;    // E <= 0: the inflection point
  double b_n = 0.0;  // E > 0: inner inflection point, below sqrt(E)
  double b_f = 0.0;  // E > 0: outer inflection point, above sqrt(E)
  double c = 0.0;    // E <= 0 slope
  double c1 = 0.0;
  double c3 = 0.0;
  double lipschitz = 0.0;  // bound on every piece's Lipschitz constant
  // Curvature of each piece: +1 convex, -1 concave, 0 identically zero.
  std::array<int, 5> curvature{};
};

/// Throws eta-too-large when the inflection points cannot be separated.
Convex5Setup convex5_setup(double E, double eta, double K);
std::array<double, 5> convex5_pieces(double x, const Convex5Setup& setup);
std::array<double, 5> convex5_pieces(double x, double E, double eta, double K);
/// Positive roots y = x^2 of 2y^3 - 2Ey^2 - 2(E^2 + 3 eta^2)y + 2E(E^2 + eta^2),
/// returned as x values, ascending.
std::vector<double> convex5_inflection_points(double E, double eta);

struct SchurPair {
  std::complex<double> direct;
  std::complex<double> schur;
};

/// ((M - z)^{-1})_{jj} by a direct solve and by the Schur complement formula.
SchurPair schur_resolvent_diag(const SymMatrix& m, std::complex<double> z, std::size_t j);

/// Zeroes entries with |m_ij| > threshold.
SymMatrix cut_entries(const SymMatrix& m, double threshold);
/// Numerical rank from the spectrum.
std::size_t numerical_rank(const SymMatrix& m);

}  // namespace detlab
