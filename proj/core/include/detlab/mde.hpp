#pragma once

#include <complex>
#include <cstddef>
#include <iosfwd>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "detlab/ensembles.hpp"
#include "detlab/reference.hpp"
#include "detlab/sym_matrix.hpp"

namespace detlab {

/// Matrix Dyson equation Id + (z - A + S[M]) M = 0 with Im M > 0.
///
/// The covariance action S is either flat, S[T] = sigma2 * (Tr T / N) Id, or
/// given by a variance profile s of independent entries:
/// S[T]_ii = sum_j s_ij T_jj and S[T]_ik = s_ik T_ki for i != k.
struct MdeProblem {
  SymMatrix A;
  Eigen::MatrixXd s;
  std::optional<double> flat_sigma2;

  static MdeProblem flat(SymMatrix A, double sigma2 = 1.0);
  static MdeProblem profile(SymMatrix A, Eigen::MatrixXd s);

  std::size_t size() const noexcept { return A.size(); }
  bool diagonal_mean() const;
  Eigen::MatrixXcd apply(const Eigen::MatrixXcd& T) const;
  void validate() const;
  /// True when L Tr(T)/N <= S[T] <= U Tr(T)/N for PSD T with
  /// [L, U] inside [1/p, p]; checked through the extreme row sums.
  bool is_flat(double p) const;
};

struct MdeOptions {
  double tolerance = 1e-12;   // target residual
  double acceptance = 1e-10;  // residual above this is a failure
  std::size_t max_iterations = 200000;
  double damping = 0.5;
};

struct MdeSolution {
  Eigen::MatrixXcd M;
  double residual = 0.0;
  std::size_t iterations = 0;
  /// Tr M / N.
  std::complex<double> stieltjes() const;
};

/// Throws no-convergence or im-violation.
MdeSolution mde_solve(const MdeProblem& problem, std::complex<double> z, const MdeOptions& options = {},
                      const Eigen::MatrixXcd* warm = nullptr);
double mde_residual(const MdeProblem& problem, std::complex<double> z, const Eigen::MatrixXcd& M);

/// N coupled K x K equations Id + (z - a_i + S_i[m]) m_i = 0, with S_i[m]
/// diagonal: (S_i[m])_jj = sum_k s[j](i, k) (m_k)_jj.
struct BlockMdeProblem {
  std::size_t K = 1;
  std::size_t N = 1;
  std::vector<Eigen::MatrixXd> a;  // N matrices, K x K
  std::vector<Eigen::MatrixXd> s;  // K matrices, N x N

  static BlockMdeProblem from_model(const model::BlockGaussian& model);
  void validate() const;
};

struct BlockMdeSolution {
  std::vector<Eigen::MatrixXcd> m;
  double residual = 0.0;
  std::size_t iterations = 0;
  /// (1 / NK) sum_i Tr m_i.
  std::complex<double> stieltjes() const;
};

BlockMdeSolution block_mde_solve(const BlockMdeProblem& problem, std::complex<double> z,
                                 const MdeOptions& options = {},
                                 const std::vector<Eigen::MatrixXcd>* warm = nullptr);

struct DensityOptions {
  std::size_t points = 4001;
  double eta0 = 1e-3;
  std::optional<double> x_min;
  std::optional<double> x_max;
  unsigned threads = 1;
  // Solves inside a chunk warm-start from their left neighbour; chunks are
  // independent so results do not depend on the thread count.
  std::size_t chunk = 64;
  MdeOptions solver;
};

struct DensityResult {
  ReferenceMeasure measure;
  double renormalization = 1.0;
  double eta0 = 0.0;
  std::vector<std::complex<double>> z;
  std::vector<std::complex<double>> stieltjes;
  double max_residual = 0.0;

  /// CSV with header "re_z,im_z,re_m,im_m".
  void write_csv(std::ostream& out) const;
};

DensityResult mde_density(const MdeProblem& problem, const DensityOptions& options = {});
DensityResult block_mde_density(const BlockMdeProblem& problem, const DensityOptions& options = {});

}  // namespace detlab
