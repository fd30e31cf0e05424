#include "detlab/sym_matrix.hpp"

#include <cmath>


namespace detlab {

SymMatrix SymMatrix::identity(std::size_t n) {
  SymMatrix m(n);
  for (std::size_t i = 0; i < n; ++i) m.set(i, i, 1.0);
  return m;
}

SymMatrix SymMatrix::diagonal(std::span<const double> diag) {
  SymMatrix m(diag.size());
  for (std::size_t i = 0; i < diag.size(); ++i) m.set(i, i, diag[i]);
  return m;
}

SymMatrix SymMatrix::from_upper(const Eigen::MatrixXd& m) {
  const auto n = static_cast<std::size_t>(m.rows());
  SymMatrix out(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j)
      out.set(i, j, m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
  return out;
}

void SymMatrix::add_identity(double s) {
  for (std::size_t i = 0; i < n_; ++i) data_[i * n_ + i] += s;
}

Eigen::MatrixXd SymMatrix::to_eigen() const {
  const auto n = static_cast<Eigen::Index>(n_);
  Eigen::MatrixXd out(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) out(i, j) = data_[static_cast<std::size_t>(i * n + j)];
  return out;
}

double SymMatrix::max_abs() const {
  double m = 0.0;
  for (double v : data_) m = std::max(m, std::abs(v));
  return m;
}

double SymMatrix::frobenius_norm() const {
  double s = 0.0;
  for (double v : data_) s += v * v;
  return std::sqrt(s);
}

}  // namespace detlab
