#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace detlab {

/// Dense real symmetric matrix. Entries are only writable through set(),
/// which writes both (i, j) and (j, i), so symmetry is exact.
class SymMatrix {
 public:
  SymMatrix() = default;
  explicit SymMatrix(std::size_t n) : n_(n), data_(n * n, 0.0) {}

  static SymMatrix identity(std::size_t n);
  static SymMatrix diagonal(std::span<const double> diag);
  /// Symmetrizes by reading the upper triangle of `m`.
  static SymMatrix from_upper(const Eigen::MatrixXd& m);

  std::size_t size() const noexcept { return n_; }
  bool empty() const noexcept { return n_ == 0; }

  double operator()(std::size_t i, std::size_t j) const { return data_[i * n_ + j]; }
  void set(std::size_t i, std::size_t j, double v) {
    data_[i * n_ + j] = v;
    data_[j * n_ + i] = v;
  }
  void add(std::size_t i, std::size_t j, double v) { set(i, j, (*this)(i, j) + v); }
  void add_identity(double s);

  /// Row-major storage, n*n entries.
  std::span<const double> values() const noexcept { return data_; }

  Eigen::MatrixXd to_eigen() const;
  double max_abs() const;
  double frobenius_norm() const;

  friend bool operator==(const SymMatrix&, const SymMatrix&) = default;

 private:
  std::size_t n_ = 0;
  std::vector<double> data_;
};

}  // namespace detlab
