#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "detlab/rng.hpp"
#include "detlab/sym_matrix.hpp"

namespace detlab {

/// Law of the independent matrix entries.
///
/// `param` is the Bernoulli success probability, the Pareto tail index or the
/// Student-t degrees of freedom, depending on `kind`. When `standardized` is
/// set the draw is centered and scaled to unit variance; for laws without a
/// finite variance it is only median-centered.
struct EntryDistribution {
  enum class Kind { gaussian, rademacher, uniform, bernoulli, pareto, student_t };

  Kind kind = Kind::gaussian;
  double param = 0.0;
  bool standardized = true;

  static EntryDistribution gaussian() { return {Kind::gaussian, 0.0, true}; }
  static EntryDistribution rademacher() { return {Kind::rademacher, 0.0, true}; }
  static EntryDistribution uniform() { return {Kind::uniform, 0.0, true}; }
  static EntryDistribution bernoulli(double p) { return {Kind::bernoulli, p, true}; }
  static EntryDistribution pareto(double tail_index) { return {Kind::pareto, tail_index, true}; }
  static EntryDistribution student_t(double dof) { return {Kind::student_t, dof, true}; }

  double sample(Rng& rng) const;
  /// True when E|X|^order < infinity.
  bool has_moment(double order) const;
  bool has_variance() const { return has_moment(2.0); }
  void validate() const;

  friend bool operator==(const EntryDistribution&, const EntryDistribution&) = default;
};

std::string_view to_string(EntryDistribution::Kind kind);
EntryDistribution::Kind entry_kind_from_string(std::string_view name);

struct EnsembleSpec;

namespace model {

struct Wigner {
  std::size_t N = 1;
  EntryDistribution dist;
  double E = 0.0;
};

struct ErdosRenyi {
  std::size_t N = 1;
  double p_N = 0.5;
  double E = 0.0;
};

struct DRegular {
  std::size_t N = 2;
  std::size_t d = 1;
  double E = 0.0;
};

/// Periodic band: entries vanish when min(|i-j|, N-|i-j|) > W.
struct Band {
  std::size_t N = 1;
  std::size_t W = 0;
  EntryDistribution dist;
  double E = 0.0;
};

/// (1/N) Y Y^T - E with Y of shape p x N.
struct Covariance {
  std::size_t p = 1;
  std::size_t N = 1;
  EntryDistribution dist;
  double E = 0.0;
};

/// Gaussian A + W with Var(W_ij) = S_ij, independent up to symmetry.
struct VarianceProfile {
  SymMatrix A;
  Eigen::MatrixXd S;
};

/// NK x NK matrix sum_i a_i (x) E_ii + diag(X_1, ..., X_K), block index b
/// and site i mapped to row b*N + i. `a` holds N matrices of size K x K, `s`
/// holds K variance matrices of size N x N.
struct BlockGaussian {
  std::size_t K = 1;
  std::size_t N = 1;
  std::vector<Eigen::MatrixXd> a;
  std::vector<Eigen::MatrixXd> s;
  bool goe_diagonal = false;
};

/// diag(A) + O diag(B) O^T - E with Haar orthogonal O.
struct FreeAddition {
  std::vector<double> A_diag;
  std::vector<double> B_diag;
  double E = 0.0;
};

/// base + xi Id with xi ~ N(0, sigma_u^2 / N).
struct LongRangeShift {
  std::shared_ptr<const EnsembleSpec> base;
  double sigma_u = 1.0;
};

/// X/sqrt(N) + A with A_ii = exp(N^theta) on the first floor(N^{1-theta}) sites.
struct OutlierCounterexample {
  std::size_t N = 1;
  EntryDistribution dist;
  double theta = 0.125;
};

/// X/sqrt(N) + X_0 Id with P(X_0 = N) = 1/N, otherwise X_0 = 0.
struct KernelCounterexample {
  std::size_t N = 1;
  EntryDistribution dist;
};

}  // namespace model

struct EnsembleSpec {
  using Model = std::variant<model::Wigner, model::ErdosRenyi, model::DRegular, model::Band,
                             model::Covariance, model::VarianceProfile, model::BlockGaussian,
                             model::FreeAddition, model::LongRangeShift,
                             model::OutlierCounterexample, model::KernelCounterexample>;
  Model model;

  template <typename T>
  EnsembleSpec(T m) : model(std::move(m)) {}  // NOLINT(google-explicit-constructor)

  std::string_view name() const;
  /// Side length of the sampled matrix.
  std::size_t dimension() const;
  /// The shift E subtracted by the sampler (0 for models without one).
  double shift() const;
  /// Copy with the shift replaced; throws for models without a shift field.
  EnsembleSpec with_shift(double E) const;
  void validate() const;
};

/// Draws H from `spec`. Deterministic in (spec, seed).
SymMatrix sample(const EnsembleSpec& spec, std::uint64_t seed);

/// Simple d-regular graph adjacency: pairing model, double-edge-swap repair of
/// loops and multi-edges, then 10*N*d randomizing swaps.
SymMatrix sample_dregular_adjacency(std::size_t N, std::size_t d, std::uint64_t seed);

/// Haar orthogonal matrix via QR of a Gaussian matrix with R-diagonal sign fix.
Eigen::MatrixXd sample_haar_orthogonal(std::size_t N, std::uint64_t seed);

/// W_i = sqrt(rho) W_common + sqrt(1 - rho) W_i' for Gaussian Wigner matrices.
std::pair<SymMatrix, SymMatrix> sample_correlated_wigner_pair(std::size_t N, double rho,
                                                              std::uint64_t seed);
/// Same construction for any number of correlated copies.
std::vector<SymMatrix> sample_correlated_wigner(std::size_t N, double rho, std::size_t copies,
                                                std::uint64_t seed);

/// Whether the X_0 = N event fires for this seed.
bool kernel_hit(const model::KernelCounterexample& spec, std::uint64_t seed);

/// Diagonal of the planted mean in the outlier model.
std::vector<double> outlier_mean_diagonal(std::size_t N, double theta);

/// Periodic distance used by band matrices.
inline std::size_t periodic_distance(std::size_t i, std::size_t j, std::size_t N) {
  const std::size_t d = i > j ? i - j : j - i;
  return d < N - d ? d : N - d;
}

// Structured config round trip. Field names follow the model structs; the
// model is selected by the "model" key.
std::string spec_to_json(const EnsembleSpec& spec);
EnsembleSpec spec_from_json(std::string_view text);
std::uint64_t spec_hash(const EnsembleSpec& spec);

}  // namespace detlab
