#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "detlab/ensembles.hpp"
#include "detlab/reference.hpp"

namespace detlab {

/// Outcome of one Monte Carlo experiment. `passed` is decided by the
/// experiment's own rule; for plain estimate-vs-oracle runs it is
/// |estimate - oracle| <= tolerance.
struct ExperimentReport {
  std::string experiment;
  std::string spec;  // JSON of the ensemble, or a short description
  std::uint64_t spec_hash = 0;
  std::uint64_t seed = 0;
  std::size_t n_dimension = 0;
  std::size_t n_samples = 0;
  double estimate = 0.0;
  double std_error = 0.0;
  double oracle = 0.0;
  double tolerance = 0.0;
  bool passed = false;
  std::size_t excluded = 0;
  std::optional<double> wall_seconds;
  std::map<std::string, double> values;
  std::map<std::string, std::string> notes;

  std::vector<std::string> sample_columns;
  std::vector<std::vector<double>> samples;

  double value(const std::string& key) const;
  std::string to_json() const;
  static std::string csv_header();
  std::string csv_row() const;
  void write_samples_csv(std::ostream& out) const;
};

struct RunOptions {
  std::size_t samples = 100;
  std::uint64_t seed = 20240601;
  unsigned threads = 1;
  double tolerance = 0.03;
  bool keep_samples = false;
  bool timing = false;
};

/// Deterministic limit measure of a spec together with the energy at which
/// its log-potential predicts the determinant growth.
struct ReferencePrediction {
  ReferenceMeasure measure;
  double E = 0.0;
  std::string source;
};

std::optional<ReferencePrediction> reference_for(const EnsembleSpec& spec);
/// Gaussian-kernel density estimate of a point cloud, as a grid measure.
ReferenceMeasure smoothed_atoms(const std::vector<double>& atoms, std::size_t points = 801);

/// Mean over samples of (1/N) log|det H| (the `estimate`) and the annealed
/// (1/N) log mean |det H| (values["log_mean_exp"]). Samples with a zero
/// eigenvalue are excluded from both.
ExperimentReport estimate_det_growth(const EnsembleSpec& spec, const RunOptions& options,
                                     std::optional<double> oracle = {});

/// Monte Carlo mean of det((1/N) Y Y^T) for Y of shape p x N against
/// N! / (N^p (N - p)!). Passes when within 3 standard errors.
ExperimentReport dembo_exact_check(std::size_t p, std::size_t N, const EntryDistribution& dist,
                                   const RunOptions& options);
double dembo_expected_det(std::size_t p, std::size_t N);

/// Fraction of samples with an eigenvalue in [E - delta, E + delta]; the
/// oracle is 1 - exp(-2 delta N rho(E)).
ExperimentReport wegner_gap_probability(const EnsembleSpec& spec, double delta, double E,
                                        const RunOptions& options);

/// (1/N) log prod_i |det W_i| for `copies` correlated GOE matrices.
ExperimentReport product_factoring(double rho, std::size_t copies, std::size_t N, const RunOptions& options);

/// Running mean of |det H_k|^p for Wigner matrices with entries from `dist`.
/// Heavy when the Hill tail index of the summands falls below kHeavyTailIndex,
/// i.e. the fitted tail says the mean diverges. The max-sample share is
/// reported alongside and compared with kHeavyShareThreshold as a diagnostic.
inline constexpr double kHeavyTailIndex = 1.0;
inline constexpr double kHeavyShareThreshold = 0.35;
ExperimentReport moment_transition(double p_exp, const EntryDistribution& dist, std::size_t N,
                                   const RunOptions& options);

struct ConcavityCheck {
  bool concave = false;
  double max_second_difference = 0.0;
};
/// Second differences of (a + x^{1/p})^{p/2} (b + x^{1/p})^{p/2} on a uniform
/// grid of (0, x_max].
ConcavityCheck concavity_check(double a, double b, double p_exp, std::size_t points = 10000,
                                        double x_max = 100.0);

/// Frequency of d_KS(spec H, spec cut(H)) > N^{-kappa} with entries cut at
/// N^{-kappa}, and the interlacing bound d_KS <= rank(H - cut)/N per sample.
ExperimentReport truncation_stability_check(const EnsembleSpec& spec, double kappa, const RunOptions& options);

enum class Counterexample { outlier, kernel };
ExperimentReport counterexample_runs(Counterexample which, std::size_t N, const RunOptions& options,
                                     double theta = 0.125);

/// log(sum_k exp(x_k)) in a fixed order.
double log_sum_exp(const std::vector<double>& x);

}  // namespace detlab
