#pragma once

#include <complex>
#include <cstddef>
#include <optional>

#include "detlab/mde.hpp"
#include "detlab/reference.hpp"

namespace detlab {

/// Solution of the subordination system at one spectral parameter z.
/// omega_a is the point at which mu_A's transform is evaluated, omega_b the
/// point for mu_B; m = m_A(omega_a) = m_B(omega_b), omega_a + omega_b = z - 1/m.
struct SubordinationPoint {
  std::complex<double> z;
  std::complex<double> m;
  std::complex<double> omega_a;
  std::complex<double> omega_b;
  double residual = 0.0;  // |F_A(omega_a) - F_B(omega_b)|, F = -1/m
  std::size_t iterations = 0;
};

struct FreeConvolutionOptions {
  double tolerance = 1e-13;
  double acceptance = 1e-8;
  std::size_t max_iterations = 20000;
};

/// Throws no-convergence.
SubordinationPoint free_convolution_point(const ReferenceMeasure& a, const ReferenceMeasure& b,
                                          std::complex<double> z, const FreeConvolutionOptions& options = {},
                                          std::optional<std::complex<double>> warm_omega_a = {});

/// Density of mu_A boxplus mu_B by Stieltjes inversion at options.eta0 on a
/// grid over [l_A + l_B - 1, r_A + r_B + 1] unless overridden.
DensityResult free_convolve(const ReferenceMeasure& a, const ReferenceMeasure& b,
                            const DensityOptions& options = {}, const FreeConvolutionOptions& solver = {});

}  // namespace detlab
