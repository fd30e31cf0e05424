#include "detlab/free_convolution.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "detlab/error.hpp"
#include "detlab/parallel.hpp"

namespace detlab {

namespace {

using cplx = std::complex<double>;

// h(w) = F(w) - w with F = 1/G = -1/m.
cplx h_of(const ReferenceMeasure& mu, cplx w) { return -1.0 / mu.stieltjes(w) - w; }

}  // namespace

SubordinationPoint free_convolution_point(const ReferenceMeasure& a, const ReferenceMeasure& b, cplx z,
                                          const FreeConvolutionOptions& options,
                                          std::optional<cplx> warm_omega_a) {
  if (!(z.imag() > 0.0)) throw Error(ErrorCode::invalid_argument, "spectral parameter must have Im z > 0");
  // omega_a is a fixed point of T(w) = z + h_B(z + h_A(w)).
  auto T = [&](cplx w) { return z + h_of(b, z + h_of(a, w)); };
  auto valid = [&](cplx w) { return std::isfinite(w.real()) && std::isfinite(w.imag()) && w.imag() >= z.imag(); };

  cplx w = (warm_omega_a && valid(*warm_omega_a)) ? *warm_omega_a : cplx(z.real(), z.imag() + 1.0);
  cplx tw = T(w);
  double res = std::abs(tw - w);
  std::size_t it = 0, stalled = 0;
  double best = res;
  while (res > options.tolerance && it < options.max_iterations) {
    ++it;
    if (res < best) {
      best = res;
      stalled = 0;
    } else if (++stalled > 25 && res <= options.acceptance) {
      break;
    }
    // Newton step on T(w) - w with a central-difference derivative; falls
    // back to the plain iteration w <- T(w), which maps the half-plane
    // {Im w >= Im z} into itself.
    const double delta = 1e-7 * (1.0 + std::abs(w));
    const cplx dT = (T(w + delta) - T(w - delta)) / (2.0 * delta);
    cplx candidate = w - (tw - w) / (dT - 1.0);
    bool accepted = false;
    if (valid(candidate)) {
      const cplx tc = T(candidate);
      const double rc = std::abs(tc - candidate);
      if (rc < res) {
        w = candidate;
        tw = tc;
        res = rc;
        accepted = true;
      }
    }
    if (!accepted) {
      w = tw;
      tw = T(w);
      res = std::abs(tw - w);
    }
  }
  if (!(res <= options.acceptance))
    throw Error(ErrorCode::no_convergence, "subordination residual " + std::to_string(res));
  SubordinationPoint p;
  p.z = z;
  p.omega_a = w;
  p.omega_b = z + h_of(a, w);
  p.m = a.stieltjes(w);
  p.residual = res;
  p.iterations = it;
  return p;
}

DensityResult free_convolve(const ReferenceMeasure& a, const ReferenceMeasure& b, const DensityOptions& options,
                            const FreeConvolutionOptions& solver) {
  if (options.points < 2 || !(options.eta0 > 0.0))
    throw Error(ErrorCode::invalid_argument, "density grid needs two or more points and eta0 > 0");
  const double lo = options.x_min.value_or(a.left_edge() + b.left_edge() - 1.0);
  const double hi = options.x_max.value_or(a.right_edge() + b.right_edge() + 1.0);
  const std::size_t n = options.points;
  const double step = (hi - lo) / static_cast<double>(n - 1);
  DensityResult out;
  out.eta0 = options.eta0;
  out.z.resize(n);
  out.stieltjes.resize(n);
  std::vector<double> residuals(n, 0.0);
  for (std::size_t k = 0; k < n; ++k) out.z[k] = {lo + step * static_cast<double>(k), options.eta0};
  const std::size_t chunk = std::max<std::size_t>(1, options.chunk);
  const std::size_t chunks = (n + chunk - 1) / chunk;
  parallel_for(chunks, options.threads, [&](std::size_t c) {
    std::optional<cplx> warm;
    for (std::size_t k = c * chunk; k < std::min(n, (c + 1) * chunk); ++k) {
      const SubordinationPoint p = free_convolution_point(a, b, out.z[k], solver, warm);
      out.stieltjes[k] = p.m;
      residuals[k] = p.residual;
      warm = p.omega_a;
    }
  });
  std::vector<double> density(n);
  for (std::size_t k = 0; k < n; ++k) density[k] = out.stieltjes[k].imag() / std::numbers::pi;
  out.max_residual = *std::max_element(residuals.begin(), residuals.end());
  out.measure = ReferenceMeasure::grid(lo, step, std::move(density), options.eta0, &out.renormalization);
  return out;
}

}  // namespace detlab
