#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "detlab/error.hpp"
#include "detlab/free_convolution.hpp"
#include "detlab/mde.hpp"
#include "detlab/quadrature.hpp"
#include "detlab/reference.hpp"
#include "generators.hpp"

using namespace detlab;
using detlab::testing::for_all;
using detlab::testing::Gen;
using cplx = std::complex<double>;

namespace {

// Positive-imaginary root of sigma^2 m^2 + z m + 1 = 0.
cplx sc_stieltjes(cplx z, double sigma = 1.0) {
  const double s2 = sigma * sigma;
  cplx r = std::sqrt(z * z - 4.0 * s2);
  cplx m1 = (-z + r) / (2.0 * s2), m2 = (-z - r) / (2.0 * s2);
  return m1.imag() > 0 ? m1 : m2;
}

double sc_density(double x) { return std::abs(x) < 2 ? std::sqrt(4 - x * x) / (2 * std::numbers::pi) : 0.0; }

// Brute-force midpoint rule on the semicircle with the substitution x = 2 sin t,
// which removes the edge singularities; the log singularity at E is handled by
// the midpoint rule never landing on it.
double brute_log_potential(double E, std::size_t n) {
  const double pi = std::numbers::pi;
  double s = 0.0;
  const double h = pi / static_cast<double>(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double t = -pi / 2 + h * (static_cast<double>(k) + 0.5);
    const double c = std::cos(t);
    s += std::log(std::abs(2 * std::sin(t) - E)) * (2 * c * c / pi);
  }
  return s * h;
}

}  // namespace

TEST(Semicircle, ClosedForms) {
  const auto sc = ReferenceMeasure::semicircle();
  EXPECT_NEAR(sc.density(0), 1 / std::numbers::pi, 1e-15);
  EXPECT_NEAR(sc.density(0), 0.318310, 1e-6);
  EXPECT_EQ(sc.left_edge(), -2.0);
  EXPECT_EQ(sc.right_edge(), 2.0);
  // x = 2 sin t removes the square-root endpoints.
  EXPECT_NEAR(quad::integrate(
                  [&](double t) {
                    const double x = 2 * std::sin(t);
                    return x * x * sc.density(x) * 2 * std::cos(t);
                  },
                  -std::numbers::pi / 2, std::numbers::pi / 2, 64, 24),
              1.0, 1e-12);
  EXPECT_NEAR(sc.moment(2), 1.0, 1e-12);
}

TEST(MarchenkoPastur, Edges) {
  const auto mp1 = ReferenceMeasure::marchenko_pastur(1.0);
  EXPECT_EQ(mp1.left_edge(), 0.0);
  EXPECT_EQ(mp1.right_edge(), 4.0);
  EXPECT_NEAR(ReferenceMeasure::marchenko_pastur(0.25).left_edge(), 0.25, 1e-15);
  EXPECT_NEAR(ReferenceMeasure::marchenko_pastur(0.5).cdf(100.0), 1.0, 1e-9);
}

TEST(LogPotential, SemicircleAgainstBruteForce) {
  const auto sc = ReferenceMeasure::semicircle();
  EXPECT_NEAR(sc.log_potential(0.0), -0.5, 1e-6);
  EXPECT_NEAR(sc.log_potential(1.0), -0.25, 1e-6);
  EXPECT_NEAR(brute_log_potential(0.0, 10'000'000), -0.5, 1e-6);
  EXPECT_NEAR(sc.log_potential(1.0), brute_log_potential(1.0, 10'000'001), 1e-6);
}

TEST(LogPotential, SemicircleClosedFormEverywhere) {
  const auto sc = ReferenceMeasure::semicircle();
  for_all(60, 211, [&](Gen& g) {
    const double E = g.real(-6, 6);
    double L = E * E / 4 - 0.5;
    if (std::abs(E) > 2) {
      const double r = std::sqrt(E * E - 4);
      L += -std::abs(E) * r / 4 + std::log((std::abs(E) + r) / 2);
    }
    EXPECT_NEAR(sc.log_potential(E), L, 1e-7) << E;
  });
}

TEST(LogPotential, MarchenkoPasturMatchesDemboLimit) {
  for (double g : {0.25, 0.5, 0.75}) {
    const double oracle = (1 - g) / g * std::log(1 / (1 - g)) - 1;
    EXPECT_NEAR(ReferenceMeasure::marchenko_pastur(g).log_potential(0.0), oracle, 1e-7) << g;
  }
  EXPECT_NEAR(ReferenceMeasure::marchenko_pastur(0.5).log_potential(0.0), -0.306853, 1e-5);
  EXPECT_NEAR(ReferenceMeasure::marchenko_pastur(1.0).log_potential(0.0), -1.0, 1e-7);
}

TEST(LogPotential, TranslationCovariance) {
  for_all(30, 223, [](Gen& g) {
    const double c = g.real(-3, 3), E = g.real(-4, 4);
    const auto sc = ReferenceMeasure::semicircle(g.real(0.5, 2));
    EXPECT_NEAR(sc.shifted(c).log_potential(E), sc.log_potential(E - c), 1e-8);
    const auto mp = ReferenceMeasure::marchenko_pastur(g.real(0.1, 0.9));
    EXPECT_NEAR(mp.shifted(c).log_potential(E), mp.log_potential(E - c), 1e-8);
    const auto grid = sc.smoothed(1e-2, 801);
    EXPECT_NEAR(grid.shifted(c).log_potential(E), grid.log_potential(E - c), 1e-8);
  });
}

TEST(LogPotential, GridMeasureAgreesWithClosedForm) {
  const auto grid = ReferenceMeasure::semicircle().smoothed(1e-3);
  EXPECT_NEAR(grid.log_potential(0.0), -0.5, 5e-3);
  EXPECT_NEAR(grid.log_potential(1.0), -0.25, 5e-3);
}

TEST(Stieltjes, Examples) {
  const auto sc = ReferenceMeasure::semicircle();
  const cplx m = sc.stieltjes({0, 1});
  EXPECT_NEAR(m.real(), 0.0, 1e-15);
  EXPECT_NEAR(m.imag(), (std::sqrt(5.0) - 1) / 2, 1e-14);
  const auto delta = ReferenceMeasure::narrow_grid(0.0, 1e-6);
  EXPECT_NEAR(std::abs(delta.stieltjes({0, 1}) - cplx(0, 1)), 0.0, 1e-6);
  for (const auto& mu : {sc, ReferenceMeasure::marchenko_pastur(0.5), delta, sc.smoothed(1e-3)}) {
    const cplx big = mu.stieltjes({0, 1e6});
    EXPECT_NEAR(std::abs(big), 1e-6, 1e-8);
  }
}

TEST(Stieltjes, ImaginaryPartPositiveAndBounded) {
  const std::vector<ReferenceMeasure> mus = {ReferenceMeasure::semicircle(1.3, 0.2), ReferenceMeasure::marchenko_pastur(0.3),
                                             ReferenceMeasure::semicircle().smoothed(1e-2, 801)};
  for_all(200, 227, [&](Gen& g) {
    const cplx z{g.real(-6, 6), g.log_uniform(1e-4, 1e3)};
    for (const auto& mu : mus) {
      const cplx m = mu.stieltjes(z);
      EXPECT_GT(m.imag(), 0.0);
      EXPECT_LE(std::abs(m), 1.0 / z.imag() * (1 + 1e-12));
    }
  });
}

TEST(Stieltjes, SemicircleMatchesQuadraticRoot) {
  for_all(100, 229, [](Gen& g) {
    const cplx z{g.real(-5, 5), g.log_uniform(1e-6, 10)};
    const double s = g.real(0.3, 3);
    EXPECT_LE(std::abs(ReferenceMeasure::semicircle(s).stieltjes(z) - sc_stieltjes(z, s)), 1e-12 * std::max(1.0, std::abs(sc_stieltjes(z, s))));
  });
}

TEST(GridMeasure, MassDensityAndEdges) {
  const auto grid = ReferenceMeasure::semicircle().smoothed(1e-3);
  EXPECT_NEAR(grid.cdf(grid.support_max() + 1), 1.0, 1e-6);
  EXPECT_NEAR(grid.left_edge(), -2.0, 0.02);
  EXPECT_NEAR(grid.right_edge(), 2.0, 0.02);
  for (double x = -5; x <= 5; x += 0.01) EXPECT_GE(grid.density(x), 0.0);
  double factor = 0.0;
  const auto clamped = ReferenceMeasure::grid(0.0, 0.1, {1.0, -1.0, 1.0}, 0.0, &factor);
  EXPECT_EQ(clamped.density(0.1), 0.0);
  EXPECT_NEAR(clamped.cdf(1.0), 1.0, 1e-12);
  EXPECT_NEAR(factor, 10.0, 1e-12);
}

TEST(Mde, FlatGoeAtI) {
  const MdeSolution s = mde_solve(MdeProblem::flat(SymMatrix(30)), {0, 1});
  EXPECT_NEAR(std::abs(s.stieltjes() - cplx(0, 0.6180339887498949)), 0.0, 1e-9);
  EXPECT_LE(s.residual, 1e-10);
  EXPECT_LE((s.M - s.stieltjes() * Eigen::MatrixXcd::Identity(30, 30)).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(Mde, DecoupledResolvent) {
  const std::vector<double> a{-1.0, 0.5, 2.0, 3.0};
  Eigen::MatrixXd s = Eigen::MatrixXd::Zero(4, 4);
  const MdeProblem p = MdeProblem::profile(SymMatrix::diagonal(a), s);
  const cplx z{0.7, 0.2};
  const MdeSolution sol = mde_solve(p, z);
  for (int j = 0; j < 4; ++j) EXPECT_NEAR(std::abs(sol.M(j, j) - 1.0 / (a[static_cast<std::size_t>(j)] - z)), 0.0, 1e-10);
}

TEST(Mde, ResidualAndImPositivityOnRandomProfiles) {
  for_all(20, 233, [](Gen& g) {
    const std::size_t n = g.size(2, 12);
    Eigen::MatrixXd s(n, n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i; j < n; ++j) s(i, j) = s(j, i) = g.real(0.2, 1.5) / static_cast<double>(n);
    SymMatrix A = g.rng().below(2) ? g.goe(n) : SymMatrix::diagonal(g.atoms(n, -1, 1));
    const MdeProblem p = MdeProblem::profile(A, s);
    const cplx z{g.real(-3, 3), g.log_uniform(1e-2, 2)};
    const MdeSolution sol = mde_solve(p, z);
    EXPECT_LE(sol.residual, 1e-10);
    EXPECT_LE(mde_residual(p, z, sol.M), 1e-10);
    const Eigen::MatrixXcd im = (sol.M - sol.M.adjoint()) / cplx(0, 2);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(im);
    EXPECT_GT(es.eigenvalues().minCoeff(), 0.0);
  });
}

TEST(Mde, SemicircleOnTestLine) {
  const MdeProblem p = MdeProblem::flat(SymMatrix(50));
  for (double x = -4; x <= 4; x += 0.05) {
    const cplx z{x, 0.1};
    EXPECT_LE(std::abs(mde_solve(p, z).stieltjes() - sc_stieltjes(z)), 1e-6) << x;
  }
}

TEST(BlockMde, SingleBlockMatchesProfileSolver) {
  const std::size_t N = 6;
  Gen g(241);
  Eigen::MatrixXd s(N, N);
  for (std::size_t i = 0; i < N; ++i)
    for (std::size_t j = i; j < N; ++j) s(i, j) = s(j, i) = g.real(0.5, 1.5) / N;
  BlockMdeProblem b;
  b.K = 1;
  b.N = N;
  std::vector<double> diag;
  for (std::size_t i = 0; i < N; ++i) {
    diag.push_back(g.real(-1, 1));
    b.a.push_back(Eigen::MatrixXd::Constant(1, 1, diag.back()));
  }
  b.s = {s};
  const MdeProblem p = MdeProblem::profile(SymMatrix::diagonal(diag), s);
  for (double x : {-2.0, 0.0, 0.7}) {
    const cplx z{x, 0.1};
    const BlockMdeSolution bs = block_mde_solve(b, z);
    const MdeSolution ps = mde_solve(p, z);
    for (std::size_t i = 0; i < N; ++i)
      EXPECT_LE(std::abs(bs.m[i](0, 0) - ps.M(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i))), 1e-10);
    EXPECT_LE(std::abs(bs.stieltjes() - ps.stieltjes()), 1e-10);
  }
}

TEST(BlockMde, IdenticalBlocksAndFlatSemicircle) {
  const std::size_t N = 5;
  BlockMdeProblem b2, b1;
  b2.K = 2;
  b1.K = 1;
  b2.N = b1.N = N;
  for (std::size_t i = 0; i < N; ++i) {
    b2.a.push_back(Eigen::MatrixXd::Zero(2, 2));
    b1.a.push_back(Eigen::MatrixXd::Zero(1, 1));
  }
  const Eigen::MatrixXd flat = Eigen::MatrixXd::Constant(N, N, 1.0 / N);
  b2.s = {flat, flat};
  b1.s = {flat};
  for (double x : {-1.0, 0.3, 2.5}) {
    const cplx z{x, 0.05};
    const BlockMdeSolution two = block_mde_solve(b2, z), one = block_mde_solve(b1, z);
    for (std::size_t i = 0; i < N; ++i) {
      EXPECT_LE(std::abs(two.m[i](0, 0) - one.m[i](0, 0)), 1e-10);
      EXPECT_LE(std::abs(two.m[i](1, 1) - one.m[i](0, 0)), 1e-10);
    }
    EXPECT_LE(std::abs(one.stieltjes() - sc_stieltjes(z)), 1e-8);
  }
}

TEST(MdeDensity, FlatGoeMatchesSemicircleInBulk) {
  const DensityResult d = mde_density(MdeProblem::flat(SymMatrix(20)));
  double err = 0.0;
  for (double x = -1.9; x <= 1.9; x += 0.001) err = std::max(err, std::abs(d.measure.density(x) - sc_density(x)));
  EXPECT_LE(err, 5e-3);
  EXPECT_NEAR(d.renormalization, 1.0, 1e-2);
}

TEST(MdeDensity, ZeroProblemConcentratesAtZero) {
  DensityOptions o;
  o.x_min = -1;
  o.x_max = 1;
  const DensityResult d = mde_density(MdeProblem::profile(SymMatrix(4), Eigen::MatrixXd::Zero(4, 4)), o);
  EXPECT_GE(d.measure.cdf(10 * o.eta0) - d.measure.cdf(-10 * o.eta0), 0.9);
}

TEST(MdeDensity, SymmetricMeanGivesSymmetricDensity) {
  const std::size_t N = 10;
  std::vector<double> a(N);
  for (std::size_t i = 0; i < N; ++i) a[i] = i < N / 2 ? 1.0 : -1.0;
  DensityOptions o;
  o.points = 2001;
  o.x_min = -4;
  o.x_max = 4;
  const DensityResult d = mde_density(MdeProblem::flat(SymMatrix::diagonal(a)), o);
  const auto& g = std::get<ReferenceMeasure::Grid>(d.measure.representation());
  const std::size_t n = g.density.size();
  double mismatch = 0.0;
  for (std::size_t k = 0; k < n; ++k) mismatch = std::max(mismatch, std::abs(g.density[k] - g.density[n - 1 - k]));
  EXPECT_LE(mismatch, 1e-6);
}

TEST(MdeDensity, ThreadCountDoesNotChangeOutput) {
  DensityOptions o;
  o.points = 801;
  const MdeProblem p = MdeProblem::flat(SymMatrix::diagonal(std::vector<double>{-0.5, 0.0, 0.5, 1.0}));
  const DensityResult one = mde_density(p, o);
  o.threads = 3;
  const DensityResult three = mde_density(p, o);
  EXPECT_EQ(one.stieltjes, three.stieltjes);
}

TEST(FreeConvolution, SemicirclesAddInQuadrature) {
  const auto sc = ReferenceMeasure::semicircle();
  for (double x = -4; x <= 4; x += 0.02) {
    const cplx z{x, 0.1};
    const SubordinationPoint p = free_convolution_point(sc, sc, z);
    EXPECT_LE(std::abs(p.m - sc_stieltjes(z, std::sqrt(2.0))), 1e-6) << x;
    EXPECT_LE(p.residual, 1e-8);
    // Subordination: m = m_A(omega_a), omega_a + omega_b = z - 1/m.
    EXPECT_LE(std::abs(sc.stieltjes(p.omega_a) - p.m), 1e-8);
    EXPECT_LE(std::abs(p.omega_a + p.omega_b - z + 1.0 / p.m), 1e-8);
  }
}

TEST(FreeConvolution, ShiftLawForPointMasses) {
  DensityOptions o;
  o.eta0 = 1e-6;
  o.points = 4001;
  const double a = 0.7, b = -0.2;
  o.x_min = a + b - 1e-3;
  o.x_max = a + b + 1e-3;
  const DensityResult d = free_convolve(ReferenceMeasure::narrow_grid(a, 1e-5), ReferenceMeasure::narrow_grid(b, 1e-5), o);
  // Bulk within 2e-5 of a + b; the eta0 Cauchy tail leaves about 2 eta0 / (pi r) outside radius r.
  EXPECT_GE(d.measure.cdf(a + b + 1e-4) - d.measure.cdf(a + b - 1e-4), 0.99);
}

TEST(FreeConvolution, PointMassShiftsAndIdentity) {
  const auto sc = ReferenceMeasure::semicircle();
  for (double c : {0.0, 0.8}) {
    for (double x = -3; x <= 3; x += 0.25) {
      const cplx z{x, 0.05};
      const SubordinationPoint p = free_convolution_point(sc, ReferenceMeasure::narrow_grid(c, 1e-7), z);
      // Widening a point mass by 1e-7 moves m by O(width^2 |m'''|).
      EXPECT_LE(std::abs(p.m - sc.stieltjes(z - c)), 1e-6) << c << " " << x;
    }
  }
}
