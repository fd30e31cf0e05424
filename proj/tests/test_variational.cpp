#include <gtest/gtest.h>

#include <cmath>

#include "detlab/error.hpp"
#include "detlab/variational.hpp"
#include "generators.hpp"

using namespace detlab;
using detlab::testing::for_all;
using detlab::testing::Gen;

namespace {

VarProblem prototype(double alpha) {
  VarProblem p;
  p.family = MeasureFamily::shifted_semicircle();
  p.alpha = alpha;
  return p;
}

// Closed-form semicircle log-potential; the 1-d oracle for the prototype.
double sc_log_potential(double E) {
  double L = E * E / 4 - 0.5;
  if (std::abs(E) > 2) {
    const double r = std::sqrt(E * E - 4);
    L += -std::abs(E) * r / 4 + std::log((std::abs(E) + r) / 2);
  }
  return L;
}

struct GridMax {
  double u, value;
};

// Dense grid followed by golden-section polishing of the closed form.
GridMax oracle_max(double alpha, double lo, double hi) {
  auto f = [&](double u) { return sc_log_potential(u) - alpha * u * u; };
  double best_u = lo, best = f(lo);
  const std::size_t n = 200001;
  for (std::size_t k = 0; k < n; ++k) {
    const double u = lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(n - 1);
    if (f(u) > best) {
      best = f(u);
      best_u = u;
    }
  }
  double a = std::max(lo, best_u - (hi - lo) / (n - 1)), b = std::min(hi, best_u + (hi - lo) / (n - 1));
  const double r = (std::sqrt(5.0) - 1) / 2;
  while (b - a > 1e-12) {
    const double c = b - r * (b - a), d = a + r * (b - a);
    if (f(c) >= f(d))
      b = d;
    else
      a = c;
  }
  return {0.5 * (a + b), f(0.5 * (a + b))};
}

}  // namespace

TEST(SAlpha, Examples) {
  const std::vector<double> zero{0.0}, one{1.0};
  EXPECT_NEAR(s_alpha(prototype(0.5), zero), -0.5, 1e-9);
  EXPECT_NEAR(s_alpha(prototype(0.5), one), -0.75, 1e-9);
  EXPECT_DOUBLE_EQ(s_alpha(prototype(0.5), zero), s_alpha(prototype(7.0), zero));
}

TEST(SAlpha, ContinuousUnderRefinement) {
  const VarProblem p = prototype(0.3);
  double prev_jump = 1e9;
  for (std::size_t n : {41, 161, 641}) {
    double jump = 0.0, last = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      const std::vector<double> u{-4.0 + 8.0 * static_cast<double>(k) / static_cast<double>(n - 1)};
      const double v = s_alpha(p, u);
      if (k) jump = std::max(jump, std::abs(v - last));
      last = v;
    }
    EXPECT_LT(jump, prev_jump);
    prev_jump = jump;
  }
  // |L'| <= 1 and the penalty slope is at most 2 alpha |u| = 2.4.
  EXPECT_LE(prev_jump, 3.4 * 8.0 / 640.0);
}

TEST(SAlpha, DecayEnvelopeHolds) {
  const VarProblem p = prototype(0.2);
  const VarSolution s = solve_unrestricted(p);
  for_all(200, 401, [&](Gen& g) {
    const std::vector<double> u{g.real(-50, 50)};
    EXPECT_LE(s_alpha(p, u), std::log(s.growth_constant * std::max(std::abs(u[0]), 1.0)) - p.alpha * u[0] * u[0] + 1e-12);
  });
}

TEST(Unrestricted, HalfAlphaMaximumAtZero) {
  const VarSolution s = solve_unrestricted(prototype(0.5));
  const GridMax o = oracle_max(0.5, -5, 5);
  EXPECT_NEAR(s.u[0], 0.0, 1e-6);
  EXPECT_NEAR(s.value, -0.5, 1e-6);
  EXPECT_NEAR(s.value, o.value, 1e-6);
}

TEST(Unrestricted, EighthAlphaMatchesGridOracle) {
  // The maximizer sits outside the bulk at |u| = 4/sqrt(3).
  const VarSolution s = solve_unrestricted(prototype(0.125));
  const GridMax o = oracle_max(0.125, 0, 6);
  EXPECT_NEAR(s.value, o.value, 1e-6);
  EXPECT_NEAR(std::abs(s.u[0]), o.u, 1e-4);
  EXPECT_NEAR(std::abs(s.u[0]), 4 / std::sqrt(3.0), 1e-4);
}

TEST(Unrestricted, SingletonDomain) {
  VarProblem p = prototype(0.5);
  p.domain.box = {{3.0, 3.0}};
  const VarSolution s = solve_unrestricted(p);
  const std::vector<double> three{3.0};
  EXPECT_EQ(s.u[0], 3.0);
  EXPECT_DOUBLE_EQ(s.value, s_alpha(p, three));
}

TEST(Unrestricted, ArgmaxInvariantUnderPositiveScaling) {
  const VarProblem p = prototype(0.3);
  for_all(20, 403, [&](Gen& g) {
    const double c = g.log_uniform(1e-2, 1e2);
    std::size_t arg = 0, arg_scaled = 0;
    double best = -1e300, best_scaled = -1e300;
    for (std::size_t k = 0; k < 401; ++k) {
      const std::vector<double> u{-4.0 + 0.02 * static_cast<double>(k)};
      const double v = s_alpha(p, u);
      if (v > best) best = v, arg = k;
      if (c * v > best_scaled) best_scaled = c * v, arg_scaled = k;
    }
    EXPECT_EQ(arg, arg_scaled);
  });
}

TEST(Unrestricted, GenericShiftFamilyAgrees) {
  const VarSolution a = solve_unrestricted(prototype(0.4));
  VarProblem q = prototype(0.4);
  q.family = MeasureFamily::shifted(ReferenceMeasure::semicircle());
  const VarSolution b = solve_unrestricted(q);
  EXPECT_NEAR(a.u[0], b.u[0], 1e-6);
  EXPECT_NEAR(a.value, b.value, 1e-12);
}

TEST(Unrestricted, NoDecayIsReported) {
  VarProblem p = prototype(1e-9);
  VarOptions o;
  o.max_radius = 100;
  try {
    solve_unrestricted(p, o);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::unbounded_domain_no_decay);
  }
}

TEST(Membership, Examples) {
  const VarProblem p = prototype(0.5);
  const double eps = 0.05;
  const std::vector<double> two{2.0}, beyond{2.0 + 2 * eps}, zero{0.0};
  EXPECT_EQ(good_set_membership(p, two, eps).cls, Membership::in_G);
  EXPECT_EQ(good_set_membership(p, beyond, eps).cls, Membership::in_G_plus_eps);
  const MembershipResult m = good_set_membership(p, zero, 0.1);
  EXPECT_EQ(m.cls, Membership::outside);
  EXPECT_NEAR(m.mass_below, 0.468, 1e-3);
  EXPECT_THROW(good_set_membership(p, zero, 0.0), Error);
}

TEST(Membership, NestingAndMonotonicity) {
  const VarProblem p = prototype(0.5);
  for_all(300, 409, [&](Gen& g) {
    const std::vector<double> u{g.real(-1, 5)};
    const double e1 = g.log_uniform(1e-3, 1), e2 = e1 * g.real(1, 4);
    const auto small = good_set_membership(p, u, e1), big = good_set_membership(p, u, e2);
    // G_{+e2} is inside G_{+e1}; G is inside G_{-e}.
    if (big.cls == Membership::in_G_plus_eps) EXPECT_EQ(small.cls, Membership::in_G_plus_eps);
    if (small.cls == Membership::in_G_plus_eps || small.cls == Membership::in_G) EXPECT_LE(small.mass_below, e1);
    EXPECT_EQ(small.left_edge >= 0, small.cls == Membership::in_G_plus_eps || small.cls == Membership::in_G);
  });
}

TEST(Restricted, SmallAlphaInteriorMaximizer) {
  const RestrictedSolution s = solve_restricted(prototype(0.01));
  const GridMax o = oracle_max(0.01, 2, 20);
  EXPECT_GT(s.u[0], 2.0);
  EXPECT_NEAR(s.value, o.value, 1e-6);
  EXPECT_NEAR(s.u[0], o.u, 1e-3);
}

TEST(Restricted, LargeAlphaSitsOnBoundary) {
  const RestrictedSolution s = solve_restricted(prototype(10));
  EXPECT_NEAR(s.u[0], 2.0, 1e-6);
  EXPECT_NEAR(s.value, sc_log_potential(2.0) - 40.0, 1e-6);
}

TEST(Restricted, RayDomainMatchesUnrestricted) {
  VarProblem p = prototype(0.5);
  p.domain.box = {{5.0, std::numeric_limits<double>::infinity()}};
  const RestrictedSolution r = solve_restricted(p);
  const VarSolution u = solve_unrestricted(p);
  EXPECT_GE(r.u[0], 5.0);
  EXPECT_NEAR(r.value, u.value, 1e-9);
  EXPECT_NEAR(r.u[0], u.u[0], 1e-6);
}

TEST(Restricted, TraceIsMonotoneInEps) {
  for (double alpha : {0.01, 0.5, 10.0}) {
    const RestrictedSolution s = solve_restricted(prototype(alpha));
    ASSERT_GE(s.trace.size(), 2u);
    EXPECT_EQ(s.trace.back().eps, 0.0);
    for (std::size_t k = 1; k < s.trace.size(); ++k) {
      EXPECT_LT(s.trace[k].eps, s.trace[k - 1].eps);
      EXPECT_GE(s.trace[k].value, s.trace[k - 1].value);
    }
    EXPECT_DOUBLE_EQ(s.value, s.trace.back().value);
  }
}

TEST(Restricted, EmptyGoodSet) {
  VarProblem p = prototype(0.5);
  p.domain.box = {{-3.0, 1.0}};
  try {
    solve_restricted(p);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::empty_good_set);
  }
}

TEST(MdeFamily, ShiftDirectionReproducesShiftedSemicircle) {
  DensityOptions d;
  d.points = 801;
  d.eta0 = 1e-2;
  const auto fam = MeasureFamily::mde_family(MdeProblem::flat(SymMatrix(4)), {SymMatrix::identity(4)}, d);
  const std::vector<double> u{0.5};
  EXPECT_NEAR(fam.evaluate(u).log_potential(0.0), sc_log_potential(0.5), 2e-2);
  EXPECT_THROW(MeasureFamily::mde_family(MdeProblem::flat(SymMatrix(4)), {SymMatrix::identity(3)}), Error);
}

TEST(Laplace, SmallScaleAgreesWithSupremum) {
  VarProblem p = prototype(0.5);
  LaplaceOptions o;
  o.N = 60;
  o.run.samples = 30;
  o.run.tolerance = 0.1;
  for (std::size_t k = 0; k < 61; ++k) o.u_grid.push_back(-1.5 + 3.0 * static_cast<double>(k) / 60.0);
  auto builder = [](double u) -> EnsembleSpec { return model::Wigner{60, EntryDistribution::gaussian(), -u}; };
  const ExperimentReport r = laplace_crosscheck(p, builder, o, -0.5);
  EXPECT_TRUE(r.passed) << r.estimate;
  o.u_grid = {0.5, 1.0, 1.5};
  EXPECT_THROW(laplace_crosscheck(p, builder, o, -0.5), Error);
}

TEST(Validation, RejectsBadProblems) {
  VarProblem p = prototype(-1);
  EXPECT_THROW(p.validate(), Error);
  p = prototype(1);
  p.domain.box = {{1.0, 0.0}};
  EXPECT_THROW(p.validate(), Error);
}
