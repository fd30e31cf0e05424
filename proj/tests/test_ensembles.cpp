#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "detlab/ensembles.hpp"
#include "detlab/error.hpp"
#include "detlab/spectral.hpp"
#include "generators.hpp"

using namespace detlab;
using detlab::testing::for_all;
using detlab::testing::Gen;

namespace {

struct Moments {
  double mean = 0.0, var = 0.0;
};

Moments moments_of(const std::vector<double>& x) {
  Moments m;
  for (double v : x) m.mean += v;
  m.mean /= static_cast<double>(x.size());
  for (double v : x) m.var += (v - m.mean) * (v - m.mean);
  m.var /= static_cast<double>(x.size() - 1);
  return m;
}

}  // namespace

TEST(EntryDistribution, StandardizedLawsHaveUnitVariance) {
  const std::size_t n = 1'000'000;
  for (const auto& d : {EntryDistribution::gaussian(), EntryDistribution::rademacher(), EntryDistribution::uniform(),
                        EntryDistribution::bernoulli(0.2), EntryDistribution::student_t(5.0)}) {
    SCOPED_TRACE(std::string(to_string(d.kind)));
    Rng rng(42);
    std::vector<double> x(n);
    for (double& v : x) v = d.sample(rng);
    const Moments m = moments_of(x);
    EXPECT_LE(std::abs(m.mean), 3.0 * std::sqrt(m.var / static_cast<double>(n)));
    // Standard error of the sample variance from the fourth moment.
    double m4 = 0.0;
    for (double v : x) m4 += std::pow(v - m.mean, 4);
    m4 /= static_cast<double>(n);
    const double se = std::sqrt(std::max(0.0, m4 - m.var * m.var) / static_cast<double>(n));
    EXPECT_LE(std::abs(m.var - 1.0), 3.0 * se + 2.0 / static_cast<double>(n));
  }
}

TEST(EntryDistribution, MomentClassification) {
  EXPECT_FALSE(EntryDistribution::pareto(1.5).has_moment(2.0));
  EXPECT_TRUE(EntryDistribution::pareto(3.0).has_moment(2.0));
  EXPECT_FALSE(EntryDistribution::student_t(5.0).has_moment(6.0));
  EXPECT_TRUE(EntryDistribution::student_t(5.0).has_moment(2.0));
  EXPECT_TRUE(EntryDistribution::gaussian().has_moment(100.0));
  EXPECT_THROW(EntryDistribution::bernoulli(1.5).validate(), Error);
}

TEST(Sample, WignerOffDiagonalVarianceIsOneOverN) {
  std::vector<double> x;
  for (std::uint64_t s = 0; s < 100000; ++s) x.push_back(sample(model::Wigner{2, EntryDistribution::gaussian(), 0.0}, s)(0, 1));
  const Moments m = moments_of(x);
  const double se = m.var * std::sqrt(2.0 / static_cast<double>(x.size()));
  EXPECT_NEAR(m.var, 0.5, 3.0 * se);
}

TEST(Sample, ErdosRenyiTwoPointSupport) {
  const double hi = 1.0 / std::sqrt(3.0 * 0.25);
  for (std::uint64_t s = 0; s < 200; ++s) {
    const SymMatrix H = sample(model::ErdosRenyi{3, 0.5, 0.0}, s);
    for (std::size_t i = 0; i < 3; ++i)
      for (std::size_t j = 0; j < 3; ++j) {
        const double v = H(i, j);
        EXPECT_TRUE(v == 0.0 || std::abs(v - hi) < 1e-12) << v;
      }
  }
  EXPECT_NEAR(hi, 1.1547, 1e-4);
}

TEST(Sample, CovarianceIsPositiveSemidefinite) {
  for (std::uint64_t s = 0; s < 10000; ++s) {
    const EmpiricalMeasure ev = eigvals_sym(sample(model::Covariance{2, 2, EntryDistribution::gaussian(), 0.0}, s));
    ASSERT_GE(ev.min(), -1e-12);
  }
}

TEST(Sample, DeterministicAndSymmetric) {
  for_all(30, 7, [](Gen& g) {
    const std::size_t N = g.size(4, 40);
    const std::vector<EnsembleSpec> specs = {
        model::Wigner{N, g.light_dist(), g.real(-1, 1)},
        model::ErdosRenyi{N, g.real(0.05, 0.95), 0.0},
        model::Band{N, g.size(0, N / 2), g.light_dist(), 0.0},
        model::Covariance{g.size(1, N), N, g.light_dist(), 0.0},
        model::OutlierCounterexample{N, EntryDistribution::gaussian(), 0.125},
        model::KernelCounterexample{N, EntryDistribution::gaussian()},
    };
    const std::uint64_t seed = g.rng()();
    for (const auto& spec : specs) {
      const SymMatrix a = sample(spec, seed);
      EXPECT_EQ(a, sample(spec, seed)) << spec.name();
      const Eigen::MatrixXd e = a.to_eigen();
      EXPECT_EQ(e, e.transpose()) << spec.name();
    }
  });
}

TEST(Sample, BandZerosOutsidePeriodicWidth) {
  for_all(20, 11, [](Gen& g) {
    const std::size_t N = g.size(3, 30), W = g.size(0, N / 2);
    const SymMatrix H = sample(model::Band{N, W, EntryDistribution::gaussian(), 0.0}, g.rng()());
    for (std::size_t i = 0; i < N; ++i)
      for (std::size_t j = 0; j < N; ++j)
        if (periodic_distance(i, j, N) > W) EXPECT_EQ(H(i, j), 0.0);
  });
}

TEST(Sample, OutlierDiagonalIsPlantedExactly) {
  const std::size_t N = 64;
  const double theta = 0.125;
  const auto A = outlier_mean_diagonal(N, theta);
  const std::size_t planted = static_cast<std::size_t>(std::floor(std::pow(64.0, 1.0 - theta)));
  std::size_t count = 0;
  for (double a : A)
    if (a == std::exp(std::pow(64.0, theta))) ++count;
  EXPECT_EQ(count, planted);
  // The sampled diagonal carries the planted value plus O(1) noise.
  const SymMatrix H = sample(model::OutlierCounterexample{N, EntryDistribution::gaussian(), theta}, 3);
  for (std::size_t i = 0; i < N; ++i) EXPECT_NEAR(H(i, i), A[i], 2.0);
}

TEST(Sample, InvalidSpecsAreRejected) {
  EXPECT_THROW(sample(model::DRegular{5, 3, 0.0}, 1), Error);   // N d odd
  EXPECT_THROW(sample(model::DRegular{4, 4, 0.0}, 1), Error);   // d >= N
  EXPECT_THROW(sample(model::ErdosRenyi{4, 1.0, 0.0}, 1), Error);
  EXPECT_THROW(sample(model::Band{6, 4, EntryDistribution::gaussian(), 0.0}, 1), Error);
  EXPECT_THROW(sample(model::Wigner{0, EntryDistribution::gaussian(), 0.0}, 1), Error);
  Eigen::MatrixXd S = Eigen::MatrixXd::Ones(3, 3);
  S(0, 1) = -1.0;
  S(1, 0) = -1.0;
  EXPECT_THROW(sample(model::VarianceProfile{SymMatrix(3), S}, 1), Error);
  try {
    sample(model::ErdosRenyi{4, 0.0, 0.0}, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::invalid_spec);
  }
}

TEST(DRegular, CompleteGraphOnFourVertices) {
  const SymMatrix A = sample_dregular_adjacency(4, 3, 9);
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 4; ++j) EXPECT_EQ(A(i, j), i == j ? 0.0 : 1.0);
}

TEST(DRegular, RegularSimpleGraphs) {
  for_all(25, 13, [](Gen& g) {
    const std::size_t N = g.size(4, 40);
    std::size_t d = g.size(1, N - 1);
    if ((N * d) % 2) d = d > 1 ? d - 1 : d + 1;
    if (d >= N) d = N - 2;
    const SymMatrix A = sample_dregular_adjacency(N, d, g.rng()());
    for (std::size_t i = 0; i < N; ++i) {
      double row = 0.0;
      EXPECT_EQ(A(i, i), 0.0);
      for (std::size_t j = 0; j < N; ++j) {
        EXPECT_TRUE(A(i, j) == 0.0 || A(i, j) == 1.0);
        row += A(i, j);
      }
      EXPECT_EQ(row, static_cast<double>(d));
    }
  });
  const SymMatrix A = sample_dregular_adjacency(6, 2, 1);
  for (std::size_t i = 0; i < 6; ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < 6; ++j) row += A(i, j);
    EXPECT_EQ(row, 2.0);
  }
}

TEST(DRegular, BulkSecondMomentNearOne) {
  // The Perron eigenvalue sqrt(d / (1 - d/N)) is excluded from the bulk.
  const EmpiricalMeasure ev = eigvals_sym(sample(model::DRegular{400, 20, 0.0}, 5));
  double s = 0.0;
  for (std::size_t i = 0; i + 1 < ev.size(); ++i) s += ev[i] * ev[i];
  s /= static_cast<double>(ev.size() - 1);
  EXPECT_GE(s, 0.95);
  EXPECT_LE(s, 1.05);
}

TEST(Haar, Orthogonal) {
  for_all(10, 17, [](Gen& g) {
    const std::size_t N = g.size(1, 60);
    const Eigen::MatrixXd O = sample_haar_orthogonal(N, g.rng()());
    const double err = (O.transpose() * O - Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(N), static_cast<Eigen::Index>(N)))
                           .cwiseAbs()
                           .maxCoeff();
    EXPECT_LE(err, 1e-12);
  });
}

TEST(Haar, OneByOneSignIsFair) {
  const std::size_t n = 100000;
  std::size_t plus = 0;
  for (std::uint64_t s = 0; s < n; ++s) {
    const double o = sample_haar_orthogonal(1, s)(0, 0);
    ASSERT_EQ(std::abs(o), 1.0);
    plus += o > 0.0;
  }
  EXPECT_NEAR(static_cast<double>(plus) / n, 0.5, 3.0 * 0.5 / std::sqrt(static_cast<double>(n)));
}

TEST(Haar, TraceHasMeanZero) {
  std::vector<double> tr;
  for (std::uint64_t s = 0; s < 10000; ++s) tr.push_back(sample_haar_orthogonal(50, s).trace());
  const Moments m = moments_of(tr);
  EXPECT_LE(std::abs(m.mean), 3.0 * std::sqrt(m.var / static_cast<double>(tr.size())));
}

TEST(CorrelatedWigner, FullCorrelationGivesIdenticalCopies) {
  const auto [a, b] = sample_correlated_wigner_pair(30, 1.0, 4);
  EXPECT_EQ(a, b);
  EXPECT_THROW(sample_correlated_wigner_pair(30, 1.5, 4), Error);
  EXPECT_THROW(sample_correlated_wigner_pair(30, -0.1, 4), Error);
}

TEST(CorrelatedWigner, EntryCorrelationMatchesRho) {
  for (double rho : {0.0, 0.5}) {
    std::vector<double> x, y;
    for (std::uint64_t s = 0; x.size() < 100000; ++s) {
      const auto [a, b] = sample_correlated_wigner_pair(20, rho, s);
      for (std::size_t i = 0; i < 20; ++i)
        for (std::size_t j = i + 1; j < 20; ++j) {
          x.push_back(a(i, j));
          y.push_back(b(i, j));
        }
    }
    const Moments mx = moments_of(x), my = moments_of(y);
    double c = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) c += (x[k] - mx.mean) * (y[k] - my.mean);
    c /= static_cast<double>(x.size() - 1) * std::sqrt(mx.var * my.var);
    const double se = (1.0 - rho * rho) / std::sqrt(static_cast<double>(x.size()));
    EXPECT_NEAR(c, rho, 3.0 * se + 1e-3) << rho;
  }
}

TEST(CorrelatedWigner, MarginalsFollowSemicircle) {
  const auto [a, b] = sample_correlated_wigner_pair(100, 0.5, 21);
  EXPECT_LE(ks_distance(eigvals_sym(a), ReferenceMeasure::semicircle()), 0.1);
  EXPECT_LE(ks_distance(eigvals_sym(b), ReferenceMeasure::semicircle()), 0.1);
}

TEST(SpecIo, RoundTripPreservesHash) {
  const std::vector<EnsembleSpec> specs = {
      model::Wigner{10, EntryDistribution::pareto(1.5), 0.25},
      model::ErdosRenyi{10, 0.3, -1.0},
      model::DRegular{10, 3, 0.0},
      model::Band{10, 2, EntryDistribution::student_t(5.0), 0.5},
      model::Covariance{4, 10, EntryDistribution::bernoulli(0.3), 0.0},
      model::FreeAddition{{1.0, 2.0}, {0.0, -1.0}, 0.5},
      model::LongRangeShift{std::make_shared<const EnsembleSpec>(model::Wigner{5, EntryDistribution::gaussian(), 0.0}), 2.0},
      model::OutlierCounterexample{16, EntryDistribution::gaussian(), 0.25},
      model::KernelCounterexample{16, EntryDistribution::rademacher()},
  };
  for (const auto& s : specs) {
    const std::string j = spec_to_json(s);
    const EnsembleSpec back = spec_from_json(j);
    EXPECT_EQ(spec_to_json(back), j);
    EXPECT_EQ(spec_hash(back), spec_hash(s));
    EXPECT_EQ(sample(back, 99), sample(s, 99)) << j;
  }
  EXPECT_THROW(spec_from_json("{\"model\":\"nope\"}"), Error);
  EXPECT_THROW(spec_from_json("not json"), Error);
}
