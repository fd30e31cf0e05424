#include "detlab/mde.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>

#include "detlab/error.hpp"
#include "detlab/parallel.hpp"
#include "detlab/spectral.hpp"

namespace detlab {

namespace {

using cplx = std::complex<double>;
using Eigen::Index;

constexpr double kMinDamping = 1.0 / 1024.0;

// Damped fixed-point driver shared by the three solver paths. `phi` maps a
// state to its image, `residual` scores a state.
template <class State, class Phi, class Residual, class Mix>
std::pair<State, std::size_t> damped_iteration(State state, const MdeOptions& options, Phi&& phi,
                                              Residual&& residual, Mix&& mix, double& res) {
  double theta = options.damping;
  res = residual(state);
  std::size_t it = 0;
  while (res > options.tolerance && it < options.max_iterations) {
    ++it;
    State next = mix(state, phi(state), theta);
    const double next_res = residual(next);
    if (!std::isfinite(next_res)) {
      theta = std::max(theta / 2.0, kMinDamping);
      continue;
    }
    if (next_res > res && theta > kMinDamping) {
      theta = std::max(theta / 2.0, kMinDamping);
      continue;
    }
    state = std::move(next);
    res = next_res;
    theta = std::min(options.damping, theta * 1.25);
  }
  if (!(res <= options.acceptance))
    throw Error(ErrorCode::no_convergence,
                "Dyson equation residual " + std::to_string(res) + " after " + std::to_string(it) + " iterations");
  return {std::move(state), it};
}

bool im_positive_definite(const Eigen::MatrixXcd& M) {
  const Eigen::MatrixXcd im = (M - M.adjoint()) / cplx(0.0, 2.0);
  Eigen::LLT<Eigen::MatrixXcd> llt(im);
  return llt.info() == Eigen::Success;
}

void require(bool ok, const std::string& what) {
  if (!ok) throw Error(ErrorCode::invalid_argument, what);
}

}  // namespace

MdeProblem MdeProblem::flat(SymMatrix A, double sigma2) {
  MdeProblem p;
  p.A = std::move(A);
  p.flat_sigma2 = sigma2;
  return p;
}

MdeProblem MdeProblem::profile(SymMatrix A, Eigen::MatrixXd s) {
  MdeProblem p;
  p.A = std::move(A);
  p.s = std::move(s);
  return p;
}

bool MdeProblem::diagonal_mean() const {
  for (std::size_t i = 0; i < A.size(); ++i)
    for (std::size_t j = i + 1; j < A.size(); ++j)
      if (A(i, j) != 0.0) return false;
  return true;
}

void MdeProblem::validate() const {
  require(A.size() > 0, "Dyson problem needs N >= 1");
  if (flat_sigma2) {
    require(*flat_sigma2 >= 0.0, "flat variance must be nonnegative");
    return;
  }
  const auto n = static_cast<Index>(A.size());
  require(s.rows() == n && s.cols() == n, "variance profile must be N x N");
  require((s.array() >= 0.0).all(), "variance profile must be nonnegative");
  require(s == s.transpose(), "variance profile must be symmetric");
}

Eigen::MatrixXcd MdeProblem::apply(const Eigen::MatrixXcd& T) const {
  const Index n = T.rows();
  if (flat_sigma2) {
    return (*flat_sigma2 * T.trace() / static_cast<double>(n)) * Eigen::MatrixXcd::Identity(n, n);
  }
  Eigen::MatrixXcd out(n, n);
  const Eigen::VectorXcd diag = T.diagonal();
  const Eigen::VectorXcd d = s.cast<cplx>() * diag;
  for (Index i = 0; i < n; ++i)
    for (Index k = 0; k < n; ++k) out(i, k) = i == k ? d(i) : s(i, k) * T(k, i);
  return out;
}

bool MdeProblem::is_flat(double p) const {
  if (flat_sigma2) return *flat_sigma2 >= 1.0 / p && *flat_sigma2 <= p;
  const double n = static_cast<double>(A.size());
  const double lo = s.minCoeff() * n, hi = s.maxCoeff() * n;
  return lo >= 1.0 / p && hi <= p;
}

std::complex<double> MdeSolution::stieltjes() const { return M.trace() / static_cast<double>(M.rows()); }

double mde_residual(const MdeProblem& problem, std::complex<double> z, const Eigen::MatrixXcd& M) {
  const Index n = M.rows();
  Eigen::MatrixXcd G = -problem.A.to_eigen().cast<cplx>() + problem.apply(M);
  G.diagonal().array() += z;
  Eigen::MatrixXcd R = G * M;
  R.diagonal().array() += 1.0;
  (void)n;
  return R.cwiseAbs().maxCoeff();
}

MdeSolution mde_solve(const MdeProblem& problem, std::complex<double> z, const MdeOptions& options,
                      const Eigen::MatrixXcd* warm) {
  if (!(z.imag() > 0.0)) throw Error(ErrorCode::invalid_argument, "spectral parameter must have Im z > 0");
  problem.validate();
  const auto n = static_cast<Index>(problem.size());
  const cplx start(0.0, 1.0 / (1.0 + std::abs(z)));
  MdeSolution sol;

  if (problem.diagonal_mean()) {
    Eigen::VectorXd a(n);
    for (Index i = 0; i < n; ++i) a(i) = problem.A(static_cast<std::size_t>(i), static_cast<std::size_t>(i));
    Eigen::MatrixXcd s_c;
    if (!problem.flat_sigma2) s_c = problem.s.cast<cplx>();
    auto self_energy = [&](const Eigen::VectorXcd& m) -> Eigen::VectorXcd {
      if (problem.flat_sigma2) return Eigen::VectorXcd::Constant(n, *problem.flat_sigma2 * m.mean());
      return s_c * m;
    };
    auto phi = [&](const Eigen::VectorXcd& m) -> Eigen::VectorXcd {
      const Eigen::VectorXcd se = self_energy(m);
      Eigen::VectorXcd out(n);
      for (Index i = 0; i < n; ++i) out(i) = -1.0 / (z - a(i) + se(i));
      return out;
    };
    auto residual = [&](const Eigen::VectorXcd& m) {
      const Eigen::VectorXcd se = self_energy(m);
      double r = 0.0;
      for (Index i = 0; i < n; ++i) r = std::max(r, std::abs(1.0 + (z - a(i) + se(i)) * m(i)));
      return r;
    };
    auto mix = [](const Eigen::VectorXcd& x, const Eigen::VectorXcd& y, double t) -> Eigen::VectorXcd {
      return (1.0 - t) * x + t * y;
    };
    Eigen::VectorXcd m0 = Eigen::VectorXcd::Constant(n, start);
    if (warm && warm->rows() == n && (warm->diagonal().imag().array() > 0.0).all()) m0 = warm->diagonal();
    auto [m, it] = damped_iteration(std::move(m0), options, phi, residual, mix, sol.residual);
    if (!(m.imag().array() > 0.0).all()) throw Error(ErrorCode::im_violation, "Im M is not positive definite");
    sol.M = m.asDiagonal();
    sol.iterations = it;
    return sol;
  }

  const Eigen::MatrixXcd A = problem.A.to_eigen().cast<cplx>();
  auto shifted = [&](const Eigen::MatrixXcd& M) -> Eigen::MatrixXcd {
    Eigen::MatrixXcd G = problem.apply(M) - A;
    G.diagonal().array() += z;
    return G;
  };
  auto phi = [&](const Eigen::MatrixXcd& M) -> Eigen::MatrixXcd {
    return -shifted(M).partialPivLu().inverse();
  };
  auto residual = [&](const Eigen::MatrixXcd& M) {
    Eigen::MatrixXcd R = shifted(M) * M;
    R.diagonal().array() += 1.0;
    return R.cwiseAbs().maxCoeff();
  };
  auto mix = [](const Eigen::MatrixXcd& x, const Eigen::MatrixXcd& y, double t) -> Eigen::MatrixXcd {
    return (1.0 - t) * x + t * y;
  };
  Eigen::MatrixXcd M0 = start * Eigen::MatrixXcd::Identity(n, n);
  if (warm && warm->rows() == n && warm->cols() == n && im_positive_definite(*warm)) M0 = *warm;
  auto [M, it] = damped_iteration(std::move(M0), options, phi, residual, mix, sol.residual);
  if (!im_positive_definite(M)) throw Error(ErrorCode::im_violation, "Im M is not positive definite");
  sol.M = std::move(M);
  sol.iterations = it;
  return sol;
}

// ---- block equation ----

BlockMdeProblem BlockMdeProblem::from_model(const model::BlockGaussian& model) {
  BlockMdeProblem p;
  p.K = model.K;
  p.N = model.N;
  p.a = model.a;
  p.s = model.s;
  return p;
}

void BlockMdeProblem::validate() const {
  require(K >= 1 && N >= 1, "block problem needs K, N >= 1");
  require(a.size() == N && s.size() == K, "block problem needs N means and K variance matrices");
  const auto k = static_cast<Index>(K), n = static_cast<Index>(N);
  for (const auto& ai : a) require(ai.rows() == k && ai.cols() == k && ai == ai.transpose(), "block means must be symmetric K x K");
  for (const auto& sj : s)
    require(sj.rows() == n && sj.cols() == n && (sj.array() >= 0.0).all(), "block variances must be nonnegative N x N");
}

std::complex<double> BlockMdeSolution::stieltjes() const {
  cplx total = 0.0;
  for (const auto& mi : m) total += mi.trace();
  const double nk = static_cast<double>(m.size()) * static_cast<double>(m.empty() ? 1 : m.front().rows());
  return total / nk;
}

BlockMdeSolution block_mde_solve(const BlockMdeProblem& problem, std::complex<double> z, const MdeOptions& options,
                                 const std::vector<Eigen::MatrixXcd>* warm) {
  if (!(z.imag() > 0.0)) throw Error(ErrorCode::invalid_argument, "spectral parameter must have Im z > 0");
  problem.validate();
  const auto K = static_cast<Index>(problem.K);
  const std::size_t N = problem.N;
  using State = std::vector<Eigen::MatrixXcd>;

  auto self_energy = [&](const State& m) {
    // diag[i](j) = sum_k s[j](i, k) (m_k)_jj
    Eigen::MatrixXcd diag_m(static_cast<Index>(N), K);
    for (std::size_t i = 0; i < N; ++i) diag_m.row(static_cast<Index>(i)) = m[i].diagonal().transpose();
    Eigen::MatrixXcd out(static_cast<Index>(N), K);
    for (Index j = 0; j < K; ++j) out.col(j) = problem.s[static_cast<std::size_t>(j)].cast<cplx>() * diag_m.col(j);
    return out;
  };
  auto shifted = [&](const Eigen::MatrixXcd& se, std::size_t i) -> Eigen::MatrixXcd {
    Eigen::MatrixXcd G = -problem.a[i].cast<cplx>();
    G.diagonal() += se.row(static_cast<Index>(i)).transpose();
    G.diagonal().array() += z;
    return G;
  };
  auto phi = [&](const State& m) {
    const Eigen::MatrixXcd se = self_energy(m);
    State out(N);
    for (std::size_t i = 0; i < N; ++i) out[i] = -shifted(se, i).inverse();
    return out;
  };
  auto residual = [&](const State& m) {
    const Eigen::MatrixXcd se = self_energy(m);
    double r = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
      Eigen::MatrixXcd R = shifted(se, i) * m[i];
      R.diagonal().array() += 1.0;
      r = std::max(r, R.cwiseAbs().maxCoeff());
    }
    return r;
  };
  auto mix = [&](const State& x, const State& y, double t) {
    State out(N);
    for (std::size_t i = 0; i < N; ++i) out[i] = (1.0 - t) * x[i] + t * y[i];
    return out;
  };
  State m0(N, cplx(0.0, 1.0 / (1.0 + std::abs(z))) * Eigen::MatrixXcd::Identity(K, K));
  if (warm && warm->size() == N &&
      std::all_of(warm->begin(), warm->end(), [&](const auto& w) { return w.rows() == K && im_positive_definite(w); }))
    m0 = *warm;
  BlockMdeSolution sol;
  auto [m, it] = damped_iteration(std::move(m0), options, phi, residual, mix, sol.residual);
  for (const auto& mi : m)
    if (!im_positive_definite(mi)) throw Error(ErrorCode::im_violation, "Im m_i is not positive definite");
  sol.m = std::move(m);
  sol.iterations = it;
  return sol;
}

// ---- densities ----

namespace {

struct Window {
  double lo, hi;
};

template <class Warm, class Solve>
DensityResult sweep(Window w, const DensityOptions& options, Solve&& solve) {
  if (options.points < 2 || !(options.eta0 > 0.0))
    throw Error(ErrorCode::invalid_argument, "density grid needs two or more points and eta0 > 0");
  const double lo = options.x_min.value_or(w.lo), hi = options.x_max.value_or(w.hi);
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
    std::optional<Warm> warm;
    for (std::size_t k = c * chunk; k < std::min(n, (c + 1) * chunk); ++k) {
      auto [m, res, state] = solve(out.z[k], warm ? &*warm : nullptr);
      out.stieltjes[k] = m;
      residuals[k] = res;
      warm = std::move(state);
    }
  });
  std::vector<double> density(n);
  for (std::size_t k = 0; k < n; ++k) density[k] = out.stieltjes[k].imag() / std::numbers::pi;
  out.max_residual = *std::max_element(residuals.begin(), residuals.end());
  out.measure = ReferenceMeasure::grid(lo, step, std::move(density), options.eta0, &out.renormalization);
  return out;
}

}  // namespace

void DensityResult::write_csv(std::ostream& os) const {
  os << "re_z,im_z,re_m,im_m\n";
  os.precision(12);
  for (std::size_t k = 0; k < z.size(); ++k)
    os << z[k].real() << ',' << z[k].imag() << ',' << stieltjes[k].real() << ',' << stieltjes[k].imag() << '\n';
}

DensityResult mde_density(const MdeProblem& problem, const DensityOptions& options) {
  problem.validate();
  const EmpiricalMeasure a_spec = eigvals_sym(problem.A);
  double spread;
  if (problem.flat_sigma2) {
    spread = 2.0 * std::sqrt(*problem.flat_sigma2);
  } else {
    spread = 2.0 * std::sqrt(problem.s.rowwise().sum().maxCoeff());
  }
  const Window w{a_spec.min() - spread - 1.0, a_spec.max() + spread + 1.0};
  return sweep<Eigen::MatrixXcd>(w, options, [&](cplx z, const Eigen::MatrixXcd* warm) {
    MdeSolution s = mde_solve(problem, z, options.solver, warm);
    const cplx m = s.stieltjes();
    return std::tuple{m, s.residual, std::move(s.M)};
  });
}

DensityResult block_mde_density(const BlockMdeProblem& problem, const DensityOptions& options) {
  problem.validate();
  double lo = 0.0, hi = 0.0;
  bool first = true;
  for (const auto& ai : problem.a) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(ai, Eigen::EigenvaluesOnly);
    const double mn = es.eigenvalues().minCoeff(), mx = es.eigenvalues().maxCoeff();
    lo = first ? mn : std::min(lo, mn);
    hi = first ? mx : std::max(hi, mx);
    first = false;
  }
  double row = 0.0;
  for (const auto& sj : problem.s) row = std::max(row, sj.rowwise().sum().maxCoeff());
  const double spread = 2.0 * std::sqrt(row);
  const Window w{lo - spread - 1.0, hi + spread + 1.0};
  using Warm = std::vector<Eigen::MatrixXcd>;
  return sweep<Warm>(w, options, [&](cplx z, const Warm* warm) {
    BlockMdeSolution s = block_mde_solve(problem, z, options.solver, warm);
    const cplx m = s.stieltjes();
    return std::tuple{m, s.residual, std::move(s.m)};
  });
}

}  // namespace detlab
