#include <cmath>
#include <string>

#include "detlab/ensembles.hpp"
#include "detlab/error.hpp"

namespace detlab {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

[[noreturn]] void invalid(const std::string& what) { throw Error(ErrorCode::invalid_spec, what); }

void require_dim(std::size_t n, const char* field) {
  if (n < 1) invalid(std::string(field) + " must be >= 1");
}

// Fills the upper triangle (row-major, i <= j) with scale * X, X ~ dist.
void fill_wigner(SymMatrix& h, const EntryDistribution& dist, double scale, Rng& rng) {
  const std::size_t n = h.size();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) h.set(i, j, scale * dist.sample(rng));
}

SymMatrix gaussian_wigner(std::size_t n, Rng& rng) {
  SymMatrix h(n);
  const double scale = 1.0 / std::sqrt(static_cast<double>(n));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) h.set(i, j, scale * rng.normal());
  return h;
}

}  // namespace

std::string_view EnsembleSpec::name() const {
  return std::visit(overloaded{
                        [](const model::Wigner&) { return "wigner"; },
                        [](const model::ErdosRenyi&) { return "erdos_renyi"; },
                        [](const model::DRegular&) { return "d_regular"; },
                        [](const model::Band&) { return "band"; },
                        [](const model::Covariance&) { return "covariance"; },
                        [](const model::VarianceProfile&) { return "variance_profile"; },
                        [](const model::BlockGaussian&) { return "block_gaussian"; },
                        [](const model::FreeAddition&) { return "free_addition"; },
                        [](const model::LongRangeShift&) { return "long_range_shift"; },
                        [](const model::OutlierCounterexample&) { return "outlier"; },
                        [](const model::KernelCounterexample&) { return "kernel"; },
                    },
                    model);
}

std::size_t EnsembleSpec::dimension() const {
  return std::visit(overloaded{
                        [](const model::Covariance& m) { return m.p; },
                        [](const model::VarianceProfile& m) { return m.A.size(); },
                        [](const model::BlockGaussian& m) { return m.N * m.K; },
                        [](const model::FreeAddition& m) { return m.A_diag.size(); },
                        [](const model::LongRangeShift& m) {
                          return m.base ? m.base->dimension() : std::size_t{0};
                        },
                        [](const auto& m) -> std::size_t { return m.N; },
                    },
                    model);
}

double EnsembleSpec::shift() const {
  return std::visit(overloaded{
                        [](const model::Wigner& m) { return m.E; },
                        [](const model::ErdosRenyi& m) { return m.E; },
                        [](const model::DRegular& m) { return m.E; },
                        [](const model::Band& m) { return m.E; },
                        [](const model::Covariance& m) { return m.E; },
                        [](const model::FreeAddition& m) { return m.E; },
                        [](const model::LongRangeShift& m) { return m.base ? m.base->shift() : 0.0; },
                        [](const auto&) { return 0.0; },
                    },
                    model);
}

EnsembleSpec EnsembleSpec::with_shift(double E) const {
  return std::visit(
      overloaded{
          [E](model::Wigner m) -> EnsembleSpec { m.E = E; return m; },
          [E](model::ErdosRenyi m) -> EnsembleSpec { m.E = E; return m; },
          [E](model::DRegular m) -> EnsembleSpec { m.E = E; return m; },
          [E](model::Band m) -> EnsembleSpec { m.E = E; return m; },
          [E](model::Covariance m) -> EnsembleSpec { m.E = E; return m; },
          [E](model::FreeAddition m) -> EnsembleSpec { m.E = E; return m; },
          [E](model::LongRangeShift m) -> EnsembleSpec {
            if (!m.base) invalid("long_range_shift without base");
            m.base = std::make_shared<const EnsembleSpec>(m.base->with_shift(E));
            return m;
          },
          [](const auto&) -> EnsembleSpec { invalid("model has no shift field"); },
      },
      model);
}

void EnsembleSpec::validate() const {
  std::visit(
      overloaded{
          [](const model::Wigner& m) {
            require_dim(m.N, "N");
            m.dist.validate();
          },
          [](const model::ErdosRenyi& m) {
            require_dim(m.N, "N");
            if (!(m.p_N > 0.0 && m.p_N < 1.0)) invalid("p_N must lie in (0,1)");
          },
          [](const model::DRegular& m) {
            require_dim(m.N, "N");
            if (m.d == 0 || m.d >= m.N) invalid("d-regular requires 0 < d < N");
            if ((m.N * m.d) % 2 != 0) invalid("d-regular requires N*d even");
          },
          [](const model::Band& m) {
            require_dim(m.N, "N");
            if (2 * m.W > m.N) invalid("band requires 0 <= W <= N/2");
            m.dist.validate();
          },
          [](const model::Covariance& m) {
            require_dim(m.p, "p");
            require_dim(m.N, "N");
            m.dist.validate();
          },
          [](const model::VarianceProfile& m) {
            require_dim(m.A.size(), "N");
            const auto n = static_cast<Eigen::Index>(m.A.size());
            if (m.S.rows() != n || m.S.cols() != n) invalid("S must be N x N");
            for (Eigen::Index i = 0; i < n; ++i)
              for (Eigen::Index j = 0; j < n; ++j) {
                if (!(m.S(i, j) >= 0.0)) invalid("S must be entrywise nonnegative");
                if (m.S(i, j) != m.S(j, i)) invalid("S must be symmetric");
              }
          },
          [](const model::BlockGaussian& m) {
            require_dim(m.K, "K");
            require_dim(m.N, "N");
            const auto k = static_cast<Eigen::Index>(m.K);
            const auto n = static_cast<Eigen::Index>(m.N);
            if (m.a.size() != m.N) invalid("block_gaussian needs N mean blocks");
            if (m.s.size() != m.K) invalid("block_gaussian needs K variance matrices");
            for (const auto& a : m.a) {
              if (a.rows() != k || a.cols() != k) invalid("mean blocks must be K x K");
              if (a != a.transpose()) invalid("mean blocks must be symmetric");
            }
            for (const auto& s : m.s) {
              if (s.rows() != n || s.cols() != n) invalid("variances must be N x N");
              if (s != s.transpose()) invalid("variances must be symmetric");
              if ((s.array() < 0.0).any()) invalid("variances must be nonnegative");
            }
          },
          [](const model::FreeAddition& m) {
            require_dim(m.A_diag.size(), "A_diag length");
            if (m.A_diag.size() != m.B_diag.size()) invalid("A_diag and B_diag lengths differ");
          },
          [](const model::LongRangeShift& m) {
            if (!m.base) invalid("long_range_shift without base");
            if (!(m.sigma_u >= 0.0)) invalid("sigma_u must be >= 0");
            m.base->validate();
          },
          [](const model::OutlierCounterexample& m) {
            require_dim(m.N, "N");
            if (!(m.theta > 0.0 && m.theta < 1.0)) invalid("theta must lie in (0,1)");
            m.dist.validate();
          },
          [](const model::KernelCounterexample& m) {
            require_dim(m.N, "N");
            m.dist.validate();
          },
      },
      model);
}

std::vector<double> outlier_mean_diagonal(std::size_t N, double theta) {
  const double n = static_cast<double>(N);
  const auto planted = static_cast<std::size_t>(std::floor(std::pow(n, 1.0 - theta) + 1e-9));
  std::vector<double> diag(N, 0.0);
  const double value = std::exp(std::pow(n, theta));
  for (std::size_t i = 0; i < std::min(planted, N); ++i) diag[i] = value;
  return diag;
}

bool kernel_hit(const model::KernelCounterexample& spec, std::uint64_t seed) {
  Rng rng(seed);
  return rng.uniform() < 1.0 / static_cast<double>(spec.N);
}

SymMatrix sample(const EnsembleSpec& spec, std::uint64_t seed) {
  spec.validate();
  return std::visit(
      overloaded{
          [seed](const model::Wigner& m) {
            Rng rng(seed);
            SymMatrix h(m.N);
            fill_wigner(h, m.dist, 1.0 / std::sqrt(static_cast<double>(m.N)), rng);
            h.add_identity(-m.E);
            return h;
          },
          [seed](const model::ErdosRenyi& m) {
            Rng rng(seed);
            SymMatrix h(m.N);
            const double n = static_cast<double>(m.N);
            const double value = 1.0 / std::sqrt(n * m.p_N * (1.0 - m.p_N));
            for (std::size_t i = 0; i < m.N; ++i)
              for (std::size_t j = i; j < m.N; ++j)
                h.set(i, j, rng.uniform() < m.p_N ? value : 0.0);
            h.add_identity(-m.E);
            return h;
          },
          [seed](const model::DRegular& m) {
            SymMatrix h = sample_dregular_adjacency(m.N, m.d, seed);
            const double d = static_cast<double>(m.d);
            const double scale = 1.0 / std::sqrt(d * (1.0 - d / static_cast<double>(m.N)));
            SymMatrix out(m.N);
            for (std::size_t i = 0; i < m.N; ++i)
              for (std::size_t j = i; j < m.N; ++j) out.set(i, j, scale * h(i, j));
            out.add_identity(-m.E);
            return out;
          },
          [seed](const model::Band& m) {
            Rng rng(seed);
            SymMatrix h(m.N);
            const double scale = 1.0 / std::sqrt(2.0 * static_cast<double>(m.W) + 1.0);
            for (std::size_t i = 0; i < m.N; ++i)
              for (std::size_t j = i; j < m.N; ++j) {
                if (periodic_distance(i, j, m.N) <= m.W) h.set(i, j, scale * m.dist.sample(rng));
              }
            h.add_identity(-m.E);
            return h;
          },
          [seed](const model::Covariance& m) {
            Rng rng(seed);
            const auto p = static_cast<Eigen::Index>(m.p);
            const auto n = static_cast<Eigen::Index>(m.N);
            Eigen::MatrixXd y(p, n);
            for (Eigen::Index i = 0; i < p; ++i)
              for (Eigen::Index j = 0; j < n; ++j) y(i, j) = m.dist.sample(rng);
            Eigen::MatrixXd g = Eigen::MatrixXd::Zero(p, p);
            g.selfadjointView<Eigen::Upper>().rankUpdate(y, 1.0 / static_cast<double>(m.N));
            SymMatrix h = SymMatrix::from_upper(g);
            h.add_identity(-m.E);
            return h;
          },
          [seed](const model::VarianceProfile& m) {
            Rng rng(seed);
            const std::size_t n = m.A.size();
            SymMatrix h(n);
            for (std::size_t i = 0; i < n; ++i)
              for (std::size_t j = i; j < n; ++j) {
                const double s = m.S(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
                h.set(i, j, m.A(i, j) + std::sqrt(s) * rng.normal());
              }
            return h;
          },
          [seed](const model::BlockGaussian& m) {
            Rng rng(seed);
            const std::size_t dim = m.N * m.K;
            SymMatrix h(dim);
            for (std::size_t i = 0; i < m.N; ++i) {
              const auto& a = m.a[i];
              for (std::size_t b = 0; b < m.K; ++b)
                for (std::size_t c = b; c < m.K; ++c)
                  h.set(b * m.N + i, c * m.N + i,
                        a(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(c)));
            }
            for (std::size_t b = 0; b < m.K; ++b) {
              const auto& s = m.s[b];
              for (std::size_t i = 0; i < m.N; ++i)
                for (std::size_t j = i; j < m.N; ++j) {
                  double var = s(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
                  if (i == j && m.goe_diagonal) var *= 2.0;
                  h.add(b * m.N + i, b * m.N + j, std::sqrt(var) * rng.normal());
                }
            }
            return h;
          },
          [seed](const model::FreeAddition& m) {
            const std::size_t n = m.A_diag.size();
            const Eigen::MatrixXd o = sample_haar_orthogonal(n, seed);
            const Eigen::Map<const Eigen::VectorXd> b(m.B_diag.data(), static_cast<Eigen::Index>(n));
            const Eigen::MatrixXd rotated = (o * b.asDiagonal()) * o.transpose();
            SymMatrix h = SymMatrix::from_upper(rotated);
            for (std::size_t i = 0; i < n; ++i) h.add(i, i, m.A_diag[i] - m.E);
            return h;
          },
          [seed](const model::LongRangeShift& m) {
            SymMatrix h = sample(*m.base, seed);
            Rng rng(salted_seed(seed, "long-range-xi"));
            const double xi =
                m.sigma_u / std::sqrt(static_cast<double>(h.size())) * rng.normal();
            h.add_identity(xi);
            return h;
          },
          [seed](const model::OutlierCounterexample& m) {
            Rng rng(seed);
            SymMatrix h(m.N);
            fill_wigner(h, m.dist, 1.0 / std::sqrt(static_cast<double>(m.N)), rng);
            const auto diag = outlier_mean_diagonal(m.N, m.theta);
            for (std::size_t i = 0; i < m.N; ++i) h.add(i, i, diag[i]);
            return h;
          },
          [seed](const model::KernelCounterexample& m) {
            Rng rng(seed);
            const bool hit = rng.uniform() < 1.0 / static_cast<double>(m.N);
            SymMatrix h(m.N);
            fill_wigner(h, m.dist, 1.0 / std::sqrt(static_cast<double>(m.N)), rng);
            if (hit) h.add_identity(static_cast<double>(m.N));
            return h;
          },
      },
      spec.model);
}

Eigen::MatrixXd sample_haar_orthogonal(std::size_t N, std::uint64_t seed) {
  if (N < 1) throw Error(ErrorCode::invalid_argument, "Haar dimension must be >= 1");
  Rng rng(seed);
  const auto n = static_cast<Eigen::Index>(N);
  Eigen::MatrixXd g(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) g(i, j) = rng.normal();
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  Eigen::MatrixXd q = qr.householderQ();
  const Eigen::MatrixXd& r = qr.matrixQR();
  for (Eigen::Index j = 0; j < n; ++j) {
    if (r(j, j) < 0.0) q.col(j) = -q.col(j);
  }
  return q;
}

std::vector<SymMatrix> sample_correlated_wigner(std::size_t N, double rho, std::size_t copies,
                                                std::uint64_t seed) {
  if (!(rho >= 0.0 && rho <= 1.0)) throw Error(ErrorCode::invalid_rho, "rho must lie in [0,1]");
  if (N < 1) throw Error(ErrorCode::invalid_spec, "N must be >= 1");
  Rng common_rng(salted_seed(seed, "common"));
  const SymMatrix common = gaussian_wigner(N, common_rng);
  const double a = std::sqrt(rho);
  const double b = std::sqrt(1.0 - rho);
  std::vector<SymMatrix> out;
  out.reserve(copies);
  for (std::size_t c = 0; c < copies; ++c) {
    Rng own_rng(salted_seed(seed, "copy-" + std::to_string(c)));
    const SymMatrix own = gaussian_wigner(N, own_rng);
    SymMatrix w(N);
    for (std::size_t i = 0; i < N; ++i)
      for (std::size_t j = i; j < N; ++j) w.set(i, j, a * common(i, j) + b * own(i, j));
    out.push_back(std::move(w));
  }
  return out;
}

std::pair<SymMatrix, SymMatrix> sample_correlated_wigner_pair(std::size_t N, double rho,
                                                              std::uint64_t seed) {
  auto pair = sample_correlated_wigner(N, rho, 2, seed);
  return {std::move(pair[0]), std::move(pair[1])};
}

}  // namespace detlab
