#include "detlab/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include "detlab/error.hpp"
#include "detlab/parallel.hpp"
#include "detlab/quadrature.hpp"

namespace detlab {

EmpiricalMeasure::EmpiricalMeasure(std::vector<double> atoms) : atoms_(std::move(atoms)) {
  std::sort(atoms_.begin(), atoms_.end());
}

double EmpiricalMeasure::cdf(double x) const {
  if (atoms_.empty()) return 0.0;
  const auto it = std::upper_bound(atoms_.begin(), atoms_.end(), x);
  return static_cast<double>(it - atoms_.begin()) / static_cast<double>(atoms_.size());
}

double EmpiricalMeasure::moment(int k) const {
  std::vector<double> p(atoms_.size());
  for (std::size_t i = 0; i < atoms_.size(); ++i) p[i] = std::pow(atoms_[i], k);
  return pairwise_sum(p.data(), p.size()) / static_cast<double>(atoms_.size());
}

EmpiricalMeasure EmpiricalMeasure::shifted(double c) const {
  std::vector<double> out(atoms_);
  for (double& x : out) x += c;
  return EmpiricalMeasure(std::move(out));
}

void EmpiricalMeasure::write_csv(std::ostream& out) const {
  out << "atom\n";
  out.precision(17);
  for (double x : atoms_) out << x << '\n';
}

SignLogDet sign_log_abs_det(const EmpiricalMeasure& spectrum, std::optional<double> norm) {
  const std::size_t n = spectrum.size();
  if (n == 0) return {1, 0.0};
  const double op = norm.value_or(std::max(std::abs(spectrum.min()), std::abs(spectrum.max())));
  const double zero = static_cast<double>(n) * std::numeric_limits<double>::epsilon() * std::max(1.0, op);
  int sign = 1;
  std::vector<double> logs(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double l = spectrum[i];
    if (std::abs(l) < zero) return {0, -std::numeric_limits<double>::infinity()};
    if (l < 0.0) sign = -sign;
    logs[i] = std::log(std::abs(l));
  }
  return {sign, pairwise_sum(logs.data(), n)};
}

SignLogDet sign_log_abs_det(const SymMatrix& m) {
  const EmpiricalMeasure spectrum = eigvals_sym(m);
  return sign_log_abs_det(spectrum);
}

// ---- distances ----

namespace {

// Visits the merged jump points of two step CDFs; fn(x, Fa, Fb) gets the
// values on [x, next jump).
template <class Fn>
void merged_sweep(const EmpiricalMeasure& a, const EmpiricalMeasure& b, Fn&& fn) {
  const auto xa = a.atoms(), xb = b.atoms();
  const double na = static_cast<double>(xa.size()), nb = static_cast<double>(xb.size());
  std::size_t i = 0, j = 0;
  while (i < xa.size() || j < xb.size()) {
    double x;
    if (j >= xb.size() || (i < xa.size() && xa[i] <= xb[j]))
      x = xa[i];
    else
      x = xb[j];
    while (i < xa.size() && xa[i] == x) ++i;
    while (j < xb.size() && xb[j] == x) ++j;
    double next = std::numeric_limits<double>::infinity();
    if (i < xa.size()) next = xa[i];
    if (j < xb.size()) next = std::min(next, xb[j]);
    fn(x, next, static_cast<double>(i) / na, static_cast<double>(j) / nb);
  }
}

constexpr std::size_t kReferenceSamples = 20001;

template <class F>
double sampled_sup(const ReferenceMeasure& a, const ReferenceMeasure& b, F&& diff) {
  const double lo = std::min(a.support_min(), b.support_min());
  const double hi = std::max(a.support_max(), b.support_max());
  double best = 0.0;
  for (std::size_t k = 0; k < kReferenceSamples; ++k) {
    const double x = lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(kReferenceSamples - 1);
    best = std::max(best, diff(x));
  }
  return best;
}

}  // namespace

double ks_distance(const EmpiricalMeasure& a, const EmpiricalMeasure& b) {
  double best = 0.0;
  merged_sweep(a, b, [&](double, double, double fa, double fb) { best = std::max(best, std::abs(fa - fb)); });
  return best;
}

double ks_distance(const EmpiricalMeasure& a, const ReferenceMeasure& b) {
  const auto x = a.atoms();
  const double n = static_cast<double>(x.size());
  double best = 0.0;
  std::size_t i = 0;
  while (i < x.size()) {
    std::size_t j = i;
    while (j < x.size() && x[j] == x[i]) ++j;
    const double f = b.cdf(x[i]);
    best = std::max({best, std::abs(f - static_cast<double>(i) / n), std::abs(f - static_cast<double>(j) / n)});
    i = j;
  }
  return best;
}

double ks_distance(const ReferenceMeasure& a, const EmpiricalMeasure& b) { return ks_distance(b, a); }

double ks_distance(const ReferenceMeasure& a, const ReferenceMeasure& b) {
  return sampled_sup(a, b, [&](double x) { return std::abs(a.cdf(x) - b.cdf(x)); });
}

double w1_distance(const EmpiricalMeasure& a, const EmpiricalMeasure& b) {
  double total = 0.0;
  merged_sweep(a, b, [&](double x, double next, double fa, double fb) {
    if (std::isfinite(next)) total += std::abs(fa - fb) * (next - x);
  });
  return total;
}

double w1_distance(const EmpiricalMeasure& a, const ReferenceMeasure& b) {
  const auto x = a.atoms();
  std::vector<double> cuts(x.begin(), x.end());
  cuts.push_back(b.support_min());
  cuts.push_back(b.support_max());
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  const auto& rule = quad::gauss_legendre(8);
  double total = 0.0;
  for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
    const double lo = cuts[k], hi = cuts[k + 1];
    const double fa = a.cdf(lo);
    const double half = 0.5 * (hi - lo), mid = 0.5 * (hi + lo);
    double s = 0.0;
    for (std::size_t q = 0; q < rule.nodes.size(); ++q)
      s += rule.weights[q] * std::abs(fa - b.cdf(mid + half * rule.nodes[q]));
    total += s * half;
  }
  return total;
}

double w1_distance(const ReferenceMeasure& a, const EmpiricalMeasure& b) { return w1_distance(b, a); }

double w1_distance(const ReferenceMeasure& a, const ReferenceMeasure& b) {
  const double lo = std::min(a.support_min(), b.support_min());
  const double hi = std::max(a.support_max(), b.support_max());
  const double h = (hi - lo) / static_cast<double>(kReferenceSamples - 1);
  double total = 0.0, prev = 0.0;
  for (std::size_t k = 0; k < kReferenceSamples; ++k) {
    const double x = lo + h * static_cast<double>(k);
    const double d = std::abs(a.cdf(x) - b.cdf(x));
    if (k > 0) total += 0.5 * h * (prev + d);
    prev = d;
  }
  return total;
}

double bl_distance(const EmpiricalMeasure& a, const EmpiricalMeasure& b) { return std::min(w1_distance(a, b), 2.0); }
double bl_distance(const EmpiricalMeasure& a, const ReferenceMeasure& b) { return std::min(w1_distance(a, b), 2.0); }
double bl_distance(const ReferenceMeasure& a, const EmpiricalMeasure& b) { return std::min(w1_distance(a, b), 2.0); }
double bl_distance(const ReferenceMeasure& a, const ReferenceMeasure& b) { return std::min(w1_distance(a, b), 2.0); }

// ---- linear-algebra identities ----

SchurPair schur_resolvent_diag(const SymMatrix& m, std::complex<double> z, std::size_t j) {
  using cplx = std::complex<double>;
  const std::size_t n = m.size();
  if (j >= n) throw Error(ErrorCode::invalid_argument, "index out of range");
  if (!(z.imag() > 0.0)) throw Error(ErrorCode::invalid_argument, "spectral parameter must have Im z > 0");

  Eigen::MatrixXcd full = m.to_eigen().cast<cplx>();
  full.diagonal().array() -= z;
  Eigen::VectorXcd unit = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(n));
  unit(static_cast<Eigen::Index>(j)) = 1.0;
  const Eigen::VectorXcd col = full.partialPivLu().solve(unit);
  const cplx direct = col(static_cast<Eigen::Index>(j));

  const auto k = static_cast<Eigen::Index>(n - 1);
  Eigen::MatrixXcd minor(k, k);
  Eigen::VectorXcd h(k);
  for (std::size_t r = 0, rr = 0; r < n; ++r) {
    if (r == j) continue;
    h(static_cast<Eigen::Index>(rr)) = m(r, j);
    for (std::size_t c = 0, cc = 0; c < n; ++c) {
      if (c == j) continue;
      minor(static_cast<Eigen::Index>(rr), static_cast<Eigen::Index>(cc)) = m(r, c);
      ++cc;
    }
    ++rr;
  }
  cplx quadratic = 0.0;
  if (k > 0) {
    minor.diagonal().array() -= z;
    Eigen::PartialPivLU<Eigen::MatrixXcd> lu(minor);
    const Eigen::VectorXcd y = lu.solve(h);
    const double residual = (minor * y - h).norm();
    if (!y.allFinite() || residual > 1e-8 * (1.0 + h.norm()))
      throw Error(ErrorCode::singular_minor, "minor resolvent is numerically singular");
    quadratic = h.transpose() * y;
  }
  const cplx schur = 1.0 / (m(j, j) - z - quadratic);
  return {direct, schur};
}

SymMatrix cut_entries(const SymMatrix& m, double threshold) {
  if (!(threshold >= 0.0)) throw Error(ErrorCode::invalid_argument, "threshold must be nonnegative");
  SymMatrix out = m;
  for (std::size_t i = 0; i < m.size(); ++i)
    for (std::size_t j = i; j < m.size(); ++j)
      if (std::abs(m(i, j)) > threshold) out.set(i, j, 0.0);
  return out;
}

std::size_t numerical_rank(const SymMatrix& m) {
  const EmpiricalMeasure spectrum = eigvals_sym(m);
  if (spectrum.size() == 0) return 0;
  const double op = std::max(std::abs(spectrum.min()), std::abs(spectrum.max()));
  const double tol = static_cast<double>(m.size()) * std::numeric_limits<double>::epsilon() * std::max(1.0, op);
  std::size_t rank = 0;
  for (double l : spectrum.atoms())
    if (std::abs(l) > tol) ++rank;
  return rank;
}

}  // namespace detlab
