#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "detlab/error.hpp"
#include "detlab/spectral.hpp"

namespace detlab {

namespace {

// Reduces the symmetric matrix held in the lower triangle of `a` to
// tridiagonal form. On return d holds the diagonal and e[k] the entry
// coupling k-1 and k (e[0] = 0).
void tridiagonalize(std::vector<double>& a, std::size_t n, std::vector<double>& d,
                    std::vector<double>& e) {
  auto at = [&](std::size_t i, std::size_t j) -> double& { return a[i * n + j]; };
  d.assign(n, 0.0);
  e.assign(n, 0.0);
  std::vector<double> u(n), p(n);
  for (std::size_t k = n - 1; k >= 1; --k) {
    const std::size_t l = k - 1;
    double scale = 0.0;
    for (std::size_t j = 0; j <= l; ++j) scale += std::abs(at(k, j));
    if (l == 0 || scale == 0.0) {
      e[k] = at(k, l);
    } else {
      double h = 0.0;
      for (std::size_t j = 0; j <= l; ++j) {
        u[j] = at(k, j) / scale;
        h += u[j] * u[j];
      }
      const double f = u[l];
      const double g = f >= 0.0 ? -std::sqrt(h) : std::sqrt(h);
      e[k] = scale * g;
      h -= f * g;
      u[l] = f - g;

      std::fill(p.begin(), p.begin() + static_cast<std::ptrdiff_t>(l + 1), 0.0);
      for (std::size_t i = 0; i <= l; ++i) {
        const double* row = &a[i * n];
        double acc = row[i] * u[i];
        const double ui = u[i];
        for (std::size_t j = 0; j < i; ++j) {
          acc += row[j] * u[j];
          p[j] += row[j] * ui;
        }
        p[i] += acc;
      }
      double kk = 0.0;
      for (std::size_t i = 0; i <= l; ++i) {
        p[i] /= h;
        kk += u[i] * p[i];
      }
      kk /= 2.0 * h;
      for (std::size_t i = 0; i <= l; ++i) p[i] -= kk * u[i];
      for (std::size_t i = 0; i <= l; ++i) {
        double* row = &a[i * n];
        const double pi = p[i], ui = u[i];
        for (std::size_t j = 0; j <= i; ++j) row[j] -= pi * u[j] + ui * p[j];
      }
    }
    d[k] = at(k, k);
  }
  d[0] = at(0, 0);
}

// Implicit-shift QL on the tridiagonal (d, e), e[i] coupling i and i+1.
void tridiagonal_ql(std::vector<double>& d, std::vector<double>& e) {
  const std::size_t n = d.size();
  constexpr double eps = std::numeric_limits<double>::epsilon();
  for (std::size_t l = 0; l < n; ++l) {
    int iter = 0;
    for (;;) {
      std::size_t m = l;
      for (; m + 1 < n; ++m) {
        const double dd = std::abs(d[m]) + std::abs(d[m + 1]);
        if (std::abs(e[m]) <= eps * dd) break;
      }
      if (m == l) break;
      if (++iter > 60) throw Error(ErrorCode::convergence_failure, "QL iteration did not converge");
      double g = (d[l + 1] - d[l]) / (2.0 * e[l]);
      double r = std::hypot(g, 1.0);
      g = d[m] - d[l] + e[l] / (g + std::copysign(r, g));
      double s = 1.0, c = 1.0, p = 0.0;
      bool deflated = false;
      for (std::size_t i = m; i-- > l;) {
        const double f = s * e[i];
        const double b = c * e[i];
        r = std::hypot(f, g);
        e[i + 1] = r;
        if (r == 0.0) {
          d[i + 1] -= p;
          e[m] = 0.0;
          deflated = true;
          break;
        }
        s = f / r;
        c = g / r;
        g = d[i + 1] - p;
        r = (d[i] - g) * s + 2.0 * c * b;
        p = s * r;
        d[i + 1] = g + p;
        g = c * r - b;
      }
      if (deflated) continue;
      d[l] -= p;
      e[l] = g;
      e[m] = 0.0;
    }
  }
}

}  // namespace

std::vector<double> eigvals_sym(std::span<const double> row_major, std::size_t n) {
  if (n == 0) return {};
  std::vector<double> a(row_major.begin(), row_major.end());
  std::vector<double> d, e;
  if (n == 1) return {a[0]};
  tridiagonalize(a, n, d, e);
  for (std::size_t i = 0; i + 1 < n; ++i) e[i] = e[i + 1];
  e[n - 1] = 0.0;
  tridiagonal_ql(d, e);
  std::sort(d.begin(), d.end());
  return d;
}

EmpiricalMeasure eigvals_sym(const SymMatrix& m) {
  return EmpiricalMeasure(eigvals_sym(m.values(), m.size()));
}

}  // namespace detlab
