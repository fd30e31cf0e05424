#include "detlab/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <limits>
#include <numbers>

namespace detlab::quad {

namespace {

Rule build_rule(std::size_t n) {
  Rule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  const double nn = static_cast<double>(n);
  for (std::size_t i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(std::numbers::pi * (static_cast<double>(i) + 0.75) / (nn + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (std::size_t k = 2; k <= n; ++k) {
        const double kk = static_cast<double>(k);
        const double p2 = ((2.0 * kk - 1.0) * x * p1 - (kk - 1.0) * p0) / kk;
        p0 = p1;
        p1 = p2;
      }
      dp = nn * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    {
      double p0 = 1.0, p1 = x;
      for (std::size_t k = 2; k <= n; ++k) {
        const double kk = static_cast<double>(k);
        const double p2 = ((2.0 * kk - 1.0) * x * p1 - (kk - 1.0) * p0) / kk;
        p0 = p1;
        p1 = p2;
      }
      dp = nn * (x * p1 - p0) / (x * x - 1.0);
    }
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.nodes[i] = -x;
    rule.nodes[n - 1 - i] = x;
    rule.weights[i] = w;
    rule.weights[n - 1 - i] = w;
  }
  if (n % 2 == 1) rule.nodes[n / 2] = 0.0;
  return rule;
}

double panel(const std::function<double(double)>& f, double a, double b, const Rule& rule) {
  const double half = 0.5 * (b - a);
  const double mid = 0.5 * (a + b);
  double s = 0.0;
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) s += rule.weights[i] * f(mid + half * rule.nodes[i]);
  return s * half;
}

// Panels [a + h r^{k+1}, a + h r^k], k = 0..levels-1, plus the innermost
// [a, a + h r^levels]; mirrored when grading toward b.
double graded_half(const std::function<double(double)>& f, double a, double b, bool toward_a,
                   std::size_t levels, const Rule& rule) {
  constexpr double ratio = 0.15;
  const double h = b - a;
  // Stop grading once panels approach the spacing of doubles near the
  // singular end, so no node lands on it.
  const double floor_width = 1e4 * std::numeric_limits<double>::epsilon() * std::abs(toward_a ? a : b);
  double s = 0.0;
  double outer = 1.0;
  for (std::size_t k = 0; k <= levels; ++k) {
    const bool last = k == levels || h * outer * ratio < floor_width;
    const double inner = last ? 0.0 : outer * ratio;
    if (toward_a) {
      s += panel(f, a + h * inner, a + h * outer, rule);
    } else {
      s += panel(f, b - h * outer, b - h * inner, rule);
    }
    if (last) break;
    outer = inner;
  }
  return s;
}

double graded(const std::function<double(double)>& f, double a, double b, bool sa, bool sb,
              std::size_t levels, const Rule& rule) {
  if (!sa && !sb) {
    return panel(f, a, 0.5 * (a + b), rule) + panel(f, 0.5 * (a + b), b, rule);
  }
  if (sa && sb) {
    const double m = 0.5 * (a + b);
    return graded_half(f, a, m, true, levels, rule) + graded_half(f, m, b, false, levels, rule);
  }
  return graded_half(f, a, b, sa, levels, rule);
}

}  // namespace

const Rule& gauss_legendre(std::size_t n) {
  static std::mutex mutex;
  static std::map<std::size_t, Rule> cache;
  std::lock_guard lock(mutex);
  auto it = cache.find(n);
  if (it == cache.end()) it = cache.emplace(n, build_rule(n)).first;
  return it->second;
}

double integrate(const std::function<double(double)>& f, double a, double b, std::size_t panels,
                 std::size_t order) {
  const Rule& rule = gauss_legendre(order);
  const double h = (b - a) / static_cast<double>(panels);
  double s = 0.0;
  for (std::size_t k = 0; k < panels; ++k)
    s += panel(f, a + h * static_cast<double>(k), a + h * static_cast<double>(k + 1), rule);
  return s;
}

Result integrate_graded(const std::function<double(double)>& f, double a, double b,
                        bool singular_a, bool singular_b, double tol) {
  if (!(b > a)) return {};
  const Rule& coarse = gauss_legendre(16);
  const Rule& fine = gauss_legendre(24);
  double previous = graded(f, a, b, singular_a, singular_b, 12, coarse);
  Result result{previous, std::numeric_limits<double>::infinity()};
  for (std::size_t levels = 18; levels <= 60; levels += 6) {
    const double current = graded(f, a, b, singular_a, singular_b, levels, fine);
    result = {current, std::abs(current - previous)};
    if (result.error <= tol) break;
    previous = current;
  }
  return result;
}

Result integrate_with_breaks(const std::function<double(double)>& f, double a, double b,
                             std::span<const double> breaks, double tol) {
  std::vector<double> points{a};
  for (double x : breaks)
    if (x > a && x < b) points.push_back(x);
  points.push_back(b);
  std::sort(points.begin(), points.end());
  Result total;
  for (std::size_t i = 0; i + 1 < points.size(); ++i) {
    const Result part = integrate_graded(f, points[i], points[i + 1], true, true, tol);
    total.value += part.value;
    total.error += part.error;
  }
  return total;
}

}  // namespace detlab::quad
