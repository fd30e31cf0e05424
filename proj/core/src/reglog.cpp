#include <algorithm>
#include <cmath>
#include <limits>

#include "detlab/error.hpp"
#include "detlab/spectral.hpp"

namespace detlab {

RegLogParams RegLogParams::schedule(double N, double kappa) {
  if (!(N >= 1.0) || !(kappa > 0.0 && kappa < 1.0))
    throw Error(ErrorCode::invalid_argument, "schedule needs N >= 1 and kappa in (0, 1)");
  RegLogParams p;
  p.kappa = kappa;
  p.eta = std::pow(N, -kappa / 2.0);
  p.t = std::pow(N, -kappa / 4.0);
  p.w_b = std::pow(N, -kappa / 4.0);
  p.p_b = std::pow(N, -kappa * kappa / 8.0);
  p.epsilon = kappa * kappa / 16.0;
  p.K = std::exp(std::pow(N, p.epsilon));
  return p;
}

void RegLogParams::validate() const {
  if (!(eta > 0.0) || !(K > 0.0) || !(eta < K))
    throw Error(ErrorCode::invalid_argument, "regularization needs 0 < eta < K");
}

double log_eta(double lambda, double eta) { return 0.5 * std::log(lambda * lambda + eta * eta); }

double log_eta_K(double lambda, double eta, double K) {
  return std::min(log_eta(lambda, eta), log_eta(K, eta));
}

Convex3 convex3_pieces(double x, double eta, double K) {
  const double at_eta = log_eta(eta, eta);
  Convex3 out;
  if (x <= -eta)
    out.log1 = -x / (2.0 * eta) - 0.5 + at_eta;
  else if (x >= eta)
    out.log1 = x / (2.0 * eta) - 0.5 + at_eta;
  else
    out.log1 = log_eta(x, eta);
  out.log2 = x <= eta ? x / (2.0 * eta) : log_eta_K(x, eta, K) + 0.5 - at_eta;
  out.log3 = x >= -eta ? -x / (2.0 * eta) : log_eta_K(x, eta, K) + 0.5 - at_eta;
  return out;
}

std::vector<double> convex5_inflection_points(double E, double eta) {
  // y^3 - E y^2 - (E^2 + 3 eta^2) y + E (E^2 + eta^2), monic form of the
  // numerator of the second derivative of log_eta(x^2 - E) in y = x^2.
  const double c2 = -E, c1 = -(E * E + 3.0 * eta * eta), c0 = E * (E * E + eta * eta);
  auto p = [&](double y) { return ((y + c2) * y + c1) * y + c0; };
  const double disc = std::sqrt(4.0 * c2 * c2 - 12.0 * c1);
  const double lo_crit = (-2.0 * c2 - disc) / 6.0, hi_crit = (-2.0 * c2 + disc) / 6.0;
  const double bound = 1.0 + std::max({std::abs(c2), std::abs(c1), std::abs(c0)});
  const double edges[4] = {-bound, lo_crit, hi_crit, bound};
  std::vector<double> roots;
  for (int k = 0; k < 3; ++k) {
    double a = edges[k], b = edges[k + 1];
    double pa = p(a), pb = p(b);
    if (pa == 0.0) { roots.push_back(a); continue; }
    if ((pa < 0.0) == (pb < 0.0)) continue;
    for (int it = 0; it < 200 && b - a > 0.0; ++it) {
      const double m = 0.5 * (a + b);
      if (m == a || m == b) break;
      const double pm = p(m);
      if ((pm < 0.0) == (pa < 0.0)) {
        a = m;
        pa = pm;
      } else {
        b = m;
      }
    }
    roots.push_back(0.5 * (a + b));
  }
  std::vector<double> xs;
  for (double y : roots)
    if (y > 0.0) xs.push_back(std::sqrt(y));
  std::sort(xs.begin(), xs.end());
  return xs;
}

namespace {

double slope(double x, double E, double eta) {
  const double u = x * x - E;
  return 2.0 * x * u / (eta * eta + u * u);
}

}  // namespace

Convex5Setup convex5_setup(double E, double eta, double K) {
  if (!(eta > 0.0) || !(K > eta)) throw Error(ErrorCode::invalid_argument, "convex5 needs 0 < eta < K");
  Convex5Setup s;
  s.E = E;
  s.eta = eta;
  s.K = K;
  const auto roots = convex5_inflection_points(E, eta);
  if (E <= 0.0) {
    if (roots.empty()) throw Error(ErrorCode::eta_too_large, "no inflection point found");
    s.five = false;
    s.b = roots.back();
    s.c = std::max(slope(s.b, E, eta), 0.0);
    s.lipschitz = s.c;
    s.curvature = {+1, -1, -1, 0, 0};
    return s;
  }
  if (roots.size() < 2) throw Error(ErrorCode::eta_too_large, "inflection points b_n, b_f not found");
  s.five = true;
  s.b_n = roots[roots.size() - 2];
  s.b_f = roots.back();
  if (!(s.b_n < std::sqrt(E) && std::sqrt(E) < s.b_f))
    throw Error(ErrorCode::eta_too_large, "inflection points do not straddle sqrt(E)");
  s.c1 = std::max(100.0 * E * E / (eta * eta), -slope(s.b_n, E, eta));
  const double ln = log_eta(s.b_n * s.b_n - E, eta), lf = log_eta(s.b_f * s.b_f - E, eta);
  s.c3 = (s.c1 * s.b_n + ln + lf) / s.b_f;
  if (s.c3 < slope(s.b_f, E, eta))
    throw Error(ErrorCode::eta_too_large, "decomposition constants violate the convexity bound");
  if (std::sqrt(E + K) <= s.b_f) throw Error(ErrorCode::eta_too_large, "cap K falls inside the convex window");
  s.lipschitz = std::max(s.c1, s.c3);
  s.curvature = {-1, +1, +1, -1, -1};
  return s;
}

std::array<double, 5> convex5_pieces(double x, const Convex5Setup& s) {
  const double E = s.E, eta = s.eta, K = s.K;
  auto f = [&](double y) { return log_eta_K(y * y - E, eta, K); };
  auto g = [&](double y) { return log_eta(y * y - E, eta); };
  if (!s.five) {
    const double lb = g(s.b);
    auto two_plus = [&](double y) { return y <= s.b ? s.c * y : f(y) + s.c * s.b - lb; };
    double one;
    if (x <= -s.b)
      one = -s.c * (x + s.b) + lb;
    else if (x >= s.b)
      one = s.c * (x - s.b) + lb;
    else
      one = g(x);
    return {one, two_plus(x), two_plus(-x), 0.0, 0.0};
  }
  const double ln = g(s.b_n), lf = g(s.b_f);
  double one;
  if (x <= -s.b_n)
    one = s.c1 * (x + s.b_n) + ln;
  else if (x >= s.b_n)
    one = -s.c1 * (x - s.b_n) + ln;
  else
    one = g(x);
  auto two_plus = [&](double y) {
    if (y <= s.b_n) return -s.c1 * (y - s.b_n) + ln;
    if (y <= s.b_f) return g(y);
    return s.c3 * (y - s.b_f) + lf;
  };
  auto three_plus = [&](double y) { return y <= s.b_f ? s.c3 * (y - s.b_f) + lf : f(y); };
  return {one, two_plus(x), two_plus(-x), three_plus(x), three_plus(-x)};
}

std::array<double, 5> convex5_pieces(double x, double E, double eta, double K) {
  return convex5_pieces(x, convex5_setup(E, eta, K));
}

}  // namespace detlab
