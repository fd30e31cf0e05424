#include "detlab/reference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>

#include "detlab/error.hpp"
#include "detlab/quadrature.hpp"

namespace detlab {

namespace {

using cplx = std::complex<double>;
constexpr double pi = std::numbers::pi;

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

double mp_lower(double g) { return (1.0 - std::sqrt(g)) * (1.0 - std::sqrt(g)); }
double mp_upper(double g) { return (1.0 + std::sqrt(g)) * (1.0 + std::sqrt(g)); }

double semicircle_density(const ReferenceMeasure::Semicircle& s, double x) {
  const double t = (x - s.center) / s.sigma;
  if (std::abs(t) >= 2.0) return 0.0;
  return std::sqrt(4.0 - t * t) / (2.0 * pi * s.sigma);
}

double mp_density(const ReferenceMeasure::MarchenkoPastur& m, double x) {
  const double y = x - m.shift;
  const double a = mp_lower(m.gamma), b = mp_upper(m.gamma);
  if (y <= a || y >= b || y <= 0.0) return 0.0;
  return std::sqrt((b - y) * (y - a)) / (2.0 * pi * m.gamma * y);
}

double grid_density(const ReferenceMeasure::Grid& g, double x) {
  const double t = (x - g.x0) / g.step;
  const std::size_t n = g.density.size();
  if (!(t >= 0.0) || t > static_cast<double>(n - 1)) return 0.0;
  const auto k = std::min(static_cast<std::size_t>(t), n - 2);
  const double f = t - static_cast<double>(k);
  return g.density[k] * (1.0 - f) + g.density[k + 1] * f;
}

// log(1 + w) without cancellation for small |w|.
cplx log1p_c(cplx w) {
  const double re = 0.5 * std::log1p(2.0 * w.real() + std::norm(w));
  return {re, std::atan2(w.imag(), 1.0 + w.real())};
}

cplx grid_stieltjes(const ReferenceMeasure::Grid& g, cplx z) {
  cplx total = 0.0;
  for (std::size_t k = 0; k + 1 < g.density.size(); ++k) {
    const double ra = g.density[k], rb = g.density[k + 1];
    if (ra == 0.0 && rb == 0.0) continue;
    const double a = g.x0 + g.step * static_cast<double>(k);
    const double s = (rb - ra) / g.step;
    const cplx lr = log1p_c(g.step / (a - z));  // log((b - z) / (a - z))
    total += (ra + s * (z - a)) * lr + s * g.step;
  }
  return total;
}

// Antiderivatives of log|u| and u log|u|, continuous at u = 0.
double a1(double u) { return u == 0.0 ? 0.0 : u * std::log(std::abs(u)) - u; }
double a2(double u) { return u == 0.0 ? 0.0 : 0.5 * u * u * std::log(std::abs(u)) - 0.25 * u * u; }

double grid_log_potential(const ReferenceMeasure::Grid& g, double E) {
  double total = 0.0;
  for (std::size_t k = 0; k + 1 < g.density.size(); ++k) {
    const double ra = g.density[k], rb = g.density[k + 1];
    if (ra == 0.0 && rb == 0.0) continue;
    const double a = g.x0 + g.step * static_cast<double>(k);
    const double s = (rb - ra) / g.step;
    const double u0 = a - E, u1 = a + g.step - E;
    const double alpha = ra - s * u0;
    total += alpha * (a1(u1) - a1(u0)) + s * (a2(u1) - a2(u0));
  }
  return total;
}

double grid_cdf(const ReferenceMeasure::Grid& g, double x) {
  const std::size_t n = g.density.size();
  const double t = (x - g.x0) / g.step;
  if (!(t > 0.0)) return 0.0;
  if (t >= static_cast<double>(n - 1)) return 1.0;
  const auto k = std::min(static_cast<std::size_t>(t), n - 2);
  const double h = (t - static_cast<double>(k)) * g.step;
  const double s = (g.density[k + 1] - g.density[k]) / g.step;
  return std::clamp(g.cumulative[k] + g.density[k] * h + 0.5 * s * h * h, 0.0, 1.0);
}

std::vector<double> cumulative_of(const std::vector<double>& density, double step) {
  std::vector<double> c(density.size(), 0.0);
  for (std::size_t k = 1; k < density.size(); ++k)
    c[k] = c[k - 1] + 0.5 * step * (density[k - 1] + density[k]);
  return c;
}

// Integrates f against the closed-form density over its support, with
// graded panels toward the edges and toward any extra breakpoints.
template <class F>
double closed_form_integral(const ReferenceMeasure& mu, F&& f, std::vector<double> breaks,
                            double tol) {
  const double lo = mu.support_min(), hi = mu.support_max();
  auto integrand = [&](double x) { return f(x) * mu.density(x); };
  return quad::integrate_with_breaks(integrand, lo, hi, breaks, tol).value;
}

}  // namespace

std::vector<double> grid_nodes(double x0, double step, std::size_t count) {
  std::vector<double> x(count);
  for (std::size_t k = 0; k < count; ++k) x[k] = x0 + step * static_cast<double>(k);
  return x;
}

ReferenceMeasure ReferenceMeasure::semicircle(double sigma, double center) {
  if (!(sigma > 0.0)) throw Error(ErrorCode::invalid_argument, "semicircle scale must be positive");
  return ReferenceMeasure(Semicircle{sigma, center});
}

ReferenceMeasure ReferenceMeasure::marchenko_pastur(double gamma) {
  if (!(gamma > 0.0 && gamma <= 1.0))
    throw Error(ErrorCode::invalid_argument, "Marchenko-Pastur ratio must lie in (0, 1]");
  return ReferenceMeasure(MarchenkoPastur{gamma, 0.0});
}

ReferenceMeasure ReferenceMeasure::grid(double x0, double step, std::vector<double> density,
                                        double smoothing, double* renormalization) {
  if (density.size() < 2 || !(step > 0.0))
    throw Error(ErrorCode::invalid_argument, "grid measure needs two or more nodes and a positive step");
  for (double& v : density) {
    if (!std::isfinite(v)) throw Error(ErrorCode::invalid_argument, "grid density is not finite");
    v = std::max(v, 0.0);
  }
  auto cumulative = cumulative_of(density, step);
  const double mass = cumulative.back();
  if (!(mass > 0.0)) throw Error(ErrorCode::invalid_argument, "grid density has zero mass");
  for (double& v : density) v /= mass;
  for (double& v : cumulative) v /= mass;
  if (renormalization) *renormalization = 1.0 / mass;
  return ReferenceMeasure(Grid{x0, step, std::move(density), smoothing, std::move(cumulative)});
}

ReferenceMeasure ReferenceMeasure::narrow_grid(double c, double width, std::size_t points) {
  if (points < 3 || points % 2 == 0) points = 21;
  const double step = 2.0 * width / static_cast<double>(points - 1);
  std::vector<double> d(points);
  for (std::size_t k = 0; k < points; ++k) {
    const double x = -width + step * static_cast<double>(k);
    d[k] = (width - std::abs(x)) / (width * width);
  }
  d.front() = d.back() = 0.0;
  return grid(c - width, step, std::move(d));
}

std::string_view ReferenceMeasure::kind() const {
  return std::visit(overloaded{[](const Semicircle&) { return std::string_view("semicircle"); },
                               [](const MarchenkoPastur&) { return std::string_view("marchenko_pastur"); },
                               [](const Grid&) { return std::string_view("grid"); }},
                    rep_);
}

double ReferenceMeasure::smoothing() const {
  if (const auto* g = std::get_if<Grid>(&rep_)) return g->smoothing;
  return 0.0;
}

double ReferenceMeasure::density(double x) const {
  return std::visit(overloaded{[&](const Semicircle& s) { return semicircle_density(s, x); },
                               [&](const MarchenkoPastur& m) { return mp_density(m, x); },
                               [&](const Grid& g) { return grid_density(g, x); }},
                    rep_);
}

double ReferenceMeasure::cdf(double x) const {
  return std::visit(
      overloaded{[&](const Semicircle& s) {
                   const double t = std::clamp((x - s.center) / s.sigma, -2.0, 2.0);
                   return 0.5 + t * std::sqrt(4.0 - t * t) / (4.0 * pi) + std::asin(t / 2.0) / pi;
                 },
                 [&](const MarchenkoPastur& m) {
                   const double lo = m.shift + mp_lower(m.gamma), hi = m.shift + mp_upper(m.gamma);
                   if (x <= lo) return 0.0;
                   if (x >= hi) return 1.0;
                   auto f = [&](double y) { return mp_density(m, y); };
                   return std::clamp(quad::integrate_graded(f, lo, x, true, true, 1e-12).value, 0.0, 1.0);
                 },
                 [&](const Grid& g) { return grid_cdf(g, x); }},
      rep_);
}

double ReferenceMeasure::edge_threshold() const { return std::max(1e-4, 10.0 * smoothing()); }

double ReferenceMeasure::left_edge() const {
  return std::visit(overloaded{[](const Semicircle& s) { return s.center - 2.0 * s.sigma; },
                               [](const MarchenkoPastur& m) { return m.shift + mp_lower(m.gamma); },
                               [&](const Grid& g) {
                                 const double peak = *std::max_element(g.density.begin(), g.density.end());
                                 const double level = edge_threshold() * peak;
                                 for (std::size_t k = 0; k < g.density.size(); ++k)
                                   if (g.density[k] > level) return g.x0 + g.step * static_cast<double>(k);
                                 return g.x0;
                               }},
                    rep_);
}

double ReferenceMeasure::right_edge() const {
  return std::visit(overloaded{[](const Semicircle& s) { return s.center + 2.0 * s.sigma; },
                               [](const MarchenkoPastur& m) { return m.shift + mp_upper(m.gamma); },
                               [&](const Grid& g) {
                                 const double peak = *std::max_element(g.density.begin(), g.density.end());
                                 const double level = edge_threshold() * peak;
                                 for (std::size_t k = g.density.size(); k-- > 0;)
                                   if (g.density[k] > level) return g.x0 + g.step * static_cast<double>(k);
                                 return g.x0 + g.step * static_cast<double>(g.density.size() - 1);
                               }},
                    rep_);
}

double ReferenceMeasure::support_min() const {
  if (const auto* g = std::get_if<Grid>(&rep_)) return g->x0;
  return left_edge();
}

double ReferenceMeasure::support_max() const {
  if (const auto* g = std::get_if<Grid>(&rep_))
    return g->x0 + g->step * static_cast<double>(g->density.size() - 1);
  return right_edge();
}

std::complex<double> ReferenceMeasure::stieltjes(std::complex<double> z) const {
  return std::visit(
      overloaded{[&](const Semicircle& s) {
                   const cplx w = (z - s.center) / s.sigma;
                   const cplx r = std::sqrt(w - 2.0) * std::sqrt(w + 2.0);
                   return cplx(-2.0) / (w + r) / s.sigma;
                 },
                 [&](const MarchenkoPastur& m) {
                   const double g = m.gamma;
                   const cplx w = z - m.shift;
                   const cplx r = std::sqrt(w - mp_lower(g)) * std::sqrt(w - mp_upper(g));
                   const cplx plus = 1.0 - g - w + r, minus = 1.0 - g - w - r;
                   if (std::abs(minus) >= std::abs(plus)) return cplx(2.0) / minus;
                   return plus / (2.0 * g * w);
                 },
                 [&](const Grid& g) { return grid_stieltjes(g, z); }},
      rep_);
}

double ReferenceMeasure::log_potential(double E) const {
  if (const auto* g = std::get_if<Grid>(&rep_)) return grid_log_potential(*g, E);
  return closed_form_integral(*this, [E](double x) { return std::log(std::abs(x - E)); }, {E}, 1e-11);
}

double ReferenceMeasure::moment(int k) const {
  auto power = [k](double x) { return std::pow(x, k); };
  if (const auto* g = std::get_if<Grid>(&rep_)) {
    const auto& rule = quad::gauss_legendre(6);
    double total = 0.0;
    for (std::size_t c = 0; c + 1 < g->density.size(); ++c) {
      const double a = g->x0 + g->step * static_cast<double>(c);
      for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
        const double t = 0.5 * (rule.nodes[i] + 1.0);
        const double rho = g->density[c] * (1.0 - t) + g->density[c + 1] * t;
        total += 0.5 * g->step * rule.weights[i] * rho * power(a + t * g->step);
      }
    }
    return total;
  }
  return closed_form_integral(*this, power, {}, 1e-12);
}

ReferenceMeasure ReferenceMeasure::shifted(double c) const {
  return std::visit(overloaded{[&](const Semicircle& s) { return ReferenceMeasure(Semicircle{s.sigma, s.center + c}); },
                               [&](const MarchenkoPastur& m) {
                                 return ReferenceMeasure(MarchenkoPastur{m.gamma, m.shift + c});
                               },
                               [&](const Grid& g) {
                                 Grid out = g;
                                 out.x0 += c;
                                 return ReferenceMeasure(std::move(out));
                               }},
                    rep_);
}

ReferenceMeasure ReferenceMeasure::smoothed_on(double eta0, double x0, double step,
                                               std::size_t points) const {
  std::vector<double> d(points);
  for (std::size_t k = 0; k < points; ++k)
    d[k] = stieltjes({x0 + step * static_cast<double>(k), eta0}).imag() / pi;
  return grid(x0, step, std::move(d), smoothing() + eta0);
}

ReferenceMeasure ReferenceMeasure::smoothed(double eta0, std::size_t points) const {
  const double lo = left_edge() - 1.0, hi = right_edge() + 1.0;
  return smoothed_on(eta0, lo, (hi - lo) / static_cast<double>(points - 1), points);
}

void ReferenceMeasure::write_csv(std::ostream& out, std::size_t points) const {
  out << "x,density\n";
  out.precision(12);
  if (const auto* g = std::get_if<Grid>(&rep_)) {
    for (std::size_t k = 0; k < g->density.size(); ++k)
      out << g->x0 + g->step * static_cast<double>(k) << ',' << g->density[k] << '\n';
    return;
  }
  const double lo = support_min(), hi = support_max();
  for (std::size_t k = 0; k < points; ++k) {
    const double x = lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(points - 1);
    out << x << ',' << density(x) << '\n';
  }
}

}  // namespace detlab
