#include <cmath>
#include <limits>
#include <string>

#include "detlab/ensembles.hpp"
#include "detlab/error.hpp"

namespace detlab {

std::string_view to_string(EntryDistribution::Kind kind) {
  using K = EntryDistribution::Kind;
  switch (kind) {
    case K::gaussian: return "gaussian";
    case K::rademacher: return "rademacher";
    case K::uniform: return "uniform";
    case K::bernoulli: return "bernoulli";
    case K::pareto: return "pareto";
    case K::student_t: return "student_t";
  }
  return "unknown";
}

EntryDistribution::Kind entry_kind_from_string(std::string_view name) {
  using K = EntryDistribution::Kind;
  for (K k : {K::gaussian, K::rademacher, K::uniform, K::bernoulli, K::pareto, K::student_t}) {
    if (to_string(k) == name) return k;
  }
  throw Error(ErrorCode::invalid_spec, "unknown entry distribution '" + std::string(name) + "'");
}

void EntryDistribution::validate() const {
  switch (kind) {
    case Kind::bernoulli:
      if (!(param > 0.0 && param < 1.0))
        throw Error(ErrorCode::invalid_spec, "bernoulli p must lie in (0,1)");
      break;
    case Kind::pareto:
      if (!(param > 0.0)) throw Error(ErrorCode::invalid_spec, "pareto tail index must be > 0");
      break;
    case Kind::student_t:
      if (!(param > 0.0)) throw Error(ErrorCode::invalid_spec, "student_t dof must be > 0");
      break;
    default:
      break;
  }
}

bool EntryDistribution::has_moment(double order) const {
  switch (kind) {
    case Kind::pareto:
    case Kind::student_t:
      return order < param;
    default:
      return true;
  }
}

double EntryDistribution::sample(Rng& rng) const {
  switch (kind) {
    case Kind::gaussian:
      return rng.normal();
    case Kind::rademacher:
      return rng.uniform() < 0.5 ? -1.0 : 1.0;
    case Kind::uniform: {
      const double u = rng.uniform();
      return standardized ? std::sqrt(3.0) * (2.0 * u - 1.0) : u;
    }
    case Kind::bernoulli: {
      const double x = rng.uniform() < param ? 1.0 : 0.0;
      return standardized ? (x - param) / std::sqrt(param * (1.0 - param)) : x;
    }
    case Kind::pareto: {
      // Classical Pareto on [1, inf) with P(X > x) = x^{-a}.
      const double a = param;
      const double x = std::pow(rng.uniform_open(), -1.0 / a);
      if (!standardized) return x;
      if (a > 2.0) {
        const double mean = a / (a - 1.0);
        const double sd = std::sqrt(a / ((a - 1.0) * (a - 1.0) * (a - 2.0)));
        return (x - mean) / sd;
      }
      return x - std::pow(2.0, 1.0 / a);
    }
    case Kind::student_t: {
      const double nu = param;
      const double z = rng.normal();
      const double chi2 = 2.0 * rng.gamma(0.5 * nu);
      const double t = z / std::sqrt(chi2 / nu);
      if (standardized && nu > 2.0) return t / std::sqrt(nu / (nu - 2.0));
      return t;
    }
  }
  return std::numeric_limits<double>::quiet_NaN();
}

}  // namespace detlab
