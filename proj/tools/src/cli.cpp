#include "detlab/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <complex>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "detlab/error.hpp"
#include "detlab/experiments.hpp"
#include "detlab/free_convolution.hpp"
#include "detlab/mde.hpp"
#include "detlab/rng.hpp"
#include "detlab/spectral.hpp"
#include "detlab/variational.hpp"
#include "json.hpp"

namespace detlab::cli {

namespace {

using json = nlohmann::ordered_json;

// ---- parameter tables ----

enum class Type { integer, real, text, flag };

struct Param {
  std::string key;  // snake_case; the flag is --key with '-' for '_'
  Type type;
  json fallback;    // null means "derived from other parameters"
  std::string help;
};

struct Command {
  std::string name;
  std::string help;
  std::vector<Param> params;
  std::string columns;  // CSV column documentation for --help
};

const std::vector<Param> kModelParams = {
    {"model", Type::text, "wigner", "wigner|erdos-renyi|d-regular|band|covariance|outlier|kernel"},
    {"n", Type::integer, 400, "matrix dimension N"},
    {"dist", Type::text, "gaussian", "entry law: gaussian|rademacher|uniform|bernoulli|pareto|student_t"},
    {"dist_param", Type::real, 0.0, "Bernoulli p, Pareto tail index or Student-t dof"},
    {"p", Type::integer, nullptr, "covariance rows (default N/2)"},
    {"bandwidth", Type::integer, nullptr, "band half-width W (default ceil(N^0.6))"},
    {"degree", Type::integer, nullptr, "d-regular degree (default ceil(sqrt N))"},
    {"edge_prob", Type::real, nullptr, "Erdos-Renyi edge probability (default N^-0.5)"},
    {"theta", Type::real, 0.125, "outlier exponent"},
    {"energy", Type::real, 0.0, "shift E"},
};

std::vector<Param> with_model(std::vector<Param> extra) {
  std::vector<Param> all = kModelParams;
  all.insert(all.end(), extra.begin(), extra.end());
  return all;
}

const std::string kReportColumns = "report.csv columns: " + ExperimentReport::csv_header();

std::vector<Command> commands() {
  return {
      {"detgrowth", "Monte Carlo (1/N) log|det(H - E)| against the log-potential of the limit measure",
       with_model({{"samples", Type::integer, 200, "number of samples"},
                   {"tolerance", Type::real, 0.03, "pass tolerance on |estimate - oracle|"},
                   {"keep_samples", Type::flag, false, "write samples.csv"}}),
       kReportColumns + "\nsamples.csv columns: index,log_abs_det_per_n,sign"},
      {"dembo", "Mean of det((1/N) Y Y^T) against N!/(N^p (N-p)!)",
       {{"n", Type::integer, 8, "columns N"},
        {"p", Type::integer, 4, "rows p"},
        {"dist", Type::text, "gaussian", "entry law"},
        {"dist_param", Type::real, 0.0, "entry law parameter"},
        {"samples", Type::integer, 100000, "number of samples"}},
       kReportColumns},
      {"wegner", "Probability of an eigenvalue in [E - delta, E + delta]",
       with_model({{"delta", Type::real, nullptr, "half-width (default N^-2)"},
                   {"samples", Type::integer, 500, "number of samples"},
                   {"tolerance", Type::real, 0.05, "pass tolerance"}}),
       kReportColumns},
      {"mde", "Solve the matrix Dyson equation at one point or on a density grid",
       {{"flat_goe", Type::flag, false, "flat GOE problem: A = 0, s_ij = sigma2/N"},
        {"n", Type::integer, 100, "dimension of the flat problem"},
        {"sigma2", Type::real, 1.0, "flat variance"},
        {"z_real", Type::real, 0.0, "Re z"},
        {"z_imag", Type::real, 1.0, "Im z"},
        {"density", Type::flag, false, "also compute the density grid"},
        {"points", Type::integer, 4001, "density grid points"},
        {"eta0", Type::real, 1e-3, "density smoothing"},
        {"tolerance", Type::real, 1e-6, "pass tolerance against the semicircle for flat problems"}},
       "density.csv columns: re_z,im_z,re_m,im_m"},
      {"freeconv", "Free additive convolution of two measures by subordination",
       {{"a_sigma", Type::real, 1.0, "semicircle scale of the first measure"},
        {"b_sigma", Type::real, 1.0, "semicircle scale of the second measure"},
        {"z_real", Type::real, 0.0, "Re z"},
        {"z_imag", Type::real, 0.1, "Im z"},
        {"density", Type::flag, false, "also compute the density grid"},
        {"points", Type::integer, 4001, "density grid points"},
        {"eta0", Type::real, 1e-3, "density smoothing"},
        {"tolerance", Type::real, 1e-6, "pass tolerance against the semicircle for two semicircles"}},
       "density.csv columns: re_z,im_z,re_m,im_m"},
      {"variational", "Maximize log_potential(mu(u), 0) - alpha |u|^2 over u",
       {{"alpha", Type::real, 0.5, "penalty weight"},
        {"sigma", Type::real, 1.0, "semicircle scale of the shifted family"},
        {"u_min", Type::real, nullptr, "domain lower bound"},
        {"u_max", Type::real, nullptr, "domain upper bound"},
        {"restricted", Type::flag, false, "restrict to the good set (nonnegative left edge)"},
        {"grid_points", Type::integer, 401, "coarse grid points"},
        {"eps", Type::real, 0.01, "membership eps for the trace"},
        {"trace_min", Type::real, -4.0, "trace start"},
        {"trace_max", Type::real, 4.0, "trace end"},
        {"trace_points", Type::integer, 161, "trace points"}},
       "trace.csv columns: u1,s_alpha,membership\nrestricted.csv columns: eps,u1,value"},
      {"laplace", "Monte Carlo Laplace integral over u of exp(-N alpha u^2) |det(W + u)|",
       {{"alpha", Type::real, 0.5, "penalty weight"},
        {"n", Type::integer, 200, "matrix dimension"},
        {"samples", Type::integer, 100, "samples per u"},
        {"u_min", Type::real, -1.5, "grid start"},
        {"u_max", Type::real, 1.5, "grid end"},
        {"u_points", Type::integer, 121, "grid points"},
        {"restricted", Type::flag, false, "weight by the positive-definite fraction"},
        {"tolerance", Type::real, 0.05, "pass tolerance"},
        {"keep_samples", Type::flag, false, "write samples.csv"}},
       kReportColumns + "\nsamples.csv columns: u,growth,pd_fraction,log_integrand_per_n"},
      {"products", "Growth of prod |det W_i| for correlated GOE copies",
       {{"rho", Type::real, 0.5, "correlation"},
        {"copies", Type::integer, 2, "number of copies"},
        {"n", Type::integer, 300, "matrix dimension"},
        {"samples", Type::integer, 200, "number of samples"},
        {"tolerance", Type::real, 0.08, "pass tolerance"}},
       kReportColumns},
      {"moments", "Tail index and max-sample share of |det H|^p; heavy when the index is below 1",
       {{"p_exp", Type::real, 1.0, "moment order p"},
        {"dist", Type::text, "gaussian", "entry law"},
        {"dist_param", Type::real, 0.0, "entry law parameter"},
        {"n", Type::integer, 20, "matrix dimension (at most 50)"},
        {"samples", Type::integer, 10000, "number of samples"}},
       kReportColumns},
      {"decomp-test", "Exact identities: regularized-log decompositions or the truncation bound",
       with_model({{"check", Type::text, "convex", "convex|truncation"},
                   {"eta", Type::real, 0.01, "regularization eta"},
                   {"k_cap", Type::real, 1e3, "cap K"},
                   {"x_max", Type::real, 10.0, "grid half-width"},
                   {"points", Type::integer, 10001, "grid points"},
                   {"kappa", Type::real, 0.1, "truncation exponent"},
                   {"samples", Type::integer, 100, "truncation samples"}}),
       "decomp.csv columns: x,piece1,...,sum,target"},
      {"counterexample", "Models that break the assumptions: outlier diagonal or heavy kernel",
       {{"which", Type::text, "outlier", "outlier|kernel"},
        {"n", Type::integer, 256, "matrix dimension"},
        {"samples", Type::integer, 200, "number of samples"},
        {"theta", Type::real, 0.125, "outlier exponent"},
        {"tolerance", Type::real, 0.05, "pass tolerance for the no-hit estimate"}},
       kReportColumns},
  };
}

std::string flag_name(const std::string& key) {
  std::string s = key;
  for (char& c : s)
    if (c == '_') c = '-';
  return "--" + s;
}

// ---- usage errors ----

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

json parse_value(const Param& p, const std::string& text) {
  try {
    std::size_t used = 0;
    switch (p.type) {
      case Type::integer: {
        const long long v = std::stoll(text, &used);
        if (used != text.size() || v < 0) break;
        return v;
      }
      case Type::real: {
        const double v = std::stod(text, &used);
        if (used != text.size()) break;
        return v;
      }
      case Type::text: return text;
      case Type::flag: return text == "true" || text == "1";
    }
  } catch (const std::exception&) {
  }
  throw UsageError("invalid value '" + text + "' for " + flag_name(p.key));
}

json coerce(const Param& p, const json& v) {
  if (v.is_null()) return v;
  switch (p.type) {
    case Type::integer:
      if (v.is_number_unsigned()) return v;
      if (v.is_number_integer() && v.get<long long>() >= 0) return v;
      break;
    case Type::real:
      if (v.is_number()) return v.get<double>();
      break;
    case Type::text:
      if (v.is_string()) return v;
      break;
    case Type::flag:
      if (v.is_boolean()) return v;
      break;
  }
  throw UsageError("config key '" + p.key + "' has the wrong type");
}

// ---- resolved plan accessors ----

struct Plan {
  std::string command;
  json params = json::object();
  json spec;      // optional ensemble spec block from the config
  json extra;     // optional measure/problem blocks from the config
  std::uint64_t seed = kDefaultSeed;
  unsigned threads = 1;
  std::string out_dir;
  bool dry_run = false;
  bool timing = false;

  bool has(const std::string& k) const { return params.contains(k) && !params[k].is_null(); }
  double real(const std::string& k) const { return params.at(k).get<double>(); }
  std::size_t count(const std::string& k) const { return params.at(k).get<std::size_t>(); }
  std::string text(const std::string& k) const { return params.at(k).get<std::string>(); }
  bool flag(const std::string& k) const { return params.at(k).get<bool>(); }

  // Per-command stream: the master seed salted by the command name.
  RunOptions run_options() const {
    RunOptions o;
    o.seed = salted_seed(seed, command);
    o.threads = threads;
    o.timing = timing;
    if (has("samples")) o.samples = count("samples");
    if (has("tolerance")) o.tolerance = real("tolerance");
    if (has("keep_samples")) o.keep_samples = flag("keep_samples");
    return o;
  }
};

EntryDistribution dist_of(const Plan& p) {
  const std::string name = p.text("dist");
  EntryDistribution d;
  try {
    d.kind = entry_kind_from_string(name);
  } catch (const Error&) {
    throw UsageError("unknown entry law '" + name + "'");
  }
  d.param = p.real("dist_param");
  if (d.param == 0.0) {
    if (d.kind == EntryDistribution::Kind::bernoulli) d.param = 0.5;
    if (d.kind == EntryDistribution::Kind::pareto) d.param = 1.5;
    if (d.kind == EntryDistribution::Kind::student_t) d.param = 5.0;
  }
  return d;
}

EnsembleSpec spec_of(Plan& p) {
  if (!p.spec.is_null()) return spec_from_json(p.spec.dump());
  const std::string m = p.text("model");
  const std::size_t N = p.count("n");
  const double E = p.real("energy");
  const double n = static_cast<double>(N);
  EnsembleSpec spec = model::Wigner{N, dist_of(p), E};
  if (m == "wigner") {
  } else if (m == "erdos-renyi") {
    if (!p.has("edge_prob")) p.params["edge_prob"] = std::pow(n, -0.5);
    spec = model::ErdosRenyi{N, p.real("edge_prob"), E};
  } else if (m == "d-regular") {
    if (!p.has("degree")) p.params["degree"] = static_cast<std::size_t>(std::ceil(std::sqrt(n)));
    spec = model::DRegular{N, p.count("degree"), E};
  } else if (m == "band") {
    if (!p.has("bandwidth")) p.params["bandwidth"] = static_cast<std::size_t>(std::ceil(std::pow(n, 0.6)));
    spec = model::Band{N, p.count("bandwidth"), dist_of(p), E};
  } else if (m == "covariance") {
    if (!p.has("p")) p.params["p"] = N / 2;
    spec = model::Covariance{p.count("p"), N, dist_of(p), E};
  } else if (m == "outlier") {
    spec = model::OutlierCounterexample{N, dist_of(p), p.real("theta")};
  } else if (m == "kernel") {
    spec = model::KernelCounterexample{N, dist_of(p)};
  } else {
    throw UsageError("unknown model '" + m + "'");
  }
  spec.validate();
  return spec;
}

ReferenceMeasure measure_of(const json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "semicircle") return ReferenceMeasure::semicircle(j.value("sigma", 1.0), j.value("center", 0.0));
  if (kind == "marchenko_pastur") return ReferenceMeasure::marchenko_pastur(j.at("gamma").get<double>());
  if (kind == "atoms") return smoothed_atoms(j.at("values").get<std::vector<double>>());
  throw UsageError("unknown measure kind '" + kind + "'");
}

// ---- output ----

struct Outcome {
  json result;
  bool passed = true;
  std::map<std::string, std::string> files;  // name -> contents
};

json report_json(const ExperimentReport& r) { return json::parse(r.to_json()); }

Outcome from_report(const ExperimentReport& r) {
  Outcome o;
  o.result = report_json(r);
  o.passed = r.passed;
  o.files["report.csv"] = ExperimentReport::csv_header() + "\n" + r.csv_row() + "\n";
  if (!r.samples.empty()) {
    std::ostringstream s;
    r.write_samples_csv(s);
    o.files["samples.csv"] = s.str();
  }
  return o;
}

json complex_json(std::complex<double> z) { return json{{"re", z.real()}, {"im", z.imag()}}; }

// ---- commands ----

Outcome run_detgrowth(Plan& p) {
  const EnsembleSpec spec = spec_of(p);
  return from_report(estimate_det_growth(spec, p.run_options()));
}

Outcome run_dembo(Plan& p) {
  if (p.count("p") > p.count("n")) throw UsageError("--p must not exceed --n");
  return from_report(dembo_exact_check(p.count("p"), p.count("n"), dist_of(p), p.run_options()));
}

Outcome run_wegner(Plan& p) {
  const EnsembleSpec spec = spec_of(p);
  if (!p.has("delta")) p.params["delta"] = std::pow(static_cast<double>(spec.dimension()), -2.0);
  return from_report(wegner_gap_probability(spec, p.real("delta"), p.real("energy"), p.run_options()));
}

MdeProblem mde_problem_of(const Plan& p, bool& flat) {
  flat = p.flag("flat_goe");
  if (flat) {
    const std::size_t n = p.count("n");
    return MdeProblem::flat(SymMatrix(n), p.real("sigma2"));
  }
  if (!p.spec.is_null()) {
    const EnsembleSpec spec = spec_from_json(p.spec.dump());
    if (const auto* vp = std::get_if<model::VarianceProfile>(&spec.model)) return MdeProblem::profile(vp->A, vp->S);
    throw UsageError("mde needs a variance_profile spec or --flat-goe");
  }
  throw UsageError("mde needs --flat-goe or a variance_profile spec in --config");
}

Outcome run_mde(Plan& p) {
  bool flat = false;
  const MdeProblem problem = mde_problem_of(p, flat);
  const std::complex<double> z{p.real("z_real"), p.real("z_imag")};
  if (!(z.imag() > 0.0)) throw UsageError("--z-imag must be positive");
  const MdeSolution sol = mde_solve(problem, z);
  Outcome o;
  o.result = json{{"z", complex_json(z)},
                  {"m", complex_json(sol.stieltjes())},
                  {"residual", sol.residual},
                  {"iterations", sol.iterations}};
  if (flat) {
    const auto oracle = ReferenceMeasure::semicircle(std::sqrt(p.real("sigma2"))).stieltjes(z);
    const double err = std::abs(sol.stieltjes() - oracle);
    o.result["oracle"] = complex_json(oracle);
    o.result["error"] = err;
    o.result["tolerance"] = p.real("tolerance");
    o.passed = err <= p.real("tolerance");
  }
  if (p.flag("density")) {
    DensityOptions d;
    d.points = p.count("points");
    d.eta0 = p.real("eta0");
    d.threads = p.threads;
    const DensityResult dr = mde_density(problem, d);
    std::ostringstream s;
    dr.write_csv(s);
    o.files["density.csv"] = s.str();
    o.result["density"] = json{{"points", d.points},
                               {"left_edge", dr.measure.left_edge()},
                               {"right_edge", dr.measure.right_edge()},
                               {"renormalization", dr.renormalization},
                               {"max_residual", dr.max_residual}};
  }
  return o;
}

Outcome run_freeconv(Plan& p) {
  const bool custom = p.extra.contains("a") || p.extra.contains("b");
  const ReferenceMeasure a = p.extra.contains("a") ? measure_of(p.extra["a"])
                                                   : ReferenceMeasure::semicircle(p.real("a_sigma"));
  const ReferenceMeasure b = p.extra.contains("b") ? measure_of(p.extra["b"])
                                                   : ReferenceMeasure::semicircle(p.real("b_sigma"));
  const std::complex<double> z{p.real("z_real"), p.real("z_imag")};
  if (!(z.imag() > 0.0)) throw UsageError("--z-imag must be positive");
  const SubordinationPoint pt = free_convolution_point(a, b, z);
  Outcome o;
  o.result = json{{"z", complex_json(z)},
                  {"m", complex_json(pt.m)},
                  {"omega_a", complex_json(pt.omega_a)},
                  {"omega_b", complex_json(pt.omega_b)},
                  {"residual", pt.residual},
                  {"iterations", pt.iterations}};
  if (!custom) {
    const double s = std::hypot(p.real("a_sigma"), p.real("b_sigma"));
    const auto oracle = ReferenceMeasure::semicircle(s).stieltjes(z);
    const double err = std::abs(pt.m - oracle);
    o.result["oracle"] = complex_json(oracle);
    o.result["error"] = err;
    o.result["tolerance"] = p.real("tolerance");
    o.passed = err <= p.real("tolerance");
  }
  if (p.flag("density")) {
    DensityOptions d;
    d.points = p.count("points");
    d.eta0 = p.real("eta0");
    d.threads = p.threads;
    const DensityResult dr = free_convolve(a, b, d);
    std::ostringstream s;
    dr.write_csv(s);
    o.files["density.csv"] = s.str();
    o.result["density"] = json{{"points", d.points},
                               {"left_edge", dr.measure.left_edge()},
                               {"right_edge", dr.measure.right_edge()},
                               {"max_residual", dr.max_residual}};
  }
  return o;
}

Outcome run_variational(Plan& p) {
  VarProblem problem;
  problem.family = MeasureFamily::shifted_semicircle(p.real("sigma"));
  problem.alpha = p.real("alpha");
  if (p.has("u_min") || p.has("u_max")) {
    const double inf = std::numeric_limits<double>::infinity();
    problem.domain.box = {{p.has("u_min") ? p.real("u_min") : -inf, p.has("u_max") ? p.real("u_max") : inf}};
  }
  VarOptions vo;
  vo.grid_points = p.count("grid_points");
  vo.threads = p.threads;
  Outcome o;
  if (p.flag("restricted")) {
    const RestrictedSolution s = solve_restricted(problem, vo);
    json trace = json::array();
    std::ostringstream csv;
    csv.precision(17);
    csv << "eps,u1,value\n";
    for (const auto& t : s.trace) {
      trace.push_back(json{{"eps", t.eps}, {"u", t.u}, {"value", t.value}});
      csv << t.eps << ',' << t.u[0] << ',' << t.value << '\n';
    }
    o.result = json{{"u", s.u}, {"value", s.value}, {"trace", trace}};
    o.files["restricted.csv"] = csv.str();
  } else {
    const VarSolution s = solve_unrestricted(problem, vo);
    o.result = json{{"u", s.u},
                    {"value", s.value},
                    {"search_radius", s.search_radius},
                    {"growth_constant", s.growth_constant},
                    {"evaluations", s.evaluations}};
  }
  const MembershipResult mem = good_set_membership(problem, o.result["u"].get<std::vector<double>>(), p.real("eps"));
  o.result["membership"] = std::string(to_string(mem.cls));
  const std::size_t n = p.count("trace_points");
  if (n >= 2) {
    std::vector<std::vector<double>> pts;
    for (std::size_t k = 0; k < n; ++k)
      pts.push_back({p.real("trace_min") +
                     (p.real("trace_max") - p.real("trace_min")) * static_cast<double>(k) / static_cast<double>(n - 1)});
    std::ostringstream s;
    write_trace_csv(s, problem, pts, p.real("eps"));
    o.files["trace.csv"] = s.str();
  }
  return o;
}

Outcome run_laplace(Plan& p) {
  VarProblem problem;
  problem.family = MeasureFamily::shifted_semicircle();
  problem.alpha = p.real("alpha");
  LaplaceOptions lo;
  lo.N = p.count("n");
  lo.restricted = p.flag("restricted");
  lo.run = p.run_options();
  const std::size_t m = p.count("u_points");
  if (m < 3 || !(p.real("u_max") > p.real("u_min"))) throw UsageError("u grid needs u_min < u_max and 3+ points");
  for (std::size_t k = 0; k < m; ++k)
    lo.u_grid.push_back(p.real("u_min") +
                        (p.real("u_max") - p.real("u_min")) * static_cast<double>(k) / static_cast<double>(m - 1));
  const std::size_t N = lo.N;
  auto builder = [N](double u) -> EnsembleSpec { return model::Wigner{N, EntryDistribution::gaussian(), -u}; };
  return from_report(laplace_crosscheck(problem, builder, lo));
}

Outcome run_products(Plan& p) {
  return from_report(product_factoring(p.real("rho"), p.count("copies"), p.count("n"), p.run_options()));
}

Outcome run_moments(Plan& p) {
  return from_report(moment_transition(p.real("p_exp"), dist_of(p), p.count("n"), p.run_options()));
}

Outcome run_decomp(Plan& p) {
  const std::string check = p.text("check");
  if (check == "truncation") {
    const EnsembleSpec spec = spec_of(p);
    return from_report(truncation_stability_check(spec, p.real("kappa"), p.run_options()));
  }
  if (check != "convex") throw UsageError("--check must be convex or truncation");
  const double eta = p.real("eta"), K = p.real("k_cap"), E = p.real("energy"), x_max = p.real("x_max");
  const std::size_t n = p.count("points");
  if (n < 3) throw UsageError("--points must be at least 3");
  const Convex5Setup setup = convex5_setup(E, eta, K);
  std::vector<double> xs(n);
  for (std::size_t k = 0; k < n; ++k) xs[k] = -x_max + 2.0 * x_max * static_cast<double>(k) / static_cast<double>(n - 1);
  double err3 = 0.0, err5 = 0.0, curv3 = 0.0, curv5 = 0.0;
  std::vector<std::array<double, 3>> c3(n);
  std::vector<std::array<double, 5>> c5(n);
  std::ostringstream csv;
  csv.precision(17);
  csv << "x,piece1,piece2,piece3,piece4,piece5,sum,target\n";
  for (std::size_t k = 0; k < n; ++k) {
    const Convex3 t = convex3_pieces(xs[k], eta, K);
    c3[k] = {t.log1, t.log2, t.log3};
    const double scale3 = 1.0 + std::abs(t.log1) + std::abs(t.log2) + std::abs(t.log3);
    err3 = std::max(err3, std::abs(t.log1 + t.log2 + t.log3 - log_eta_K(xs[k], eta, K)) / scale3);
    c5[k] = convex5_pieces(xs[k], setup);
    double s = 0.0, scale5 = 1.0;
    for (double v : c5[k]) {
      s += v;
      scale5 += std::abs(v);
    }
    const double target = log_eta_K(xs[k] * xs[k] - E, eta, K);
    err5 = std::max(err5, std::abs(s - target) / scale5);
    csv << xs[k];
    for (double v : c5[k]) csv << ',' << v;
    csv << ',' << s << ',' << target << '\n';
  }
  // Worst violation of the declared curvature signs, relative to the piece scale.
  // Grid rounding in x moves a piece by up to ulp(x_max) times its slope.
  const double slope3 = x_max / (2.0 * eta), slope5 = x_max * setup.lipschitz;
  for (std::size_t k = 1; k + 1 < n; ++k) {
    const int sign3[3] = {1, -1, -1};
    for (int i = 0; i < 3; ++i) {
      const double d2 = c3[k - 1][i] - 2.0 * c3[k][i] + c3[k + 1][i];
      const double scale = std::max({1.0, slope3, std::abs(c3[k - 1][i]), std::abs(c3[k][i]), std::abs(c3[k + 1][i])});
      curv3 = std::max(curv3, -sign3[i] * d2 / scale);
    }
    for (int i = 0; i < 5; ++i) {
      const double d2 = c5[k - 1][i] - 2.0 * c5[k][i] + c5[k + 1][i];
      const double scale = std::max({1.0, slope5, std::abs(c5[k - 1][i]), std::abs(c5[k][i]), std::abs(c5[k + 1][i])});
      curv5 = std::max(curv5, -setup.curvature[i] * d2 / scale);
    }
  }
  Outcome o;
  // Relative to piece magnitudes, which reach 1/eta^2.
  const double tol = 1e-12;
  o.result = json{{"convex3_sum_error", err3},
                  {"convex5_sum_error", err5},
                  {"convex3_curvature_violation", curv3},
                  {"convex5_curvature_violation", curv5},
                  {"five_pieces", setup.five},
                  {"lipschitz_bound", setup.lipschitz},
                  {"tolerance", tol}};
  o.passed = err3 <= tol && err5 <= tol && curv3 <= tol && curv5 <= tol;
  o.files["decomp.csv"] = csv.str();
  return o;
}

Outcome run_counterexample(Plan& p) {
  const std::string which = p.text("which");
  if (which != "outlier" && which != "kernel") throw UsageError("--which must be outlier or kernel");
  return from_report(counterexample_runs(which == "outlier" ? Counterexample::outlier : Counterexample::kernel,
                                         p.count("n"), p.run_options(), p.real("theta")));
}

const std::map<std::string, std::function<Outcome(Plan&)>>& dispatch() {
  static const std::map<std::string, std::function<Outcome(Plan&)>> table = {
      {"detgrowth", run_detgrowth}, {"dembo", run_dembo},         {"wegner", run_wegner},
      {"mde", run_mde},             {"freeconv", run_freeconv},   {"variational", run_variational},
      {"laplace", run_laplace},     {"products", run_products},   {"moments", run_moments},
      {"decomp-test", run_decomp},  {"counterexample", run_counterexample},
  };
  return table;
}

json load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot read config '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw UsageError("config '" + path + "' is not valid JSON: " + e.what());
  }
}

void write_files(const std::string& dir, const std::map<std::string, std::string>& files) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::io_error, "cannot create '" + dir + "': " + ec.message());
  for (const auto& [name, text] : files) {
    std::ofstream f(fs::path(dir) / name, std::ios::binary);
    f << text;
    if (!f) throw Error(ErrorCode::io_error, "cannot write '" + (fs::path(dir) / name).string() + "'");
  }
}

json plan_json(const Plan& p) {
  json j{{"schema_version", kSchemaVersion}, {"command", p.command}, {"seed", p.seed}};
  j["params"] = p.params;
  if (!p.spec.is_null()) j["spec"] = p.spec;
  for (const auto& [k, v] : p.extra.items()) j[k] = v;
  return j;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"detlab: random matrix determinant experiments and reference solvers"};
  app.require_subcommand(1, 1);
  app.fallthrough();

  std::string config_path, out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> threads;
  bool dry_run = false, timing = false;
  app.add_option("--config", config_path, "JSON config; flags override its keys");
  app.add_option("--seed", seed, "master seed (default 20240601)");
  app.add_option("--threads", threads, "worker threads; results do not depend on it")->check(CLI::PositiveNumber);
  app.add_option("--out", out_dir, "directory for summary.json and CSV files");
  app.add_flag("--dry-run", dry_run, "validate and print the resolved plan without running");
  app.add_flag("--timing", timing, "record wall time in the summary");

  const auto cmds = commands();
  std::map<std::string, std::map<std::string, std::string>> raw;
  std::map<std::string, std::map<std::string, bool>> flags;
  for (const auto& c : cmds) {
    CLI::App* sub = app.add_subcommand(c.name, c.help);
    sub->footer(c.columns);
    for (const auto& prm : c.params) {
      std::string help = prm.help;
      if (!prm.fallback.is_null()) help += " [" + (prm.fallback.is_string() ? prm.fallback.get<std::string>() : prm.fallback.dump()) + "]";
      if (prm.type == Type::flag)
        sub->add_flag(flag_name(prm.key), flags[c.name][prm.key], help);
      else
        sub->add_option(flag_name(prm.key), raw[c.name][prm.key], help);
    }
  }

  // A config that names its command stands in for the subcommand argument.
  std::vector<std::string> args(argv + 1, argv + argc);
  const bool has_command = std::any_of(args.begin(), args.end(), [&](const std::string& a) {
    return std::any_of(cmds.begin(), cmds.end(), [&](const Command& c) { return c.name == a; });
  });
  if (!has_command) {
    std::string path;
    for (std::size_t i = 0; i < args.size(); ++i) {
      if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
      if (args[i].rfind("--config=", 0) == 0) path = args[i].substr(9);
    }
    if (!path.empty()) {
      try {
        const json cfg = load_config(path);
        if (cfg.is_object() && cfg.contains("command") && cfg["command"].is_string())
          args.insert(args.begin(), cfg["command"].get<std::string>());
      } catch (const UsageError& e) {
        err << "usage error: " << e.what() << "\n";
        return exit_usage;
      }
    }
  }
  std::reverse(args.begin(), args.end());

  try {
    app.parse(args);
  } catch (const CLI::CallForHelp& e) {
    app.exit(e, out, err);
    return exit_pass;
  } catch (const CLI::CallForAllHelp& e) {
    app.exit(e, out, err);
    return exit_pass;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n";
    return exit_usage;
  }

  Plan plan;
  const Command* cmd = nullptr;
  for (const auto& c : cmds)
    if (app.got_subcommand(c.name)) cmd = &c;
  plan.command = cmd->name;
  CLI::App* sub = app.get_subcommand(cmd->name);

  try {
    json cfg = config_path.empty() ? json::object() : load_config(config_path);
    if (!cfg.is_object()) throw UsageError("config must be a JSON object");
    if (cfg.contains("command") && cfg["command"] != cmd->name)
      throw UsageError("config is for command '" + cfg["command"].get<std::string>() + "'");
    for (const auto& prm : cmd->params) plan.params[prm.key] = prm.fallback;
    for (const auto& [k, v] : cfg.items()) {
      if (k == "command") continue;
      if (k == "seed") {
        if (!v.is_number_unsigned()) throw UsageError("config seed must be a nonnegative integer");
        plan.seed = v.get<std::uint64_t>();
      } else if (k == "threads") {
        if (!v.is_number_unsigned() || v.get<unsigned>() == 0) throw UsageError("config threads must be positive");
        plan.threads = v.get<unsigned>();
      } else if (k == "out") {
        plan.out_dir = v.get<std::string>();
      } else if (k == "spec") {
        plan.spec = v;
      } else if (k == "a" || k == "b") {
        plan.extra[k] = v;
      } else {
        const auto it = std::find_if(cmd->params.begin(), cmd->params.end(), [&](const Param& q) { return q.key == k; });
        if (it == cmd->params.end()) throw UsageError("unknown config key '" + k + "' for " + cmd->name);
        plan.params[k] = coerce(*it, v);
      }
    }
    for (const auto& prm : cmd->params) {
      const std::string flag = flag_name(prm.key);
      if (sub->count(flag) == 0) continue;
      plan.params[prm.key] = prm.type == Type::flag ? json(flags[cmd->name][prm.key])
                                                    : parse_value(prm, raw[cmd->name][prm.key]);
    }
    if (seed) plan.seed = *seed;
    if (threads) plan.threads = *threads;
    if (!out_dir.empty()) plan.out_dir = out_dir;
    plan.dry_run = dry_run;
    plan.timing = timing;
    if (plan.extra.is_null()) plan.extra = json::object();
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return exit_usage;
  }

  const auto started = std::chrono::steady_clock::now();
  try {
    if (plan.dry_run) {
      // Resolve derived values and validate the ensemble without sampling.
      const bool needs_spec = plan.params.contains("model") &&
                              (cmd->name != "decomp-test" || plan.text("check") == "truncation");
      if (needs_spec) {
        const EnsembleSpec spec = spec_of(plan);
        plan.spec = json::parse(spec_to_json(spec));
      }
      json j = plan_json(plan);
      j["dry_run"] = true;
      out << j.dump(2) << "\n";
      return exit_pass;
    }
    Outcome o = dispatch().at(plan.command)(plan);
    json summary = plan_json(plan);
    summary["result"] = o.result;
    summary["passed"] = o.passed;
    if (plan.timing)
      summary["wall_seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    const std::string text = summary.dump(2) + "\n";
    if (!plan.out_dir.empty()) {
      o.files["summary.json"] = text;
      write_files(plan.out_dir, o.files);
    }
    out << text;
    return o.passed ? exit_pass : exit_fail;
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return exit_usage;
  } catch (const Error& e) {
    json rec{{"schema_version", kSchemaVersion},
             {"command", plan.command},
             {"error", json{{"code", std::string(to_string(e.code()))}, {"message", e.what()}}}};
    const std::string text = rec.dump(2) + "\n";
    out << text;
    if (!plan.out_dir.empty() && e.code() != ErrorCode::io_error) {
      try {
        write_files(plan.out_dir, {{"error.json", text}});
      } catch (const Error&) {
      }
    }
    return exit_numerical;
  } catch (const std::exception& e) {
    json rec{{"schema_version", kSchemaVersion},
             {"command", plan.command},
             {"error", json{{"code", "internal"}, {"message", e.what()}}}};
    out << rec.dump(2) << "\n";
    return exit_numerical;
  }
}

}  // namespace detlab::cli
