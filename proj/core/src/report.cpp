#include <cmath>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "json.hpp"

#include "detlab/error.hpp"
#include "detlab/experiments.hpp"

namespace detlab {

namespace {

nlohmann::ordered_json number(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) return "nan";
  return v > 0 ? "inf" : "-inf";
}

std::string format(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

}  // namespace

double ExperimentReport::value(const std::string& key) const {
  const auto it = values.find(key);
  if (it == values.end()) throw Error(ErrorCode::invalid_argument, "report has no value '" + key + "'");
  return it->second;
}

std::string ExperimentReport::to_json() const {
  nlohmann::ordered_json j;
  j["experiment"] = experiment;
  j["spec_hash"] = spec_hash;
  j["seed"] = seed;
  j["n_dimension"] = n_dimension;
  j["n_samples"] = n_samples;
  j["estimate"] = number(estimate);
  j["stderr"] = number(std_error);
  j["oracle"] = number(oracle);
  j["tolerance"] = number(tolerance);
  j["passed"] = passed;
  j["excluded"] = excluded;
  nlohmann::ordered_json v = nlohmann::ordered_json::object();
  for (const auto& [k, x] : values) v[k] = number(x);
  j["values"] = v;
  nlohmann::ordered_json meta = nlohmann::ordered_json::object();
  for (const auto& [k, x] : notes) meta[k] = x;
  if (!spec.empty() && spec.front() == '{')
    meta["spec"] = nlohmann::ordered_json::parse(spec);
  else
    meta["spec"] = spec;
  if (wall_seconds) meta["wall_seconds"] = *wall_seconds;
  j["metadata"] = meta;
  return j.dump(2);
}

std::string ExperimentReport::csv_header() {
  return "experiment,spec_hash,N,samples,estimate,stderr,log_mean_exp,log_mean_exp_stderr,oracle,tolerance,passed";
}

std::string ExperimentReport::csv_row() const {
  auto opt = [&](const char* key) {
    const auto it = values.find(key);
    return it == values.end() ? std::string() : format(it->second);
  };
  std::ostringstream os;
  os << experiment << ',' << spec_hash << ',' << n_dimension << ',' << n_samples << ',' << format(estimate) << ','
     << format(std_error) << ',' << opt("log_mean_exp") << ',' << opt("log_mean_exp_std_error") << ','
     << format(oracle) << ',' << format(tolerance) << ',' << (passed ? 1 : 0);
  return os.str();
}

void ExperimentReport::write_samples_csv(std::ostream& out) const {
  for (std::size_t c = 0; c < sample_columns.size(); ++c) out << (c ? "," : "") << sample_columns[c];
  out << '\n';
  for (const auto& row : samples) {
    for (std::size_t c = 0; c < row.size(); ++c) out << (c ? "," : "") << format(row[c]);
    out << '\n';
  }
}

}  // namespace detlab
