#include <string>

#include "detlab/ensembles.hpp"
#include "detlab/error.hpp"
#include "json.hpp"

namespace detlab {

namespace {

using nlohmann::json;

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

json dist_json(const EntryDistribution& d) {
  json j{{"kind", std::string(to_string(d.kind))}, {"standardized", d.standardized}};
  switch (d.kind) {
    case EntryDistribution::Kind::bernoulli: j["p"] = d.param; break;
    case EntryDistribution::Kind::pareto: j["tail_index"] = d.param; break;
    case EntryDistribution::Kind::student_t: j["dof"] = d.param; break;
    default: break;
  }
  return j;
}

EntryDistribution dist_from(const json& j) {
  EntryDistribution d;
  if (j.is_string()) {
    d.kind = entry_kind_from_string(j.get<std::string>());
    return d;
  }
  d.kind = entry_kind_from_string(j.at("kind").get<std::string>());
  d.standardized = j.value("standardized", true);
  if (j.contains("p")) d.param = j.at("p").get<double>();
  if (j.contains("tail_index")) d.param = j.at("tail_index").get<double>();
  if (j.contains("dof")) d.param = j.at("dof").get<double>();
  return d;
}

json matrix_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd matrix_from(const json& j) {
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = rows == 0 ? Eigen::Index{0} : static_cast<Eigen::Index>(j.at(0).size());
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const auto& row = j.at(static_cast<std::size_t>(i));
    if (static_cast<Eigen::Index>(row.size()) != cols)
      throw Error(ErrorCode::invalid_spec, "ragged matrix in config");
    for (Eigen::Index c = 0; c < cols; ++c) m(i, c) = row.at(static_cast<std::size_t>(c)).get<double>();
  }
  return m;
}

json spec_json(const EnsembleSpec& spec) {
  json j = std::visit(
      overloaded{
          [](const model::Wigner& m) {
            return json{{"N", m.N}, {"dist", dist_json(m.dist)}, {"E", m.E}};
          },
          [](const model::ErdosRenyi& m) {
            return json{{"N", m.N}, {"p_N", m.p_N}, {"E", m.E}};
          },
          [](const model::DRegular& m) { return json{{"N", m.N}, {"d", m.d}, {"E", m.E}}; },
          [](const model::Band& m) {
            return json{{"N", m.N}, {"W", m.W}, {"dist", dist_json(m.dist)}, {"E", m.E}};
          },
          [](const model::Covariance& m) {
            return json{{"p", m.p}, {"N", m.N}, {"dist", dist_json(m.dist)}, {"E", m.E}};
          },
          [](const model::VarianceProfile& m) {
            return json{{"A", matrix_json(m.A.to_eigen())}, {"S", matrix_json(m.S)}};
          },
          [](const model::BlockGaussian& m) {
            json a = json::array();
            for (const auto& x : m.a) a.push_back(matrix_json(x));
            json s = json::array();
            for (const auto& x : m.s) s.push_back(matrix_json(x));
            return json{{"K", m.K}, {"N", m.N}, {"a", a}, {"s", s},
                        {"goe_diagonal", m.goe_diagonal}};
          },
          [](const model::FreeAddition& m) {
            return json{{"A_diag", m.A_diag}, {"B_diag", m.B_diag}, {"E", m.E}};
          },
          [](const model::LongRangeShift& m) {
            return json{{"base", spec_json(*m.base)}, {"sigma_u", m.sigma_u}};
          },
          [](const model::OutlierCounterexample& m) {
            return json{{"N", m.N}, {"dist", dist_json(m.dist)}, {"theta", m.theta}};
          },
          [](const model::KernelCounterexample& m) {
            return json{{"N", m.N}, {"dist", dist_json(m.dist)}};
          },
      },
      spec.model);
  j["model"] = std::string(spec.name());
  return j;
}

EntryDistribution dist_or_gaussian(const json& j) {
  return j.contains("dist") ? dist_from(j.at("dist")) : EntryDistribution::gaussian();
}

EnsembleSpec spec_from(const json& j) {
  const std::string name = j.at("model").get<std::string>();
  const double E = j.value("E", 0.0);
  if (name == "wigner")
    return model::Wigner{j.at("N").get<std::size_t>(), dist_or_gaussian(j), E};
  if (name == "erdos_renyi")
    return model::ErdosRenyi{j.at("N").get<std::size_t>(), j.at("p_N").get<double>(), E};
  if (name == "d_regular")
    return model::DRegular{j.at("N").get<std::size_t>(), j.at("d").get<std::size_t>(), E};
  if (name == "band")
    return model::Band{j.at("N").get<std::size_t>(), j.at("W").get<std::size_t>(),
                       dist_or_gaussian(j), E};
  if (name == "covariance")
    return model::Covariance{j.at("p").get<std::size_t>(), j.at("N").get<std::size_t>(),
                             dist_or_gaussian(j), E};
  if (name == "variance_profile") {
    const Eigen::MatrixXd a = matrix_from(j.at("A"));
    if (a != a.transpose()) throw Error(ErrorCode::invalid_spec, "A must be symmetric");
    return model::VarianceProfile{SymMatrix::from_upper(a), matrix_from(j.at("S"))};
  }
  if (name == "block_gaussian") {
    model::BlockGaussian m;
    m.K = j.at("K").get<std::size_t>();
    m.N = j.at("N").get<std::size_t>();
    for (const auto& x : j.at("a")) m.a.push_back(matrix_from(x));
    for (const auto& x : j.at("s")) m.s.push_back(matrix_from(x));
    m.goe_diagonal = j.value("goe_diagonal", false);
    return m;
  }
  if (name == "free_addition")
    return model::FreeAddition{j.at("A_diag").get<std::vector<double>>(),
                               j.at("B_diag").get<std::vector<double>>(), E};
  if (name == "long_range_shift")
    return model::LongRangeShift{std::make_shared<const EnsembleSpec>(spec_from(j.at("base"))),
                                 j.value("sigma_u", 1.0)};
  if (name == "outlier")
    return model::OutlierCounterexample{j.at("N").get<std::size_t>(), dist_or_gaussian(j),
                                        j.value("theta", 0.125)};
  if (name == "kernel")
    return model::KernelCounterexample{j.at("N").get<std::size_t>(), dist_or_gaussian(j)};
  throw Error(ErrorCode::invalid_spec, "unknown model '" + name + "'");
}

}  // namespace

std::string spec_to_json(const EnsembleSpec& spec) { return spec_json(spec).dump(); }

EnsembleSpec spec_from_json(std::string_view text) {
  try {
    EnsembleSpec spec = spec_from(json::parse(text));
    spec.validate();
    return spec;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::invalid_spec, e.what());
  }
}

std::uint64_t spec_hash(const EnsembleSpec& spec) { return fnv1a64(spec_to_json(spec)); }

}  // namespace detlab
