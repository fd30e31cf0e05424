#include "detlab/error.hpp"

namespace detlab {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_spec: return "invalid-spec";
    case ErrorCode::dregular_generation_failure: return "dregular-generation-failure";
    case ErrorCode::invalid_rho: return "invalid-rho";
    case ErrorCode::convergence_failure: return "convergence-failure";
    case ErrorCode::singular_minor: return "singular-minor";
    case ErrorCode::eta_too_large: return "eta-too-large";
    case ErrorCode::divergent_integral: return "divergent-integral";
    case ErrorCode::no_convergence: return "no-convergence";
    case ErrorCode::im_violation: return "im-violation";
    case ErrorCode::empty_good_set: return "empty-good-set";
    case ErrorCode::unbounded_domain_no_decay: return "unbounded-domain-no-decay";
    case ErrorCode::grid_misses_maximizer: return "grid-misses-maximizer";
    case ErrorCode::invalid_argument: return "invalid-argument";
    case ErrorCode::io_error: return "io-error";
  }
  return "unknown";
}

}  // namespace detlab
