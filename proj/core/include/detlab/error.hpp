#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace detlab {

enum class ErrorCode {
  invalid_spec,
  dregular_generation_failure,
  invalid_rho,
  convergence_failure,
  singular_minor,
  eta_too_large,
  divergent_integral,
  no_convergence,
  im_violation,
  empty_good_set,
  unbounded_domain_no_decay,
  grid_misses_maximizer,
  invalid_argument,
  io_error,
};

std::string_view to_string(ErrorCode code);

// All numerical and validation failures in the library surface as this type.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace detlab
