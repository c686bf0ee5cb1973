#pragma once

#include <stdexcept>
#include <string>

namespace seedbank {

enum class ErrorCode {
  invalid_measure,
  degenerate_grid,
  dimension_mismatch,
  nonpositive_dt,
  bank_too_small,
  non_integer_mass,
  invalid_state,
  invalid_parameter,
  absorbing_state,
  state_space_too_large,
  flag_mismatch,
  flag_not_in_model,
  zero_variance_both,
  parse_error,
  validation_error,
  usage_error,
};

const char* to_string(ErrorCode code);

// All library failures are reported through this one exception type; the
// code lets callers (and the CLI exit-code mapping) branch without parsing
// messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace seedbank
