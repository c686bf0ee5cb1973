#include "seedbank/error.hpp"

namespace seedbank {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_measure: return "invalid-measure";
    case ErrorCode::degenerate_grid: return "degenerate-grid";
    case ErrorCode::dimension_mismatch: return "dimension-mismatch";
    case ErrorCode::nonpositive_dt: return "nonpositive-dt";
    case ErrorCode::bank_too_small: return "bank-too-small";
    case ErrorCode::non_integer_mass: return "non-integer-mass";
    case ErrorCode::invalid_state: return "invalid-state";
    case ErrorCode::invalid_parameter: return "invalid-parameter";
    case ErrorCode::absorbing_state: return "absorbing-state";
    case ErrorCode::state_space_too_large: return "state-space-too-large";
    case ErrorCode::flag_mismatch: return "flag-mismatch";
    case ErrorCode::flag_not_in_model: return "flag-not-in-model";
    case ErrorCode::zero_variance_both: return "zero-variance-both";
    case ErrorCode::parse_error: return "parse-error";
    case ErrorCode::validation_error: return "validation-error";
    case ErrorCode::usage_error: return "usage-error";
  }
  return "error";
}

}  // namespace seedbank
