#pragma once

#include <stdexcept>
#include <string>

namespace motionsynth {

// Stable failure categories used across the library. CLI maps any Error to
// exit code 1; tests match on the code rather than the message text.
enum class Err {
  parse,
  ragged_rows,
  non_finite,
  empty,
  not_rotation,
  bad_order,
  bad_spacing,
  dimension_mismatch,
  stale_cache,
  bad_config,
  non_deterministic_closure,
  negative_lambda,
  bad_schedule,
  data_too_short,
  diverged_loss,
  version_mismatch,
  corrupt_file,
  slice_out_of_range,
  frame_rate_mismatch,
  degenerate_eval_set,
  too_short,
  window_out_of_range,
  bad_spec,
  noise_not_zero,
  io_error,
};

class Error : public std::runtime_error {
 public:
  Error(Err code, const std::string& what) : std::runtime_error(what), code_(code) {}
  Err code() const noexcept { return code_; }

 private:
  Err code_;
};

[[noreturn]] inline void fail(Err code, const std::string& what) { throw Error(code, what); }

inline void require(bool cond, Err code, const std::string& what) {
  if (!cond) fail(code, what);
}

}  // namespace motionsynth
