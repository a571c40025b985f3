#pragma once

#include <stdexcept>
#include <string>

namespace revtraj {

enum class ErrorCode {
  invalid_argument,
  invalid_pair,
  not_terminal,
  transition_before_divergence,
  transition_out_of_range,
  unknown_task,
  already_terminal,
  invalid_snapshot,
  session_expired,
  env_unavailable,
  policy_unavailable,
  judge_unavailable,
  search_exhausted,
  render_error,
  empty_pool,
  io_error,
  parse_error,
  config_error,
  missing_prior_iteration,
  refuses_overwrite,
  non_deterministic_env,
  cancelled,
};

const char* to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }
  // Message without the leading error name.
  const std::string& detail() const noexcept { return detail_; }

  // Transport-level failures that a caller may retry.
  bool retryable() const noexcept;

 private:
  ErrorCode code_;
  std::string detail_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& message);

}  // namespace revtraj
