#include "revtraj/error.hpp"

namespace revtraj {

const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::invalid_argument: return "InvalidArgument";
    case ErrorCode::invalid_pair: return "InvalidPair";
    case ErrorCode::not_terminal: return "NotTerminal";
    case ErrorCode::transition_before_divergence: return "TransitionBeforeDivergence";
    case ErrorCode::transition_out_of_range: return "TransitionOutOfRange";
    case ErrorCode::unknown_task: return "UnknownTask";
    case ErrorCode::already_terminal: return "AlreadyTerminal";
    case ErrorCode::invalid_snapshot: return "InvalidSnapshot";
    case ErrorCode::session_expired: return "SessionExpired";
    case ErrorCode::env_unavailable: return "EnvUnavailable";
    case ErrorCode::policy_unavailable: return "PolicyUnavailable";
    case ErrorCode::judge_unavailable: return "JudgeUnavailable";
    case ErrorCode::search_exhausted: return "SearchExhausted";
    case ErrorCode::render_error: return "RenderError";
    case ErrorCode::empty_pool: return "EmptyPool";
    case ErrorCode::io_error: return "IoError";
    case ErrorCode::parse_error: return "ParseError";
    case ErrorCode::config_error: return "ConfigError";
    case ErrorCode::missing_prior_iteration: return "MissingPriorIteration";
    case ErrorCode::refuses_overwrite: return "RefusesOverwrite";
    case ErrorCode::non_deterministic_env: return "NonDeterministicEnv";
    case ErrorCode::cancelled: return "Cancelled";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code), detail_(message) {}

bool Error::retryable() const noexcept {
  return code_ == ErrorCode::policy_unavailable || code_ == ErrorCode::judge_unavailable ||
         code_ == ErrorCode::env_unavailable;
}

void fail(ErrorCode code, const std::string& message) { throw Error(code, message); }

}  // namespace revtraj
