#include "revtraj/env.hpp"

#include <atomic>

#include "revtraj/error.hpp"

namespace revtraj {

namespace {
std::atomic<std::uint64_t> next_instance_id{1};
}

bool is_invalid_action_observation(std::string_view observation) noexcept {
  return observation.substr(0, kInvalidActionPrefix.size()) == kInvalidActionPrefix;
}

Environment::Environment(EnvOptions options)
    : options_(options), instance_id_(next_instance_id.fetch_add(1)) {
  if (options_.max_rounds == 0) fail(ErrorCode::config_error, "max_rounds must be positive");
}

void Environment::set_max_rounds(std::size_t rounds) {
  if (rounds == 0) fail(ErrorCode::config_error, "max_rounds must be positive");
  options_.max_rounds = rounds;
}

StepOutcome Environment::step(const EnvState& state, std::string_view action) {
  if (state.done)
    fail(ErrorCode::already_terminal, "task '" + state.task_id + "' already finished");
  StepOutcome out{state, {}};
  out.result = apply(out.state, action);
  out.state.actions.emplace_back(action);
  ++out.state.step_count;
  if (out.result.done) {
    if (!out.result.reward) out.result.reward = terminal_reward(out.state);
    out.state.done = true;
    out.state.reward = out.result.reward;
  } else if (out.state.step_count >= options_.max_rounds) {
    out.state.done = true;
    out.state.reward = terminal_reward(out.state);
    out.result.done = true;
    out.result.reward = out.state.reward;
  } else {
    out.result.reward.reset();
  }
  if (out.result.observation.empty()) out.result.observation = "Nothing happens.";
  return out;
}

StepResult Environment::terminate(EnvState& state) const {
  if (!state.done) {
    state.done = true;
    state.reward = terminal_reward(state);
  }
  return StepResult{"", state.reward, true};
}

SnapshotToken Environment::snapshot(const EnvState& state) const {
  return SnapshotToken{instance_id_, state};
}

EnvState Environment::restore(const SnapshotToken& token) const {
  if (token.owner != instance_id_)
    fail(ErrorCode::invalid_snapshot, "snapshot was issued by another environment instance");
  return token.state;
}

Trajectory Environment::replay(const std::string& task_id, std::span<const std::string> actions,
                               bool finalize) {
  ResetResult start = reset(task_id);
  Trajectory t;
  t.instruction = start.instruction;
  t.initial_observation = start.observation;
  EnvState state = std::move(start.state);
  for (const auto& action : actions) {
    if (state.done) break;
    StepOutcome out = step(state, action);
    t.steps.push_back(Step{std::nullopt, action, out.result.observation});
    state = std::move(out.state);
  }
  if (finalize) terminate(state);
  t.terminal = state.done;
  t.reward = state.reward;
  t.kind = state.done ? TrajectoryKind::unknown : TrajectoryKind::initial;
  return t;
}

std::vector<std::string> Environment::action_space(const std::string&) const { return {}; }

}  // namespace revtraj
