#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "revtraj/traj.hpp"

namespace revtraj {

// Every observation for an unrecognized action starts with this prefix.
inline constexpr std::string_view kInvalidActionPrefix = "Invalid action:";

bool is_invalid_action_observation(std::string_view observation) noexcept;

// Value snapshot of an episode. `vars` holds environment-specific counters
// (inventory, subgoal progress); `session` is only used by remote environments.
struct EnvState {
  std::string task_id;
  std::size_t step_count = 0;
  bool done = false;
  std::optional<double> reward;
  std::map<std::string, long long> vars;
  std::vector<std::string> actions;
  std::string session;

  bool operator==(const EnvState&) const = default;
};

struct StepResult {
  std::string observation;
  std::optional<double> reward;
  bool done = false;
};

struct ResetResult {
  Instruction instruction;
  EnvState state;
  std::string observation;
};

struct StepOutcome {
  EnvState state;
  StepResult result;
};

// Restorable only by the environment instance that issued it.
struct SnapshotToken {
  std::uint64_t owner = 0;
  EnvState state;
};

struct EnvOptions {
  std::size_t max_rounds = 100;
};

// Expert knowledge for bundled environments: the next action of an optimal
// plan from the state reached by `history`, and the off-plan actions a noisy
// scripted agent may pick instead.
class TaskPlanner {
 public:
  virtual ~TaskPlanner() = default;
  virtual std::optional<std::string> expert_action(const std::string& task_id,
                                                   std::span<const Step> history) const = 0;
  virtual std::vector<std::string> distractor_actions(const std::string& task_id,
                                                      std::span<const Step> history) const = 0;
};

class Environment {
 public:
  explicit Environment(EnvOptions options = {});
  virtual ~Environment() = default;

  Environment(const Environment&) = delete;
  Environment& operator=(const Environment&) = delete;

  virtual std::string name() const = 0;
  virtual std::vector<std::string> task_ids() const = 0;

  // Fresh episode. Throws UnknownTask.
  virtual ResetResult reset(const std::string& task_id) = 0;

  // Applies one action to a copy of `state`. Invalid actions consume a round;
  // reaching max_rounds ends the episode under the terminal reward rule.
  // Throws AlreadyTerminal when `state` is done.
  StepOutcome step(const EnvState& state, std::string_view action);

  // Forced stop (depth budget exhausted): marks the state done and assigns
  // the environment's terminal reward. No-op on a done state.
  StepResult terminate(EnvState& state) const;

  SnapshotToken snapshot(const EnvState& state) const;
  EnvState restore(const SnapshotToken& token) const;

  // Forces each action in order from a fresh reset, stopping early when the
  // episode ends. With `finalize`, a still-running episode is terminated.
  Trajectory replay(const std::string& task_id, std::span<const std::string> actions,
                    bool finalize = false);

  // Action templates a random agent may choose from; empty when unknown.
  virtual std::vector<std::string> action_space(const std::string& task_id) const;

  virtual const TaskPlanner* planner() const { return nullptr; }

  std::size_t max_rounds() const noexcept { return options_.max_rounds; }
  void set_max_rounds(std::size_t rounds);

  std::uint64_t instance_id() const noexcept { return instance_id_; }

 protected:
  // Mutates `state` (which does not yet include `action`) and describes the
  // transition. Implementations set done/reward in the result when the
  // episode ends.
  virtual StepResult apply(EnvState& state, std::string_view action) = 0;
  virtual double terminal_reward(const EnvState& state) const = 0;

 private:
  EnvOptions options_;
  std::uint64_t instance_id_;
};

// Temporarily overrides an environment's round limit.
class MaxRoundsGuard {
 public:
  MaxRoundsGuard(Environment& env, std::size_t rounds) : env_(env), saved_(env.max_rounds()) {
    env_.set_max_rounds(rounds);
  }
  ~MaxRoundsGuard() { env_.set_max_rounds(saved_); }
  MaxRoundsGuard(const MaxRoundsGuard&) = delete;
  MaxRoundsGuard& operator=(const MaxRoundsGuard&) = delete;

 private:
  Environment& env_;
  std::size_t saved_;
};

}  // namespace revtraj
