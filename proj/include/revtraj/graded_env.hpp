#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "revtraj/env.hpp"

namespace revtraj {

struct GradedPathTask {
  std::string id;
  std::string goal;
  std::vector<std::string> subgoals;
  std::vector<std::string> distractors;
};

// See resources/graded_suite.txt for the text format.
struct GradedPathSpec {
  int version = 0;
  std::vector<GradedPathTask> tasks;

  const GradedPathTask& task(const std::string& id) const;
  void validate() const;
};

GradedPathSpec parse_graded_spec(std::string_view text);
const GradedPathSpec& bundled_graded_spec();

// Length of the longest prefix of `subgoals` appearing in `actions` as a
// subsequence.
std::size_t subgoal_progress(const std::vector<std::string>& subgoals,
                             std::span<const std::string> actions);

// Ordered-subgoal household tasks with a graded terminal reward k/n, where k
// counts the subgoals completed in order.
class GradedPathEnv final : public Environment, public TaskPlanner {
 public:
  explicit GradedPathEnv(GradedPathSpec spec = bundled_graded_spec(), EnvOptions options = {});

  std::string name() const override { return "graded"; }
  std::vector<std::string> task_ids() const override;
  ResetResult reset(const std::string& task_id) override;
  std::vector<std::string> action_space(const std::string& task_id) const override;
  const TaskPlanner* planner() const override { return this; }

  std::optional<std::string> expert_action(const std::string& task_id,
                                           std::span<const Step> history) const override;
  std::vector<std::string> distractor_actions(const std::string& task_id,
                                              std::span<const Step> history) const override;

  const GradedPathSpec& spec() const noexcept { return spec_; }

 protected:
  StepResult apply(EnvState& state, std::string_view action) override;
  double terminal_reward(const EnvState& state) const override;

 private:
  GradedPathSpec spec_;
};

}  // namespace revtraj
