#pragma once

#include <map>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "revtraj/env.hpp"

namespace revtraj {

using Inventory = std::map<std::string, long long>;

struct CraftRecipe {
  std::string output;
  long long output_count = 1;
  std::vector<std::pair<std::string, long long>> inputs;
};

struct CraftTask {
  std::string id;
  std::string target;
  long long count = 1;
};

// A recipe book plus the tasks defined over it. See resources/craft_suite.txt
// for the text format.
struct CraftSpec {
  int version = 0;
  std::set<std::string> gatherable;
  std::map<std::string, CraftRecipe> recipes;
  std::vector<CraftTask> tasks;

  std::set<std::string> items() const;
  const CraftTask& task(const std::string& id) const;
  // Items needed (transitively) to make `target`, including the target.
  std::set<std::string> dependency_tree(const std::string& target) const;

  // Recipe graph acyclic, every task target reachable from gatherable items.
  void validate() const;
};

CraftSpec parse_craft_spec(std::string_view text);
const CraftSpec& bundled_craft_spec();

// Shortest plan from `inventory`, depth-first over the recipe inputs in listed
// order. Ingredients already secured are reserved so later sub-plans cannot
// consume them. Empty when the target is already held.
std::vector<std::string> craft_plan(const CraftSpec& spec, const std::string& target,
                                    long long count, const Inventory& inventory);

// Minecraft-style crafting: "get <n> <item>", "craft <n> <item>",
// "inventory", "give up". Reward 1 once the target is held, 0 otherwise.
class CraftEnv final : public Environment, public TaskPlanner {
 public:
  explicit CraftEnv(CraftSpec spec = bundled_craft_spec(), EnvOptions options = {});

  std::string name() const override { return "craft"; }
  std::vector<std::string> task_ids() const override;
  ResetResult reset(const std::string& task_id) override;
  std::vector<std::string> action_space(const std::string& task_id) const override;
  const TaskPlanner* planner() const override { return this; }

  std::optional<std::string> expert_action(const std::string& task_id,
                                           std::span<const Step> history) const override;
  std::vector<std::string> distractor_actions(const std::string& task_id,
                                              std::span<const Step> history) const override;

  const CraftSpec& spec() const noexcept { return spec_; }

 protected:
  StepResult apply(EnvState& state, std::string_view action) override;
  double terminal_reward(const EnvState& state) const override;

 private:
  EnvState state_after(const std::string& task_id, std::span<const Step> history) const;

  CraftSpec spec_;
};

}  // namespace revtraj
