#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "revtraj/env.hpp"
#include "revtraj/http.hpp"
#include "revtraj/rng.hpp"
#include "revtraj/traj.hpp"

namespace revtraj {

struct PolicyContext {
  Instruction instruction;
  std::string initial_observation;
  std::vector<Step> history;
  double temperature = 1.0;
  int n = 1;
};

struct ActionProposal {
  std::optional<std::string> thought;
  std::string action;

  bool operator==(const ActionProposal&) const = default;
};

// The actor. propose() returns exactly ctx.n proposals; duplicates (by action
// string) are re-sampled up to three times and any that remain are kept.
class Policy {
 public:
  virtual ~Policy() = default;

  virtual std::string name() const = 0;

  std::vector<ActionProposal> propose(const PolicyContext& ctx, Rng& rng);

 protected:
  // Draws `n` independent proposals.
  virtual std::vector<ActionProposal> sample(const PolicyContext& ctx, int n, Rng& rng) = 0;
};

inline constexpr int kProposalResampleRounds = 3;

// Follows the environment's expert plan and, with probability epsilon per
// proposal, substitutes a uniformly drawn distractor action instead.
class ScriptedOracle final : public Policy {
 public:
  ScriptedOracle(const TaskPlanner& planner, double epsilon);

  std::string name() const override { return "oracle"; }
  double epsilon() const noexcept { return epsilon_; }

 protected:
  std::vector<ActionProposal> sample(const PolicyContext& ctx, int n, Rng& rng) override;

 private:
  const TaskPlanner& planner_;
  double epsilon_;
};

// Uniform over the environment's advertised action templates.
class RandomPolicy final : public Policy {
 public:
  explicit RandomPolicy(const Environment& env);

  std::string name() const override { return "random"; }

 protected:
  std::vector<ActionProposal> sample(const PolicyContext& ctx, int n, Rng& rng) override;

 private:
  const Environment& env_;
};

// Splits a "Thought: ... Action: ..." completion. Returns nullopt when no
// non-empty action is present.
std::optional<ActionProposal> parse_proposal(std::string_view completion);

std::string format_assistant_turn(const Step& step);

// Conversation sent to a chat model: instruction (+ first observation) as the
// opening user turn, then alternating assistant actions and user observations.
std::vector<ChatMessage> policy_messages(const PolicyContext& ctx);

struct RemotePolicyConfig {
  HttpEndpoint endpoint;
  std::string model;
  std::vector<std::string> stop;
};

// LLM actor behind the chat HTTP protocol. Unparseable choices are requested
// once more; still-unparseable ones are kept as raw text so the environment
// answers them with its invalid-action observation.
class RemotePolicy final : public Policy {
 public:
  explicit RemotePolicy(RemotePolicyConfig config);

  std::string name() const override { return "remote"; }

 protected:
  std::vector<ActionProposal> sample(const PolicyContext& ctx, int n, Rng& rng) override;

 private:
  RemotePolicyConfig config_;
  ChatClient client_;
};

struct RolloutResult {
  std::vector<Step> steps;
  double reward = 0.0;
  EnvState final_state;
  // True when the depth budget, not the environment, ended the episode.
  bool forced = false;
};

// Plays propose(n = 1) from `state` until the episode ends or `depth_budget`
// actions have been taken; a budget stop takes the environment's terminal
// ruling. `ctx.history` must describe the path that led to `state`.
RolloutResult rollout(Policy& policy, Environment& env, const PolicyContext& ctx, EnvState state,
                      std::size_t depth_budget, Rng& rng);

}  // namespace revtraj
