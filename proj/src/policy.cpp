#include "revtraj/policy.hpp"

#include <algorithm>
#include <set>

#include "revtraj/error.hpp"
#include "revtraj/text.hpp"

namespace revtraj {

std::vector<ActionProposal> Policy::propose(const PolicyContext& ctx, Rng& rng) {
  if (ctx.n < 1) fail(ErrorCode::invalid_argument, "proposal count must be >= 1");
  std::vector<ActionProposal> out = sample(ctx, ctx.n, rng);
  if (out.size() != static_cast<std::size_t>(ctx.n))
    fail(ErrorCode::policy_unavailable, name() + " returned the wrong number of proposals");
  for (int round = 0; round < kProposalResampleRounds; ++round) {
    std::vector<std::size_t> dups;
    std::set<std::string> seen;
    for (std::size_t i = 0; i < out.size(); ++i)
      if (!seen.insert(out[i].action).second) dups.push_back(i);
    if (dups.empty()) break;
    auto fresh = sample(ctx, static_cast<int>(dups.size()), rng);
    for (std::size_t k = 0; k < dups.size() && k < fresh.size(); ++k) out[dups[k]] = std::move(fresh[k]);
  }
  return out;
}

ScriptedOracle::ScriptedOracle(const TaskPlanner& planner, double epsilon)
    : planner_(planner), epsilon_(epsilon) {
  if (!(epsilon >= 0.0 && epsilon <= 1.0))
    fail(ErrorCode::config_error, "oracle epsilon must lie in [0,1]");
}

std::vector<ActionProposal> ScriptedOracle::sample(const PolicyContext& ctx, int n, Rng& rng) {
  const auto& task = ctx.instruction.task_id;
  const auto expert = planner_.expert_action(task, ctx.history);
  const auto distractors = planner_.distractor_actions(task, ctx.history);
  std::vector<ActionProposal> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const bool deviate = rng.bernoulli(epsilon_);
    if ((deviate || !expert) && !distractors.empty()) {
      const std::string& a = distractors[rng.index(distractors.size())];
      out.push_back({"Maybe I should " + a + ".", a});
    } else if (expert) {
      out.push_back({"The next step toward the goal is to " + *expert + ".", *expert});
    } else {
      out.push_back({std::nullopt, "give up"});
    }
  }
  return out;
}

RandomPolicy::RandomPolicy(const Environment& env) : env_(env) {}

std::vector<ActionProposal> RandomPolicy::sample(const PolicyContext& ctx, int n, Rng& rng) {
  const auto space = env_.action_space(ctx.instruction.task_id);
  if (space.empty())
    fail(ErrorCode::policy_unavailable, "environment '" + env_.name() + "' advertises no actions");
  std::vector<ActionProposal> out;
  for (int i = 0; i < n; ++i) out.push_back({std::nullopt, space[rng.index(space.size())]});
  return out;
}

std::optional<ActionProposal> parse_proposal(std::string_view completion) {
  const std::string lower = text::to_lower(completion);
  const std::size_t act = lower.rfind("action:");
  if (act == std::string::npos) return std::nullopt;
  std::string action = std::string(completion.substr(act + 7));
  if (auto nl = action.find('\n'); nl != std::string::npos) action.resize(nl);
  action = text::trim(action);
  if (action.empty()) return std::nullopt;
  ActionProposal p;
  p.action = std::move(action);
  const std::size_t th = lower.rfind("thought:", act);
  if (th != std::string::npos) {
    std::string thought = text::trim(completion.substr(th + 8, act - th - 8));
    if (!thought.empty()) p.thought = std::move(thought);
  }
  return p;
}

std::string format_assistant_turn(const Step& step) {
  if (step.thought) return "Thought: " + *step.thought + "\nAction: " + step.action;
  return "Action: " + step.action;
}

std::vector<ChatMessage> policy_messages(const PolicyContext& ctx) {
  std::vector<ChatMessage> msgs;
  std::string opening = ctx.instruction.text;
  if (!ctx.initial_observation.empty()) opening += "\n" + ctx.initial_observation;
  msgs.push_back({"user", opening});
  for (const auto& s : ctx.history) {
    msgs.push_back({"assistant", format_assistant_turn(s)});
    msgs.push_back({"user", s.observation});
  }
  return msgs;
}

RemotePolicy::RemotePolicy(RemotePolicyConfig config)
    : config_(std::move(config)), client_(config_.endpoint, ErrorCode::policy_unavailable) {}

std::vector<ActionProposal> RemotePolicy::sample(const PolicyContext& ctx, int n, Rng&) {
  ChatRequest req;
  req.messages = policy_messages(ctx);
  req.n = n;
  req.temperature = ctx.temperature;
  req.stop = config_.stop;
  req.model = config_.model;
  auto texts = client_.complete(req);
  if (texts.size() != static_cast<std::size_t>(n))
    fail(ErrorCode::policy_unavailable, "chat endpoint returned " + std::to_string(texts.size()) +
                                            " choices, expected " + std::to_string(n));

  std::vector<std::optional<ActionProposal>> parsed;
  std::vector<std::size_t> missing;
  for (std::size_t i = 0; i < texts.size(); ++i) {
    parsed.push_back(parse_proposal(texts[i]));
    if (!parsed.back()) missing.push_back(i);
  }
  if (!missing.empty()) {
    req.n = static_cast<int>(missing.size());
    auto retry = client_.complete(req);
    for (std::size_t k = 0; k < missing.size() && k < retry.size(); ++k) {
      if (auto p = parse_proposal(retry[k])) {
        parsed[missing[k]] = std::move(p);
        texts[missing[k]].clear();
      } else {
        texts[missing[k]] = retry[k];
      }
    }
  }
  std::vector<ActionProposal> out;
  for (std::size_t i = 0; i < parsed.size(); ++i) {
    if (parsed[i]) {
      out.push_back(std::move(*parsed[i]));
    } else {
      std::string raw = text::trim(texts[i]);
      std::replace(raw.begin(), raw.end(), '\n', ' ');
      out.push_back({std::nullopt, raw.empty() ? "(no action)" : raw});
    }
  }
  return out;
}

RolloutResult rollout(Policy& policy, Environment& env, const PolicyContext& ctx, EnvState state,
                      std::size_t depth_budget, Rng& rng) {
  PolicyContext local = ctx;
  local.n = 1;
  RolloutResult r;
  std::size_t taken = 0;
  while (!state.done && taken < depth_budget) {
    ActionProposal p = policy.propose(local, rng).front();
    StepOutcome out = env.step(state, p.action);
    Step s{p.thought, p.action, out.result.observation};
    local.history.push_back(s);
    r.steps.push_back(std::move(s));
    state = std::move(out.state);
    ++taken;
  }
  if (!state.done) {
    env.terminate(state);
    r.forced = true;
  }
  r.reward = *state.reward;
  r.final_state = std::move(state);
  return r;
}

}  // namespace revtraj
