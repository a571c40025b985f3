#include "revtraj/config.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "revtraj/craft_env.hpp"
#include "revtraj/error.hpp"
#include "revtraj/graded_env.hpp"

namespace revtraj {

namespace {

void check_keys(const Json& j, const std::set<std::string>& allowed, const std::string& section) {
  if (!j.is_object()) fail(ErrorCode::config_error, "'" + section + "' must be an object");
  for (const auto& [key, value] : j.items()) {
    (void)value;
    if (!allowed.count(key)) {
      const std::string where = section.empty() ? key : section + "." + key;
      fail(ErrorCode::config_error, "unknown config key '" + where + "'");
    }
  }
}

template <class T>
void read(const Json& j, const char* key, T& out, const std::string& section) {
  auto it = j.find(key);
  if (it == j.end()) return;
  try {
    out = it->template get<T>();
  } catch (const Json::exception&) {
    const std::string where = section.empty() ? key : section + "." + key;
    fail(ErrorCode::config_error, "config key '" + where + "' has the wrong type");
  }
}

HttpEndpoint endpoint(const std::string& url, long timeout_ms, int retries) {
  HttpEndpoint e;
  e.url = url;
  e.timeout_ms = timeout_ms;
  e.retries = retries;
  return e;
}

bool bundled(const std::string& name) { return name == "craft" || name == "graded"; }

struct KeyDoc {
  const char* key;
  const char* fallback;
  const char* about;
};

constexpr KeyDoc kKeys[] = {
    {"seed", "0", "base seed for every generator"},
    {"output", "\"runs\"", "root directory holding iter_<n>/"},
    {"workers", "0", "parallel tasks; 0 uses the host's hardware concurrency"},
    {"carry_forward", "false", "add the previous iteration's goods that pass the current alpha"},
    {"env.suite", "[\"craft\",\"graded\"]", "environments to collect on (bundled or remote names)"},
    {"env.max_rounds", "100", "round limit per episode during collection"},
    {"env.tasks_per_env", "0", "first N tasks of each environment; 0 means all"},
    {"env.remote", "[]", "remote servers: [{name, base_url, tasks, timeout_ms, retries}]"},
    {"policy.kind", "\"oracle\"", "oracle | random | remote"},
    {"policy.epsilon", "0.3", "oracle probability of a distractor action per proposal"},
    {"policy.endpoint", "\"\"", "chat endpoint URL for the remote policy"},
    {"policy.model", "\"\"", "model name sent to the remote policy"},
    {"policy.timeout_ms", "30000", "remote policy request timeout"},
    {"policy.retries", "2", "remote policy retries on transport errors"},
    {"judge.kind", "\"oracle\"", "oracle | remote | all_good"},
    {"judge.endpoint", "\"\"", "chat endpoint URL for the remote judge"},
    {"judge.model", "\"\"", "model name sent to the remote judge"},
    {"judge.votes", "1", "completions per judged step; majority wins, ties are Uncertain"},
    {"judge.timeout_ms", "30000", "remote judge request timeout"},
    {"judge.retries", "2", "remote judge retries on transport errors"},
    {"mcts.k_rollouts", "8", "rollouts per simulated node"},
    {"mcts.max_depth", "20", "tree depth limit; rollouts stop there"},
    {"mcts.c_uct", "0.25", "UCT exploration weight"},
    {"mcts.expand_width", "4", "candidate actions per expansion"},
    {"mcts.simulations", "100", "rollout budget per task"},
    {"mcts.expand_temperature", "1.0", "sampling temperature for expansion"},
    {"mcts.rollout_temperature", "1.0", "sampling temperature for rollouts"},
    {"plan.beta", "0.2", "rewards below beta are bad"},
    {"plan.alphas", "[0.5,0.7,1.0]", "good threshold per iteration; 1.0 keeps reward-1 only"},
    {"plan.epochs", "[3,1,1]", "advisory training epochs per iteration"},
    {"revision.mode", "\"model_guided\"", "model_guided | direct"},
    {"revision.max_pairs_per_task", "32", "pair cap per task"},
    {"revision.reuse_bad", "false", "pair a bad trajectory with every acceptable good"},
    {"mix.eta", "0.2", "mixing weight"},
    {"mix.direction", "\"agent\"", "agent: eta is the agent share; general: eta is the general share"},
    {"mix.general_path", "\"\"", "chat-format JSONL of general samples"},
    {"eval.max_rounds", "100", "round limit for test evaluation"},
    {"eval.revision_max_rounds", "50", "rounds allowed after the cut in revision evaluation"},
};

}  // namespace

void IterationPlan::validate() const {
  if (alphas.empty()) fail(ErrorCode::config_error, "plan.alphas must not be empty");
  if (epochs.size() != alphas.size())
    fail(ErrorCode::config_error, "plan.epochs must have one entry per alpha");
  for (std::size_t i = 0; i < alphas.size(); ++i) {
    FilterConfig{beta, alphas[i]}.validate();
    if (i && alphas[i] < alphas[i - 1])
      fail(ErrorCode::config_error, "plan.alphas must be non-decreasing");
    if (epochs[i] < 1) fail(ErrorCode::config_error, "plan.epochs entries must be >= 1");
  }
}

FilterConfig IterationPlan::filter(int iteration) const {
  if (iteration < 1 || iteration > iterations())
    fail(ErrorCode::config_error, "iteration " + std::to_string(iteration) +
                                      " is outside the plan (1.." + std::to_string(iterations()) + ")");
  return FilterConfig{beta, alphas[static_cast<std::size_t>(iteration - 1)]};
}

int IterationPlan::epochs_hint(int iteration) const {
  filter(iteration);
  return epochs[static_cast<std::size_t>(iteration - 1)];
}

void RunConfig::validate() const {
  if (workers < 0) fail(ErrorCode::config_error, "workers must be >= 0");
  if (output.empty()) fail(ErrorCode::config_error, "output must not be empty");
  if (env.suite.empty()) fail(ErrorCode::config_error, "env.suite must not be empty");
  if (env.max_rounds == 0) fail(ErrorCode::config_error, "env.max_rounds must be >= 1");
  std::set<std::string> names;
  for (const auto& r : env.remote) {
    if (r.name.empty() || bundled(r.name))
      fail(ErrorCode::config_error, "remote environment names must be non-empty and not bundled names");
    if (r.base_url.empty()) fail(ErrorCode::config_error, "remote env '" + r.name + "' needs base_url");
    names.insert(r.name);
  }
  std::set<std::string> seen;
  for (const auto& n : env.suite) {
    if (!bundled(n) && !names.count(n))
      fail(ErrorCode::config_error, "unknown environment '" + n + "'");
    if (!seen.insert(n).second) fail(ErrorCode::config_error, "environment '" + n + "' listed twice");
  }
  if (policy.kind != "oracle" && policy.kind != "random" && policy.kind != "remote")
    fail(ErrorCode::config_error, "policy.kind must be oracle, random or remote");
  if (!(policy.epsilon >= 0.0 && policy.epsilon <= 1.0))
    fail(ErrorCode::config_error, "policy.epsilon must lie in [0,1]");
  if (policy.kind == "remote" && policy.endpoint.empty())
    fail(ErrorCode::config_error, "policy.endpoint is required for a remote policy");
  if (judge.kind != "oracle" && judge.kind != "remote" && judge.kind != "all_good")
    fail(ErrorCode::config_error, "judge.kind must be oracle, remote or all_good");
  if (judge.kind == "remote" && judge.endpoint.empty())
    fail(ErrorCode::config_error, "judge.endpoint is required for a remote judge");
  if (judge.votes < 1) fail(ErrorCode::config_error, "judge.votes must be >= 1");
  if (policy.retries < 0 || judge.retries < 0)
    fail(ErrorCode::config_error, "retries must be >= 0");
  mcts.validate(env.max_rounds);
  plan.validate();
  if (revision.max_pairs_per_task < 1)
    fail(ErrorCode::config_error, "revision.max_pairs_per_task must be >= 1");
  MixConfig{mix.eta, mix.direction, 0}.validate();
  if (eval.max_rounds == 0 || eval.revision_max_rounds == 0)
    fail(ErrorCode::config_error, "eval round limits must be >= 1");
}

RunConfig config_from_json(const Json& j) {
  RunConfig c;
  check_keys(j, {"seed", "output", "workers", "carry_forward", "env", "policy", "judge", "mcts",
                 "plan", "revision", "mix", "eval"},
             "");
  read(j, "seed", c.seed, "");
  read(j, "output", c.output, "");
  read(j, "workers", c.workers, "");
  read(j, "carry_forward", c.carry_forward, "");
  if (auto it = j.find("env"); it != j.end()) {
    check_keys(*it, {"suite", "max_rounds", "tasks_per_env", "remote"}, "env");
    read(*it, "suite", c.env.suite, "env");
    read(*it, "max_rounds", c.env.max_rounds, "env");
    read(*it, "tasks_per_env", c.env.tasks_per_env, "env");
    if (auto r = it->find("remote"); r != it->end()) {
      if (!r->is_array()) fail(ErrorCode::config_error, "env.remote must be an array");
      for (const auto& e : *r) {
        check_keys(e, {"name", "base_url", "tasks", "timeout_ms", "retries"}, "env.remote");
        RemoteEnvConfig rc;
        read(e, "name", rc.name, "env.remote");
        read(e, "base_url", rc.base_url, "env.remote");
        read(e, "tasks", rc.tasks, "env.remote");
        read(e, "timeout_ms", rc.timeout_ms, "env.remote");
        read(e, "retries", rc.retries, "env.remote");
        c.env.remote.push_back(std::move(rc));
      }
    }
  }
  if (auto it = j.find("policy"); it != j.end()) {
    check_keys(*it, {"kind", "epsilon", "endpoint", "model", "timeout_ms", "retries"}, "policy");
    read(*it, "kind", c.policy.kind, "policy");
    read(*it, "epsilon", c.policy.epsilon, "policy");
    read(*it, "endpoint", c.policy.endpoint, "policy");
    read(*it, "model", c.policy.model, "policy");
    read(*it, "timeout_ms", c.policy.timeout_ms, "policy");
    read(*it, "retries", c.policy.retries, "policy");
  }
  if (auto it = j.find("judge"); it != j.end()) {
    check_keys(*it, {"kind", "endpoint", "model", "votes", "timeout_ms", "retries"}, "judge");
    read(*it, "kind", c.judge.kind, "judge");
    read(*it, "endpoint", c.judge.endpoint, "judge");
    read(*it, "model", c.judge.model, "judge");
    read(*it, "votes", c.judge.votes, "judge");
    read(*it, "timeout_ms", c.judge.timeout_ms, "judge");
    read(*it, "retries", c.judge.retries, "judge");
  }
  if (auto it = j.find("mcts"); it != j.end()) {
    check_keys(*it, {"k_rollouts", "max_depth", "c_uct", "expand_width", "simulations",
                     "expand_temperature", "rollout_temperature"},
               "mcts");
    read(*it, "k_rollouts", c.mcts.k_rollouts, "mcts");
    read(*it, "max_depth", c.mcts.max_depth, "mcts");
    read(*it, "c_uct", c.mcts.c_uct, "mcts");
    read(*it, "expand_width", c.mcts.expand_width, "mcts");
    read(*it, "simulations", c.mcts.simulations, "mcts");
    read(*it, "expand_temperature", c.mcts.expand_temperature, "mcts");
    read(*it, "rollout_temperature", c.mcts.rollout_temperature, "mcts");
  }
  if (auto it = j.find("plan"); it != j.end()) {
    check_keys(*it, {"beta", "alphas", "epochs"}, "plan");
    read(*it, "beta", c.plan.beta, "plan");
    read(*it, "alphas", c.plan.alphas, "plan");
    read(*it, "epochs", c.plan.epochs, "plan");
    // A shorter or longer alpha list without explicit epochs keeps the
    // "3 then 1" pattern.
    if (!it->contains("epochs")) {
      c.plan.epochs.assign(c.plan.alphas.size(), 1);
      if (!c.plan.epochs.empty()) c.plan.epochs[0] = 3;
    }
  }
  if (auto it = j.find("revision"); it != j.end()) {
    check_keys(*it, {"mode", "max_pairs_per_task", "reuse_bad"}, "revision");
    std::string mode = to_string(c.revision.mode);
    read(*it, "mode", mode, "revision");
    try {
      c.revision.mode = revision_source_from_string(mode);
    } catch (const Error&) {
      fail(ErrorCode::config_error, "revision.mode must be model_guided or direct");
    }
    read(*it, "max_pairs_per_task", c.revision.max_pairs_per_task, "revision");
    read(*it, "reuse_bad", c.revision.reuse_bad, "revision");
  }
  if (auto it = j.find("mix"); it != j.end()) {
    check_keys(*it, {"eta", "direction", "general_path"}, "mix");
    read(*it, "eta", c.mix.eta, "mix");
    std::string dir = to_string(c.mix.direction);
    read(*it, "direction", dir, "mix");
    c.mix.direction = mix_direction_from_string(dir);
    read(*it, "general_path", c.mix.general_path, "mix");
  }
  if (auto it = j.find("eval"); it != j.end()) {
    check_keys(*it, {"max_rounds", "revision_max_rounds"}, "eval");
    read(*it, "max_rounds", c.eval.max_rounds, "eval");
    read(*it, "revision_max_rounds", c.eval.revision_max_rounds, "eval");
  }
  c.validate();
  return c;
}

Json to_json(const RunConfig& c) {
  Json remote = Json::array();
  for (const auto& r : c.env.remote)
    remote.push_back({{"name", r.name},
                      {"base_url", r.base_url},
                      {"tasks", r.tasks},
                      {"timeout_ms", r.timeout_ms},
                      {"retries", r.retries}});
  return Json{
      {"seed", c.seed},
      {"output", c.output},
      {"workers", c.workers},
      {"carry_forward", c.carry_forward},
      {"env",
       {{"suite", c.env.suite},
        {"max_rounds", c.env.max_rounds},
        {"tasks_per_env", c.env.tasks_per_env},
        {"remote", remote}}},
      {"policy",
       {{"kind", c.policy.kind},
        {"epsilon", c.policy.epsilon},
        {"endpoint", c.policy.endpoint},
        {"model", c.policy.model},
        {"timeout_ms", c.policy.timeout_ms},
        {"retries", c.policy.retries}}},
      {"judge",
       {{"kind", c.judge.kind},
        {"endpoint", c.judge.endpoint},
        {"model", c.judge.model},
        {"votes", c.judge.votes},
        {"timeout_ms", c.judge.timeout_ms},
        {"retries", c.judge.retries}}},
      {"mcts",
       {{"k_rollouts", c.mcts.k_rollouts},
        {"max_depth", c.mcts.max_depth},
        {"c_uct", c.mcts.c_uct},
        {"expand_width", c.mcts.expand_width},
        {"simulations", c.mcts.simulations},
        {"expand_temperature", c.mcts.expand_temperature},
        {"rollout_temperature", c.mcts.rollout_temperature}}},
      {"plan", {{"beta", c.plan.beta}, {"alphas", c.plan.alphas}, {"epochs", c.plan.epochs}}},
      {"revision",
       {{"mode", to_string(c.revision.mode)},
        {"max_pairs_per_task", c.revision.max_pairs_per_task},
        {"reuse_bad", c.revision.reuse_bad}}},
      {"mix",
       {{"eta", c.mix.eta},
        {"direction", to_string(c.mix.direction)},
        {"general_path", c.mix.general_path}}},
      {"eval",
       {{"max_rounds", c.eval.max_rounds}, {"revision_max_rounds", c.eval.revision_max_rounds}}}};
}

std::string config_reference() {
  std::size_t key_width = 0, default_width = 0;
  for (const auto& k : kKeys) {
    key_width = std::max(key_width, std::string_view(k.key).size());
    default_width = std::max(default_width, std::string_view(k.fallback).size());
  }
  std::ostringstream out;
  out << "Config keys (JSON file via --config; flags override it):\n";
  for (const auto& k : kKeys) {
    std::string key = k.key, def = k.fallback;
    key.resize(key_width, ' ');
    def.resize(default_width, ' ');
    out << "  " << key << "  " << def << "  " << k.about << "\n";
  }
  return out.str();
}

std::unique_ptr<Environment> make_environment(const RunConfig& cfg, const std::string& name) {
  EnvOptions options{cfg.env.max_rounds};
  if (name == "craft") return std::make_unique<CraftEnv>(bundled_craft_spec(), options);
  if (name == "graded") return std::make_unique<GradedPathEnv>(bundled_graded_spec(), options);
  for (const auto& r : cfg.env.remote)
    if (r.name == name) return std::make_unique<HttpEnvironment>(r, options);
  fail(ErrorCode::config_error, "unknown environment '" + name + "'");
}

std::unique_ptr<Policy> make_policy(const RunConfig& cfg, const Environment& env) {
  if (cfg.policy.kind == "oracle") {
    const TaskPlanner* planner = env.planner();
    if (!planner)
      fail(ErrorCode::config_error,
           "the oracle policy needs a bundled environment; '" + env.name() + "' has no planner");
    return std::make_unique<ScriptedOracle>(*planner, cfg.policy.epsilon);
  }
  if (cfg.policy.kind == "random") return std::make_unique<RandomPolicy>(env);
  RemotePolicyConfig rc;
  rc.endpoint = endpoint(cfg.policy.endpoint, cfg.policy.timeout_ms, cfg.policy.retries);
  rc.model = cfg.policy.model;
  rc.stop = {"\nObservation:"};
  return std::make_unique<RemotePolicy>(std::move(rc));
}

std::unique_ptr<Judge> make_judge(const RunConfig& cfg, const Environment& env) {
  if (cfg.judge.kind == "all_good") return std::make_unique<ConstantJudge>(VerdictLabel::good);
  if (cfg.judge.kind == "oracle") {
    const TaskPlanner* planner = env.planner();
    if (!planner)
      fail(ErrorCode::config_error,
           "the oracle judge needs a bundled environment; '" + env.name() + "' has no planner");
    return std::make_unique<OracleJudge>(*planner);
  }
  RemoteJudgeConfig rc;
  rc.endpoint = endpoint(cfg.judge.endpoint, cfg.judge.timeout_ms, cfg.judge.retries);
  rc.model = cfg.judge.model;
  rc.votes = cfg.judge.votes;
  return std::make_unique<RemoteJudge>(std::move(rc));
}

}  // namespace revtraj
