#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "revtraj/dataset.hpp"
#include "revtraj/env.hpp"
#include "revtraj/http_env.hpp"
#include "revtraj/judge.hpp"
#include "revtraj/mcts.hpp"
#include "revtraj/policy.hpp"
#include "revtraj/revision.hpp"
#include "revtraj/serialize.hpp"

namespace revtraj {

struct EnvSuiteConfig {
  // Bundled names ("craft", "graded") or names of entries in `remote`.
  std::vector<std::string> suite{"craft", "graded"};
  std::size_t max_rounds = 100;
  // First N tasks of each environment; 0 means all.
  std::size_t tasks_per_env = 0;
  std::vector<RemoteEnvConfig> remote;
};

struct PolicyConfig {
  // oracle | random | remote
  std::string kind = "oracle";
  double epsilon = 0.3;
  std::string endpoint;
  std::string model;
  long timeout_ms = 30000;
  int retries = 2;
};

struct JudgeConfig {
  // oracle | remote | all_good
  std::string kind = "oracle";
  std::string endpoint;
  std::string model;
  int votes = 1;
  long timeout_ms = 30000;
  int retries = 2;
};

// Per-iteration thresholds. Iteration i (1-based) uses alphas[i-1].
struct IterationPlan {
  double beta = 0.2;
  std::vector<double> alphas{0.5, 0.7, 1.0};
  std::vector<int> epochs{3, 1, 1};

  void validate() const;
  int iterations() const noexcept { return static_cast<int>(alphas.size()); }
  FilterConfig filter(int iteration) const;
  int epochs_hint(int iteration) const;
};

struct RevisionSettings {
  TransitionMode mode = TransitionMode::model_guided;
  int max_pairs_per_task = 32;
  bool reuse_bad = false;
};

struct MixSettings {
  double eta = 0.2;
  MixDirection direction = MixDirection::agent;
  // Chat-format JSONL; empty means no general data.
  std::string general_path;
};

struct EvalSettings {
  std::size_t max_rounds = 100;
  std::size_t revision_max_rounds = 50;
};

struct RunConfig {
  std::uint64_t seed = 0;
  std::string output = "runs";
  // 0 means the host's hardware concurrency.
  int workers = 0;
  bool carry_forward = false;
  EnvSuiteConfig env;
  PolicyConfig policy;
  JudgeConfig judge;
  MctsConfig mcts;
  IterationPlan plan;
  RevisionSettings revision;
  MixSettings mix;
  EvalSettings eval;

  void validate() const;
};

// Keys missing from `j` keep their defaults; unknown keys raise ConfigError.
RunConfig config_from_json(const Json& j);
Json to_json(const RunConfig& cfg);

// Every key with its default and meaning, one per line.
std::string config_reference();

std::unique_ptr<Environment> make_environment(const RunConfig& cfg, const std::string& name);
std::unique_ptr<Policy> make_policy(const RunConfig& cfg, const Environment& env);
std::unique_ptr<Judge> make_judge(const RunConfig& cfg, const Environment& env);

}  // namespace revtraj
