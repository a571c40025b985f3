#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "revtraj/env.hpp"
#include "revtraj/policy.hpp"
#include "revtraj/rng.hpp"
#include "revtraj/serialize.hpp"
#include "revtraj/traj.hpp"

namespace revtraj {

enum class EvalMode { test, revision_eval };

const char* to_string(EvalMode mode) noexcept;

struct TaskEval {
  std::string task_id;
  // Absent when the task was excluded.
  std::optional<double> reward;
  std::size_t steps = 0;
  // Failed (scored 0) or excluded; `note` says why.
  bool flagged = false;
  std::string note;
  // Revision evaluation: length of the replayed prefix.
  std::optional<std::size_t> truncation;
};

struct EvalReport {
  std::string env;
  EvalMode mode = EvalMode::test;
  std::size_t max_rounds = 0;
  std::vector<TaskEval> tasks;
  // Over tasks with a reward; 0 when there are none.
  double average_reward = 0.0;
  double success_rate = 0.0;
  std::size_t excluded = 0;

  void summarize();
  Json to_json() const;
  std::string table() const;
};

// Greedy (temperature 0, one proposal) episode per task under a round limit
// of `max_rounds`. Task i uses a generator seeded from (seed, i). Failures
// score 0 and are flagged. Finished episodes are appended to `episodes` when
// given.
EvalReport evaluate(Policy& policy, Environment& env, std::span<const std::string> tasks,
                    std::size_t max_rounds, std::uint64_t seed,
                    std::vector<Trajectory>* episodes = nullptr);

// Truncate-and-resume: for each failure, a cut t uniform in [1, length-1] is
// drawn, the first t actions are replayed and must reproduce the recorded
// observations (otherwise the task is excluded as non-deterministic), then
// the policy continues for at most `max_rounds` further actions.
EvalReport revision_eval(Policy& policy, Environment& env, std::span<const Trajectory> failures,
                         Rng& rng, std::size_t max_rounds = 50);

// Mean transition point; absent for no revisions.
std::optional<double> revision_length(std::span<const RevisionTrajectory> revisions);

// Largest number of back-to-back copies of any length-L block; 1 when the
// sequence is shorter than L.
std::size_t max_block_repetition(std::span<const std::string> actions, std::size_t block);

// Entry L-1 is the mean over trajectories of max_block_repetition(.., L).
std::vector<double> loop_profile(std::span<const std::vector<std::string>> trajectories,
                                 std::size_t max_block = 5);

}  // namespace revtraj
