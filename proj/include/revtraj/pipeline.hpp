#pragma once

#include <atomic>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "revtraj/config.hpp"
#include "revtraj/metrics.hpp"
#include "revtraj/serialize.hpp"

namespace revtraj {

using LogSink = std::function<void(const std::string&)>;

std::filesystem::path iteration_dir(const std::filesystem::path& root, int iteration);

struct IterationSummary {
  std::filesystem::path directory;
  Json manifest;
  std::vector<std::string> warnings;
  bool cancelled = false;
};

// Collects one iteration into <output>/iter_<n>/:
//   revisions.jsonl  revision trajectories
//   goods.jsonl      good trajectories
//   mixed.jsonl      rendered samples mixed with general data
//   manifest.json    per-environment counts and settings
//   trees/<env>__<task>.json
// Throws MissingPriorIteration when iter_<n-1> has no manifest and
// RefusesOverwrite when iter_<n> exists and `force` is off. Task failures
// become warnings. With `cancel` raised, running tasks finish and the partial
// result is written with "cancelled": true.
IterationSummary run_iteration(const RunConfig& cfg, int iteration, bool force,
                               const std::atomic<bool>* cancel = nullptr,
                               const LogSink& log = {});

// Task list of every configured environment (tasks_per_env applied).
std::vector<std::pair<std::string, std::vector<std::string>>> task_suite(const RunConfig& cfg);

struct EvalRun {
  std::vector<EvalReport> reports;
  std::vector<std::string> warnings;
};

// Test mode evaluates every configured task. Revision mode resumes the
// reward-0 trajectories in `failures_path` (trajectory JSONL), or, without
// one, the reward-0 episodes of a test-mode pass with the same policy.
EvalRun run_eval(const RunConfig& cfg, EvalMode mode, std::size_t max_rounds,
                 const std::optional<std::filesystem::path>& failures_path,
                 const LogSink& log = {});

struct StatsOptions {
  bool loops = false;
  bool revision_length = false;
  std::size_t max_block = 5;
};

// Manifest plus recounted line totals, and optionally the mean transition
// point and the loop profile of the iteration's trajectories.
Json iteration_stats(const std::filesystem::path& directory, const StatsOptions& options);

}  // namespace revtraj
