#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace revtraj {

struct Instruction {
  std::string env_name;
  std::string task_id;
  std::string text;

  bool operator==(const Instruction&) const = default;
};

// One ReAct turn: optional rationale, the action sent to the environment and
// the observation it returned.
struct Step {
  std::optional<std::string> thought;
  std::string action;
  std::string observation;

  bool operator==(const Step&) const = default;
};

enum class TrajectoryKind { initial, bad, good, optimal, unknown };

const char* to_string(TrajectoryKind kind) noexcept;
TrajectoryKind trajectory_kind_from_string(std::string_view text);

struct Trajectory {
  Instruction instruction;
  // Observation returned by reset (recipe listings, available actions).
  std::string initial_observation;
  std::vector<Step> steps;
  std::optional<double> reward;
  bool terminal = false;
  TrajectoryKind kind = TrajectoryKind::unknown;

  std::size_t length() const noexcept { return steps.size(); }
  std::vector<std::string> actions() const;

  // Throws InvalidArgument when the reward/terminal/kind invariants fail.
  void validate() const;

  bool operator==(const Trajectory&) const = default;
};

// Reward thresholds separating bad from good trajectories.
struct FilterConfig {
  double beta = 0.2;
  double alpha = 0.5;

  void validate() const;

  bool is_bad(double reward) const noexcept { return reward < beta; }
  // alpha = 1 can only be met by an optimal trajectory, since rewards are capped at 1.
  bool above_alpha(double reward) const noexcept {
    return alpha >= 1.0 ? reward == 1.0 : alpha < reward;
  }
  bool is_good(double reward) const noexcept { return beta < reward && above_alpha(reward); }
};

TrajectoryKind classify_kind(double reward, const FilterConfig& filter) noexcept;

struct TrajectoryPair {
  Trajectory bad;
  Trajectory good;
  // Number of leading steps shared by both trajectories.
  std::size_t divergence = 0;
};

enum class PairVerdict { accept, bad_above_beta, good_not_above_beta, good_not_above_alpha };

const char* to_string(PairVerdict verdict) noexcept;

inline constexpr std::string_view kRevisionAck = "OK.";

struct RevisionSignal {
  int thought_index = 0;
  std::string assistant_text;
  std::string human_ack{kRevisionAck};

  bool operator==(const RevisionSignal&) const = default;
};

enum class RevisionSource { model_guided, direct };

const char* to_string(RevisionSource source) noexcept;
RevisionSource revision_source_from_string(std::string_view text);

// Bad prefix through the transition point, the revision signal, then the good
// suffix from the divergence point on. The signal occupies steps[transition]
// with the reflection as its action and the fixed acknowledgement as its
// observation.
struct RevisionTrajectory {
  Instruction instruction;
  std::string initial_observation;
  std::vector<Step> steps;
  double reward = 0.0;
  double bad_reward = 0.0;
  std::size_t divergence = 0;
  std::size_t transition = 0;
  std::size_t bad_length = 0;
  RevisionSignal signal;
  RevisionSource source = RevisionSource::model_guided;
  TrajectoryKind kind = TrajectoryKind::good;

  std::span<const Step> bad_prefix() const { return {steps.data(), transition}; }
  const Step& signal_step() const { return steps.at(transition); }
  std::span<const Step> good_suffix() const {
    return std::span<const Step>(steps).subspan(transition + 1);
  }
  std::size_t good_length() const noexcept {
    return divergence + (steps.size() - transition - 1);
  }

  bool operator==(const RevisionTrajectory&) const = default;
};

// Length of the common prefix, matching on action and observation.
std::size_t shared_prefix(const Trajectory& a, const Trajectory& b);

// Builds a pair and computes its divergence step.
TrajectoryPair make_pair(Trajectory bad, Trajectory good);

PairVerdict classify_pair(const TrajectoryPair& pair, const FilterConfig& filter);

RevisionTrajectory splice(const TrajectoryPair& pair, std::size_t transition,
                          const RevisionSignal& signal,
                          RevisionSource source = RevisionSource::model_guided);

// Key used to deduplicate trajectories by their action sequence.
std::string action_key(std::span<const Step> steps);

}  // namespace revtraj
