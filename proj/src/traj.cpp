#include "revtraj/traj.hpp"

#include <algorithm>

#include "revtraj/error.hpp"

namespace revtraj {

const char* to_string(TrajectoryKind kind) noexcept {
  switch (kind) {
    case TrajectoryKind::initial: return "initial";
    case TrajectoryKind::bad: return "bad";
    case TrajectoryKind::good: return "good";
    case TrajectoryKind::optimal: return "optimal";
    case TrajectoryKind::unknown: return "unknown";
  }
  return "unknown";
}

TrajectoryKind trajectory_kind_from_string(std::string_view text) {
  if (text == "initial") return TrajectoryKind::initial;
  if (text == "bad") return TrajectoryKind::bad;
  if (text == "good") return TrajectoryKind::good;
  if (text == "optimal") return TrajectoryKind::optimal;
  if (text == "unknown") return TrajectoryKind::unknown;
  fail(ErrorCode::parse_error, "unknown trajectory kind '" + std::string(text) + "'");
}

const char* to_string(PairVerdict verdict) noexcept {
  switch (verdict) {
    case PairVerdict::accept: return "accept";
    case PairVerdict::bad_above_beta: return "bad_above_beta";
    case PairVerdict::good_not_above_beta: return "good_not_above_beta";
    case PairVerdict::good_not_above_alpha: return "good_not_above_alpha";
  }
  return "unknown";
}

const char* to_string(RevisionSource source) noexcept {
  return source == RevisionSource::direct ? "direct" : "model_guided";
}

RevisionSource revision_source_from_string(std::string_view text) {
  if (text == "model_guided") return RevisionSource::model_guided;
  if (text == "direct") return RevisionSource::direct;
  fail(ErrorCode::parse_error, "unknown revision source '" + std::string(text) + "'");
}

std::vector<std::string> Trajectory::actions() const {
  std::vector<std::string> out;
  out.reserve(steps.size());
  for (const auto& s : steps) out.push_back(s.action);
  return out;
}

void Trajectory::validate() const {
  if (instruction.text.empty()) fail(ErrorCode::invalid_argument, "instruction text is empty");
  if (reward.has_value() != terminal)
    fail(ErrorCode::invalid_argument, "reward must be set exactly when the trajectory is terminal");
  if (reward && (*reward < 0.0 || *reward > 1.0))
    fail(ErrorCode::invalid_argument, "reward outside [0,1]");
  if (kind == TrajectoryKind::optimal && reward != 1.0)
    fail(ErrorCode::invalid_argument, "optimal trajectory must have reward 1");
  for (const auto& s : steps)
    if (s.action.empty()) fail(ErrorCode::invalid_argument, "step with empty action");
}

void FilterConfig::validate() const {
  if (!(beta > 0.0 && beta < alpha && alpha <= 1.0))
    fail(ErrorCode::config_error, "filter thresholds must satisfy 0 < beta < alpha <= 1");
}

TrajectoryKind classify_kind(double reward, const FilterConfig& filter) noexcept {
  if (reward == 1.0) return TrajectoryKind::optimal;
  if (filter.is_bad(reward)) return TrajectoryKind::bad;
  if (filter.is_good(reward)) return TrajectoryKind::good;
  return TrajectoryKind::unknown;
}

std::size_t shared_prefix(const Trajectory& a, const Trajectory& b) {
  if (!(a.instruction == b.instruction))
    fail(ErrorCode::invalid_pair, "trajectories belong to different instructions");
  const std::size_t n = std::min(a.steps.size(), b.steps.size());
  std::size_t t = 0;
  while (t < n && a.steps[t].action == b.steps[t].action &&
         a.steps[t].observation == b.steps[t].observation)
    ++t;
  return t;
}

TrajectoryPair make_pair(Trajectory bad, Trajectory good) {
  const std::size_t t = shared_prefix(bad, good);
  return TrajectoryPair{std::move(bad), std::move(good), t};
}

PairVerdict classify_pair(const TrajectoryPair& pair, const FilterConfig& filter) {
  if (!pair.bad.terminal || !pair.bad.reward || !pair.good.terminal || !pair.good.reward)
    fail(ErrorCode::not_terminal, "both trajectories must be terminal with a reward");
  const double rb = *pair.bad.reward;
  const double rg = *pair.good.reward;
  if (!(rb < filter.beta)) return PairVerdict::bad_above_beta;
  if (!(filter.beta < rg)) return PairVerdict::good_not_above_beta;
  if (!filter.above_alpha(rg)) return PairVerdict::good_not_above_alpha;
  return PairVerdict::accept;
}

RevisionTrajectory splice(const TrajectoryPair& pair, std::size_t transition,
                          const RevisionSignal& signal, RevisionSource source) {
  const auto& bad = pair.bad;
  const auto& good = pair.good;
  if (!bad.reward || !good.reward)
    fail(ErrorCode::not_terminal, "splice requires terminal trajectories");
  if (pair.divergence > bad.steps.size() || pair.divergence > good.steps.size())
    fail(ErrorCode::invalid_pair, "divergence beyond trajectory length");
  if (transition <= pair.divergence)
    fail(ErrorCode::transition_before_divergence,
         "transition " + std::to_string(transition) + " <= divergence " +
             std::to_string(pair.divergence));
  if (transition > bad.steps.size())
    fail(ErrorCode::transition_out_of_range,
         "transition " + std::to_string(transition) + " > bad length " +
             std::to_string(bad.steps.size()));

  RevisionTrajectory r;
  r.instruction = bad.instruction;
  r.initial_observation = good.initial_observation;
  r.reward = *good.reward;
  r.bad_reward = *bad.reward;
  r.divergence = pair.divergence;
  r.transition = transition;
  r.bad_length = bad.steps.size();
  r.signal = signal;
  r.source = source;
  r.kind = *good.reward == 1.0 ? TrajectoryKind::optimal : TrajectoryKind::good;

  r.steps.reserve(transition + 1 + good.steps.size() - pair.divergence);
  r.steps.insert(r.steps.end(), bad.steps.begin(),
                 bad.steps.begin() + static_cast<std::ptrdiff_t>(transition));
  r.steps.push_back(Step{std::nullopt, signal.assistant_text, signal.human_ack});
  r.steps.insert(r.steps.end(), good.steps.begin() + static_cast<std::ptrdiff_t>(pair.divergence),
                 good.steps.end());
  return r;
}

std::string action_key(std::span<const Step> steps) {
  std::string key;
  for (const auto& s : steps) {
    key += s.action;
    key += '\x1f';
  }
  return key;
}

}  // namespace revtraj
