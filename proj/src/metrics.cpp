#include "revtraj/metrics.hpp"

#include <cstdio>
#include <sstream>

#include "revtraj/error.hpp"

namespace revtraj {

const char* to_string(EvalMode mode) noexcept {
  return mode == EvalMode::test ? "test" : "revision_eval";
}

void EvalReport::summarize() {
  double sum = 0.0;
  std::size_t scored = 0, solved = 0;
  excluded = 0;
  for (const auto& t : tasks) {
    if (!t.reward) {
      ++excluded;
      continue;
    }
    sum += *t.reward;
    ++scored;
    if (*t.reward == 1.0) ++solved;
  }
  average_reward = scored ? sum / static_cast<double>(scored) : 0.0;
  success_rate = scored ? static_cast<double>(solved) / static_cast<double>(scored) : 0.0;
}

Json EvalReport::to_json() const {
  Json rows = Json::array();
  for (const auto& t : tasks) {
    Json j{{"task_id", t.task_id},
           {"reward", t.reward ? Json(*t.reward) : Json(nullptr)},
           {"steps", t.steps},
           {"flagged", t.flagged}};
    if (!t.note.empty()) j["note"] = t.note;
    if (t.truncation) j["truncation"] = *t.truncation;
    rows.push_back(std::move(j));
  }
  return Json{{"env", env},
              {"mode", revtraj::to_string(mode)},
              {"max_rounds", max_rounds},
              {"tasks", rows},
              {"average_reward", average_reward},
              {"success_rate", success_rate},
              {"excluded", excluded}};
}

std::string EvalReport::table() const {
  std::ostringstream out;
  char line[160];
  std::snprintf(line, sizeof line, "%-24s %8s %6s  %s\n", "task", "reward", "steps", "note");
  out << line;
  for (const auto& t : tasks) {
    const std::string r = t.reward ? std::to_string(*t.reward).substr(0, 6) : "-";
    std::snprintf(line, sizeof line, "%-24s %8s %6zu  %s\n", t.task_id.c_str(), r.c_str(),
                  t.steps, t.note.c_str());
    out << line;
  }
  std::snprintf(line, sizeof line, "%s %s: average %.4f, success %.4f over %zu tasks (%zu excluded)\n",
                env.c_str(), revtraj::to_string(mode), average_reward, success_rate,
                tasks.size() - excluded, excluded);
  out << line;
  return out.str();
}

EvalReport evaluate(Policy& policy, Environment& env, std::span<const std::string> tasks,
                    std::size_t max_rounds, std::uint64_t seed, std::vector<Trajectory>* episodes) {
  if (max_rounds == 0) fail(ErrorCode::invalid_argument, "max_rounds must be >= 1");
  MaxRoundsGuard guard(env, max_rounds);
  EvalReport report;
  report.env = env.name();
  report.mode = EvalMode::test;
  report.max_rounds = max_rounds;
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    TaskEval te;
    te.task_id = tasks[i];
    try {
      ResetResult start = env.reset(tasks[i]);
      PolicyContext ctx;
      ctx.instruction = start.instruction;
      ctx.initial_observation = start.observation;
      ctx.temperature = 0.0;
      Rng rng(mix_seed(seed, i));
      RolloutResult r = rollout(policy, env, ctx, start.state, max_rounds, rng);
      te.reward = r.reward;
      te.steps = r.steps.size();
      if (episodes) {
        Trajectory t;
        t.instruction = start.instruction;
        t.initial_observation = start.observation;
        t.steps = std::move(r.steps);
        t.reward = r.reward;
        t.terminal = true;
        episodes->push_back(std::move(t));
      }
    } catch (const Error& e) {
      te.reward = 0.0;
      te.flagged = true;
      te.note = e.what();
    }
    report.tasks.push_back(std::move(te));
  }
  report.summarize();
  return report;
}

EvalReport revision_eval(Policy& policy, Environment& env, std::span<const Trajectory> failures,
                         Rng& rng, std::size_t max_rounds) {
  if (max_rounds == 0) fail(ErrorCode::invalid_argument, "max_rounds must be >= 1");
  EvalReport report;
  report.env = env.name();
  report.mode = EvalMode::revision_eval;
  report.max_rounds = max_rounds;
  for (const Trajectory& f : failures) {
    TaskEval te;
    te.task_id = f.instruction.task_id;
    if (f.steps.size() < 2) {
      te.flagged = true;
      te.note = "too short to truncate";
      report.tasks.push_back(std::move(te));
      continue;
    }
    const std::size_t cut = 1 + rng.index(f.steps.size() - 1);
    te.truncation = cut;
    try {
      MaxRoundsGuard guard(env, cut + max_rounds);
      ResetResult start = env.reset(f.instruction.task_id);
      EnvState state = start.state;
      PolicyContext ctx;
      ctx.instruction = start.instruction;
      ctx.initial_observation = start.observation;
      ctx.temperature = 0.0;
      bool diverged = start.observation != f.initial_observation && !f.initial_observation.empty();
      for (std::size_t i = 0; i < cut && !diverged; ++i) {
        if (state.done) {
          diverged = true;
          break;
        }
        StepOutcome out = env.step(state, f.steps[i].action);
        if (out.result.observation != f.steps[i].observation) diverged = true;
        ctx.history.push_back(f.steps[i]);
        state = std::move(out.state);
      }
      if (diverged || state.done) {
        te.flagged = true;
        te.note = std::string(to_string(ErrorCode::non_deterministic_env)) +
                  ": replayed prefix does not reproduce the recorded observations";
        report.tasks.push_back(std::move(te));
        continue;
      }
      RolloutResult r = rollout(policy, env, ctx, state, max_rounds, rng);
      te.reward = r.reward;
      te.steps = r.steps.size();
    } catch (const Error& e) {
      te.reward = 0.0;
      te.flagged = true;
      te.note = e.what();
    }
    report.tasks.push_back(std::move(te));
  }
  report.summarize();
  return report;
}

std::optional<double> revision_length(std::span<const RevisionTrajectory> revisions) {
  if (revisions.empty()) return std::nullopt;
  double sum = 0.0;
  for (const auto& r : revisions) sum += static_cast<double>(r.transition);
  return sum / static_cast<double>(revisions.size());
}

std::size_t max_block_repetition(std::span<const std::string> actions, std::size_t block) {
  if (block == 0) fail(ErrorCode::invalid_argument, "block length must be >= 1");
  const std::size_t n = actions.size();
  std::size_t best = 1;
  for (std::size_t i = 0; i + block <= n; ++i) {
    std::size_t count = 1;
    std::size_t j = i + block;
    while (j + block <= n &&
           std::equal(actions.begin() + static_cast<std::ptrdiff_t>(i),
                      actions.begin() + static_cast<std::ptrdiff_t>(i + block),
                      actions.begin() + static_cast<std::ptrdiff_t>(j))) {
      ++count;
      j += block;
    }
    best = std::max(best, count);
  }
  return best;
}

std::vector<double> loop_profile(std::span<const std::vector<std::string>> trajectories,
                                 std::size_t max_block) {
  if (trajectories.empty()) fail(ErrorCode::invalid_argument, "loop profile needs trajectories");
  std::vector<double> profile;
  for (std::size_t L = 1; L <= max_block; ++L) {
    double sum = 0.0;
    for (const auto& t : trajectories) sum += static_cast<double>(max_block_repetition(t, L));
    profile.push_back(sum / static_cast<double>(trajectories.size()));
  }
  return profile;
}

}  // namespace revtraj
