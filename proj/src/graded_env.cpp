#include "revtraj/graded_env.hpp"

#include <algorithm>
#include <set>

#include "revtraj/error.hpp"
#include "revtraj/resources.hpp"
#include "revtraj/text.hpp"

namespace revtraj {

namespace {

constexpr const char* kProgress = "progress";
constexpr const char* kGiveUp = "give up";

long long progress_of(const EnvState& state) {
  auto it = state.vars.find(kProgress);
  return it == state.vars.end() ? 0 : it->second;
}

StepResult graded_apply(const GradedPathTask& task, EnvState& state, std::string_view raw) {
  const std::string action = text::trim(raw);
  const auto n = static_cast<long long>(task.subgoals.size());
  long long k = progress_of(state);
  StepResult r;
  const bool is_subgoal =
      std::find(task.subgoals.begin(), task.subgoals.end(), action) != task.subgoals.end();
  const bool is_distractor =
      std::find(task.distractors.begin(), task.distractors.end(), action) != task.distractors.end();
  if (k < n && action == task.subgoals[static_cast<std::size_t>(k)]) {
    ++k;
    state.vars[kProgress] = k;
    r.observation = "Completed: " + action + ". (" + std::to_string(k) + "/" + std::to_string(n) + ")";
  } else if (is_subgoal) {
    r.observation = "Nothing happens: you cannot " + action + " right now.";
  } else if (is_distractor) {
    r.observation = "You " + action + ". Nothing useful happens.";
  } else if (action == kGiveUp) {
    r.observation = "You gave up.";
    r.done = true;
  } else {
    r.observation = std::string(kInvalidActionPrefix) + " " + action;
  }
  if (k == n) {
    r.done = true;
    r.reward = 1.0;
  } else if (r.done) {
    r.reward = static_cast<double>(k) / static_cast<double>(n);
  }
  return r;
}

}  // namespace

const GradedPathTask& GradedPathSpec::task(const std::string& id) const {
  for (const auto& t : tasks)
    if (t.id == id) return t;
  fail(ErrorCode::unknown_task, "graded task '" + id + "'");
}

void GradedPathSpec::validate() const {
  if (version != 1) fail(ErrorCode::config_error, "graded spec: unsupported version");
  std::set<std::string> ids;
  for (const auto& t : tasks) {
    if (!ids.insert(t.id).second) fail(ErrorCode::config_error, "graded spec: duplicate task " + t.id);
    if (t.subgoals.empty()) fail(ErrorCode::config_error, "graded spec: task " + t.id + " has no subgoals");
    std::set<std::string> actions(t.subgoals.begin(), t.subgoals.end());
    if (actions.size() != t.subgoals.size())
      fail(ErrorCode::config_error, "graded spec: repeated subgoal in " + t.id);
    for (const auto& d : t.distractors)
      if (actions.count(d) || d == kGiveUp)
        fail(ErrorCode::config_error, "graded spec: distractor '" + d + "' collides in " + t.id);
  }
}

GradedPathSpec parse_graded_spec(std::string_view text) {
  GradedPathSpec spec;
  GradedPathTask* current = nullptr;
  std::size_t lineno = 0;
  for (const auto& raw : text::split_lines(text)) {
    ++lineno;
    const std::string line = text::trim(raw);
    if (line.empty() || line[0] == '#') continue;
    const std::size_t sp = line.find(' ');
    const std::string head = line.substr(0, sp);
    const std::string rest = sp == std::string::npos ? "" : text::trim(line.substr(sp + 1));
    auto bad = [&](const std::string& why) {
      fail(ErrorCode::parse_error, "graded spec line " + std::to_string(lineno) + ": " + why);
    };
    if (head == "version") {
      spec.version = std::stoi(rest);
    } else if (head == "task") {
      if (current) bad("missing 'end' before new task");
      const std::size_t s2 = rest.find(' ');
      if (s2 == std::string::npos) bad("expected 'task <id> <goal>'");
      spec.tasks.push_back(GradedPathTask{rest.substr(0, s2), text::trim(rest.substr(s2 + 1)), {}, {}});
      current = &spec.tasks.back();
    } else if (head == "subgoal" || head == "distractor") {
      if (!current) bad(head + " outside a task");
      if (rest.empty()) bad("empty " + head);
      (head == "subgoal" ? current->subgoals : current->distractors).push_back(rest);
    } else if (head == "end") {
      if (!current) bad("'end' without task");
      current = nullptr;
    } else {
      bad("unknown directive '" + head + "'");
    }
  }
  if (current) fail(ErrorCode::parse_error, "graded spec: unterminated task " + current->id);
  spec.validate();
  return spec;
}

const GradedPathSpec& bundled_graded_spec() {
  static const GradedPathSpec spec = parse_graded_spec(resources::graded_suite());
  return spec;
}

std::size_t subgoal_progress(const std::vector<std::string>& subgoals,
                             std::span<const std::string> actions) {
  std::size_t k = 0;
  for (const auto& a : actions)
    if (k < subgoals.size() && a == subgoals[k]) ++k;
  return k;
}

GradedPathEnv::GradedPathEnv(GradedPathSpec spec, EnvOptions options)
    : Environment(options), spec_(std::move(spec)) {
  spec_.validate();
}

std::vector<std::string> GradedPathEnv::task_ids() const {
  std::vector<std::string> ids;
  for (const auto& t : spec_.tasks) ids.push_back(t.id);
  return ids;
}

ResetResult GradedPathEnv::reset(const std::string& task_id) {
  const GradedPathTask& task = spec_.task(task_id);
  ResetResult r;
  r.instruction = Instruction{name(), task.id, task.goal};
  r.state.task_id = task.id;
  r.observation = "Available actions: " + text::join(action_space(task_id), ", ") + ".";
  return r;
}

std::vector<std::string> GradedPathEnv::action_space(const std::string& task_id) const {
  const GradedPathTask& task = spec_.task(task_id);
  std::vector<std::string> out = task.subgoals;
  out.insert(out.end(), task.distractors.begin(), task.distractors.end());
  out.push_back(kGiveUp);
  std::sort(out.begin(), out.end());
  return out;
}

StepResult GradedPathEnv::apply(EnvState& state, std::string_view action) {
  return graded_apply(spec_.task(state.task_id), state, action);
}

double GradedPathEnv::terminal_reward(const EnvState& state) const {
  const GradedPathTask& task = spec_.task(state.task_id);
  return static_cast<double>(progress_of(state)) / static_cast<double>(task.subgoals.size());
}

std::optional<std::string> GradedPathEnv::expert_action(const std::string& task_id,
                                                        std::span<const Step> history) const {
  const GradedPathTask& task = spec_.task(task_id);
  EnvState state;
  state.task_id = task_id;
  for (const auto& s : history) {
    if (graded_apply(task, state, s.action).done) return std::nullopt;
  }
  return task.subgoals[static_cast<std::size_t>(progress_of(state))];
}

std::vector<std::string> GradedPathEnv::distractor_actions(const std::string& task_id,
                                                           std::span<const Step>) const {
  std::vector<std::string> out = spec_.task(task_id).distractors;
  out.push_back(kGiveUp);
  return out;
}

}  // namespace revtraj
