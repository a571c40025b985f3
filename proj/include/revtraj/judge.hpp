#pragma once

#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "revtraj/env.hpp"
#include "revtraj/http.hpp"
#include "revtraj/traj.hpp"

namespace revtraj {

enum class VerdictLabel { good, bad, uncertain };

const char* to_string(VerdictLabel label) noexcept;

struct Verdict {
  VerdictLabel label = VerdictLabel::uncertain;
  // Full completion for remote judges, a short note otherwise.
  std::string reason;

  bool operator==(const Verdict&) const = default;
};

struct JudgeQuery {
  // Used by plan-aware judges; not rendered.
  std::string task_id;
  std::string task_description;
  // Steps before the queried one.
  std::vector<Step> history;
  std::string current_action;
  std::string current_observation;

  bool operator==(const JudgeQuery&) const = default;
};

// Query for steps[index] (0-based) of an episode.
JudgeQuery judge_query(const Instruction& instruction, std::string_view initial_observation,
                       std::span<const Step> steps, std::size_t index);

// Occurrences of "###" inside user text are doubled so they cannot be read as
// log delimiters; unescape_delimiters reverses it.
std::string escape_delimiters(std::string_view text);
std::string unescape_delimiters(std::string_view text);

// Fills the bundled verifier template. Each history step becomes a block
//   ###
//   Action: <action>
//   Observation: <observation>
//   ###
// and blocks are joined by newlines.
std::string render_prompt(const JudgeQuery& query);

// Inverse of render_prompt for prompts it produced (task_id is not recovered).
JudgeQuery parse_prompt(std::string_view prompt);

// Last "Judgment: <label>" (case-insensitive) wins; none gives Uncertain with
// reason "unparseable".
Verdict parse_verdict(std::string_view completion);

class Judge {
 public:
  virtual ~Judge() = default;
  virtual std::string name() const = 0;
  virtual Verdict judge_step(const JudgeQuery& query) = 0;
};

// Bad when the observation carries the invalid-action sentinel or the action
// differs from the planner's next expert action; Uncertain once the plan is
// finished.
class OracleJudge final : public Judge {
 public:
  explicit OracleJudge(const TaskPlanner& planner) : planner_(planner) {}
  std::string name() const override { return "oracle"; }
  Verdict judge_step(const JudgeQuery& query) override;

 private:
  const TaskPlanner& planner_;
};

// Returns the same label for every query.
class ConstantJudge final : public Judge {
 public:
  explicit ConstantJudge(VerdictLabel label) : label_(label) {}
  std::string name() const override { return std::string("all_") + to_string(label_); }
  Verdict judge_step(const JudgeQuery&) override { return {label_, "constant"}; }

 private:
  VerdictLabel label_;
};

struct RemoteJudgeConfig {
  HttpEndpoint endpoint;
  std::string model;
  // Completions per query; the majority label wins and ties give Uncertain.
  int votes = 1;
};

// LLM verifier over the chat protocol, temperature 0.
class RemoteJudge final : public Judge {
 public:
  explicit RemoteJudge(RemoteJudgeConfig config);
  std::string name() const override { return "remote"; }
  Verdict judge_step(const JudgeQuery& query) override;

 private:
  RemoteJudgeConfig config_;
  ChatClient client_;
};

}  // namespace revtraj
