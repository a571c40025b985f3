#include "revtraj/judge.hpp"

#include <array>
#include <regex>

#include "revtraj/error.hpp"
#include "revtraj/resources.hpp"
#include "revtraj/text.hpp"

namespace revtraj {

namespace {

constexpr std::string_view kDelimiter = "###";
constexpr std::string_view kEscapedDelimiter = "######";

std::string_view prompt_template() {
  std::string_view t = resources::judge_prompt();
  if (!t.empty() && t.back() == '\n') t.remove_suffix(1);
  return t;
}

// Substitutes {name} placeholders in one pass, so substituted text is never
// rescanned.
std::string fill(std::string_view tmpl, const std::map<std::string, std::string>& values) {
  std::string out;
  std::size_t i = 0;
  while (i < tmpl.size()) {
    if (tmpl[i] == '{') {
      const std::size_t close = tmpl.find('}', i);
      if (close != std::string_view::npos) {
        auto it = values.find(std::string(tmpl.substr(i + 1, close - i - 1)));
        if (it != values.end()) {
          out += it->second;
          i = close + 1;
          continue;
        }
      }
    }
    out += tmpl[i++];
  }
  return out;
}

struct TemplateParts {
  std::string head;       // before {task_description}
  std::string after_log;  // between {history_log} and {current_action}
  std::string after_act;  // between {current_action} and {current_observation}
  std::string tail;       // after {current_observation}
};

TemplateParts template_parts() {
  const std::string t(prompt_template());
  const std::array<std::string, 4> keys{"{task_description}", "{history_log}",
                                        "{current_action}", "{current_observation}"};
  std::array<std::size_t, 4> pos{};
  for (std::size_t k = 0; k < keys.size(); ++k) {
    pos[k] = t.find(keys[k]);
    if (pos[k] == std::string::npos) fail(ErrorCode::parse_error, "judge template lacks " + keys[k]);
  }
  TemplateParts p;
  p.head = t.substr(0, pos[0]);
  const std::string between = t.substr(pos[0] + keys[0].size(), pos[1] - pos[0] - keys[0].size());
  if (between != "\n") fail(ErrorCode::parse_error, "judge template layout not recognised");
  p.after_log = t.substr(pos[1] + keys[1].size(), pos[2] - pos[1] - keys[1].size());
  p.after_act = t.substr(pos[2] + keys[2].size(), pos[3] - pos[2] - keys[2].size());
  p.tail = t.substr(pos[3] + keys[3].size());
  return p;
}

bool starts_with(std::string_view s, std::string_view prefix) {
  return s.substr(0, prefix.size()) == prefix;
}

}  // namespace

const char* to_string(VerdictLabel label) noexcept {
  switch (label) {
    case VerdictLabel::good: return "Good";
    case VerdictLabel::bad: return "Bad";
    case VerdictLabel::uncertain: return "Uncertain";
  }
  return "Uncertain";
}

JudgeQuery judge_query(const Instruction& instruction, std::string_view initial_observation,
                       std::span<const Step> steps, std::size_t index) {
  if (index >= steps.size()) fail(ErrorCode::invalid_argument, "judge query index out of range");
  JudgeQuery q;
  q.task_id = instruction.task_id;
  q.task_description = instruction.text;
  if (!initial_observation.empty()) {
    q.task_description += "\n";
    q.task_description += initial_observation;
  }
  q.history.assign(steps.begin(), steps.begin() + static_cast<std::ptrdiff_t>(index));
  q.current_action = steps[index].action;
  q.current_observation = steps[index].observation;
  return q;
}

std::string escape_delimiters(std::string_view text) {
  return text::replace_all(text, kDelimiter, kEscapedDelimiter);
}

std::string unescape_delimiters(std::string_view text) {
  return text::replace_all(text, kEscapedDelimiter, kDelimiter);
}

std::string render_prompt(const JudgeQuery& query) {
  std::string log;
  for (std::size_t i = 0; i < query.history.size(); ++i) {
    if (i) log += "\n";
    log += "###\nAction: " + escape_delimiters(query.history[i].action) +
           "\nObservation: " + escape_delimiters(query.history[i].observation) + "\n###";
  }
  return fill(prompt_template(), {{"task_description", escape_delimiters(query.task_description)},
                                  {"history_log", log},
                                  {"current_action", escape_delimiters(query.current_action)},
                                  {"current_observation",
                                   escape_delimiters(query.current_observation)}});
}

JudgeQuery parse_prompt(std::string_view prompt) {
  const TemplateParts parts = template_parts();
  if (!starts_with(prompt, parts.head) || prompt.size() < parts.head.size() + parts.tail.size() ||
      prompt.substr(prompt.size() - parts.tail.size()) != parts.tail)
    fail(ErrorCode::parse_error, "prompt does not match the judge template");
  std::string_view rest =
      prompt.substr(parts.head.size(), prompt.size() - parts.head.size() - parts.tail.size());

  JudgeQuery q;
  const std::string block_start = "\n###\n";
  std::size_t k = rest.find(block_start);
  std::string_view after;
  if (k == std::string_view::npos) {
    const std::string marker = "\n" + parts.after_log;
    k = rest.find(marker);
    if (k == std::string_view::npos) fail(ErrorCode::parse_error, "prompt lacks the current action");
    q.task_description = unescape_delimiters(rest.substr(0, k));
    after = rest.substr(k + marker.size());
  } else {
    q.task_description = unescape_delimiters(rest.substr(0, k));
    std::vector<std::string> lines = text::split_lines(rest.substr(k + 1));
    std::size_t i = 0;
    std::size_t consumed = k + 1;
    auto take = [&](std::size_t n) {
      for (std::size_t j = 0; j < n; ++j) consumed += lines[i + j].size() + 1;
      i += n;
    };
    while (i < lines.size() && lines[i] == kDelimiter) {
      if (i + 1 >= lines.size() || !starts_with(lines[i + 1], "Action: "))
        fail(ErrorCode::parse_error, "malformed log block");
      Step s;
      s.action = unescape_delimiters(std::string_view(lines[i + 1]).substr(8));
      if (i + 2 >= lines.size() || !starts_with(lines[i + 2], "Observation: "))
        fail(ErrorCode::parse_error, "malformed log block");
      std::string obs = lines[i + 2].substr(13);
      std::size_t j = i + 3;
      while (j < lines.size() && lines[j] != kDelimiter) obs += "\n" + lines[j++];
      if (j >= lines.size()) fail(ErrorCode::parse_error, "unterminated log block");
      s.observation = unescape_delimiters(obs);
      q.history.push_back(std::move(s));
      take(j + 1 - i);
    }
    // The last block's closing delimiter is followed directly by the
    // remainder of the template.
    if (consumed > 0) --consumed;
    std::string_view tail = rest.substr(std::min(consumed, rest.size()));
    if (!starts_with(tail, parts.after_log)) fail(ErrorCode::parse_error, "malformed log tail");
    after = tail.substr(parts.after_log.size());
  }
  const std::size_t a = after.find(parts.after_act);
  if (a == std::string_view::npos) fail(ErrorCode::parse_error, "prompt lacks the current observation");
  q.current_action = unescape_delimiters(after.substr(0, a));
  q.current_observation = unescape_delimiters(after.substr(a + parts.after_act.size()));
  return q;
}

Verdict parse_verdict(std::string_view completion) {
  static const std::regex pattern(R"(judgment\s*:\s*(good|bad|uncertain))", std::regex::icase);
  const std::string s(completion);
  std::optional<std::string> last;
  for (auto it = std::sregex_iterator(s.begin(), s.end(), pattern); it != std::sregex_iterator(); ++it)
    last = text::to_lower((*it)[1].str());
  if (!last) return {VerdictLabel::uncertain, "unparseable"};
  const VerdictLabel label = *last == "good"  ? VerdictLabel::good
                             : *last == "bad" ? VerdictLabel::bad
                                              : VerdictLabel::uncertain;
  return {label, s};
}

Verdict OracleJudge::judge_step(const JudgeQuery& query) {
  if (is_invalid_action_observation(query.current_observation))
    return {VerdictLabel::bad, "invalid action"};
  const auto expert = planner_.expert_action(query.task_id, query.history);
  if (!expert) return {VerdictLabel::uncertain, "task already complete"};
  if (query.current_action != *expert)
    return {VerdictLabel::bad, "plan continues with '" + *expert + "'"};
  return {VerdictLabel::good, "follows the plan"};
}

RemoteJudge::RemoteJudge(RemoteJudgeConfig config)
    : config_(std::move(config)), client_(config_.endpoint, ErrorCode::judge_unavailable) {
  if (config_.votes < 1) fail(ErrorCode::config_error, "judge votes must be >= 1");
}

Verdict RemoteJudge::judge_step(const JudgeQuery& query) {
  ChatRequest req;
  req.messages.push_back({"user", render_prompt(query)});
  req.n = config_.votes;
  req.temperature = 0.0;
  req.model = config_.model;
  const auto texts = client_.complete(req);
  if (texts.empty()) fail(ErrorCode::judge_unavailable, "judge endpoint returned no choices");

  std::vector<Verdict> verdicts;
  std::map<VerdictLabel, int> tally;
  for (const auto& t : texts) {
    verdicts.push_back(parse_verdict(t));
    ++tally[verdicts.back().label];
  }
  VerdictLabel best = VerdictLabel::uncertain;
  int best_count = -1;
  bool tie = false;
  for (const auto& [label, count] : tally) {
    if (count > best_count) {
      best = label;
      best_count = count;
      tie = false;
    } else if (count == best_count) {
      tie = true;
    }
  }
  if (tie) return {VerdictLabel::uncertain, "split vote"};
  for (const auto& v : verdicts)
    if (v.label == best) return v;
  return verdicts.front();
}

}  // namespace revtraj
