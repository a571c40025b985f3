#include "revtraj/dataset.hpp"

#include <algorithm>

#include "revtraj/error.hpp"
#include "revtraj/policy.hpp"
#include "revtraj/rng.hpp"

namespace revtraj {

namespace {

const Json& field(const Json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) fail(ErrorCode::parse_error, std::string("missing field '") + key + "'");
  return *it;
}

template <class T>
void shuffle(std::vector<T>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[rng.index(i)]);
}

void check_renderable(const Instruction& instruction, std::size_t steps) {
  if (steps == 0) fail(ErrorCode::render_error, "cannot render an empty trajectory");
  if (instruction.text.empty()) fail(ErrorCode::render_error, "trajectory has no instruction text");
}

SampleMeta meta_for(const Instruction& instruction, int iteration, double reward) {
  SampleMeta m;
  m.env = instruction.env_name;
  m.task_id = instruction.task_id;
  m.iteration = iteration;
  m.reward = reward;
  return m;
}

}  // namespace

const char* to_string(SampleKind kind) noexcept {
  switch (kind) {
    case SampleKind::good: return "good";
    case SampleKind::revision: return "revision";
    case SampleKind::general: return "general";
  }
  return "good";
}

const char* to_string(Role role) noexcept { return role == Role::human ? "human" : "assistant"; }

SampleKind sample_kind_from_string(std::string_view text) {
  if (text == "good") return SampleKind::good;
  if (text == "revision") return SampleKind::revision;
  if (text == "general") return SampleKind::general;
  fail(ErrorCode::parse_error, "unknown sample kind '" + std::string(text) + "'");
}

Role role_from_string(std::string_view text) {
  if (text == "human" || text == "user") return Role::human;
  if (text == "assistant" || text == "gpt") return Role::assistant;
  fail(ErrorCode::parse_error, "unknown message role '" + std::string(text) + "'");
}

Json to_json(const DatasetSample& s) {
  Json messages = Json::array();
  for (const auto& m : s.messages)
    messages.push_back({{"role", to_string(m.role)}, {"content", m.content}, {"train", m.train}});
  Json meta;
  meta["env"] = s.meta.env;
  meta["task_id"] = s.meta.task_id;
  meta["iteration"] = s.meta.iteration;
  meta["reward"] = s.meta.reward ? Json(*s.meta.reward) : Json(nullptr);
  if (s.meta.divergence) meta["divergence"] = *s.meta.divergence;
  if (s.meta.transition) meta["transition"] = *s.meta.transition;
  if (s.meta.thought_index) meta["thought_index"] = *s.meta.thought_index;
  return Json{{"id", s.id}, {"kind", to_string(s.kind)}, {"messages", messages}, {"meta", meta}};
}

DatasetSample sample_from_json(const Json& j) {
  try {
    DatasetSample s;
    s.id = field(j, "id").get<std::string>();
    s.kind = sample_kind_from_string(field(j, "kind").get<std::string>());
    for (const auto& m : field(j, "messages"))
      s.messages.push_back(Message{role_from_string(field(m, "role").get<std::string>()),
                                   field(m, "content").get<std::string>(),
                                   field(m, "train").get<bool>()});
    const Json& meta = field(j, "meta");
    s.meta.env = meta.value("env", "");
    s.meta.task_id = meta.value("task_id", "");
    s.meta.iteration = meta.value("iteration", 0);
    if (meta.contains("reward") && !meta["reward"].is_null()) s.meta.reward = meta["reward"].get<double>();
    if (meta.contains("divergence")) s.meta.divergence = meta["divergence"].get<std::size_t>();
    if (meta.contains("transition")) s.meta.transition = meta["transition"].get<std::size_t>();
    if (meta.contains("thought_index")) s.meta.thought_index = meta["thought_index"].get<int>();
    return s;
  } catch (const Json::exception& e) {
    fail(ErrorCode::parse_error, std::string("malformed sample: ") + e.what());
  }
}

std::string opening_message(const Instruction& instruction, std::string_view initial_observation) {
  std::string text = instruction.text;
  if (!initial_observation.empty()) {
    text += "\n";
    text += initial_observation;
  }
  return text;
}

DatasetSample render_sample(const Trajectory& t, int iteration, std::string id) {
  check_renderable(t.instruction, t.steps.size());
  if (!t.reward) fail(ErrorCode::render_error, "cannot render a trajectory without a reward");
  DatasetSample s;
  s.id = std::move(id);
  s.kind = SampleKind::good;
  s.meta = meta_for(t.instruction, iteration, *t.reward);
  s.messages.push_back({Role::human, opening_message(t.instruction, t.initial_observation), false});
  for (const auto& step : t.steps) {
    s.messages.push_back({Role::assistant, format_assistant_turn(step), true});
    s.messages.push_back({Role::human, step.observation, false});
  }
  return s;
}

DatasetSample render_sample(const RevisionTrajectory& r, int iteration, std::string id) {
  check_renderable(r.instruction, r.steps.size());
  if (r.transition >= r.steps.size())
    fail(ErrorCode::render_error, "revision transition lies outside its steps");
  DatasetSample s;
  s.id = std::move(id);
  s.kind = SampleKind::revision;
  s.meta = meta_for(r.instruction, iteration, r.reward);
  s.meta.divergence = r.divergence;
  s.meta.transition = r.transition;
  s.meta.thought_index = r.signal.thought_index;
  s.messages.push_back({Role::human, opening_message(r.instruction, r.initial_observation), false});
  for (std::size_t i = 0; i < r.steps.size(); ++i) {
    const Step& step = r.steps[i];
    if (i == r.transition) {
      s.messages.push_back({Role::assistant, r.signal.assistant_text, true});
      s.messages.push_back({Role::human, r.signal.human_ack, false});
      continue;
    }
    s.messages.push_back({Role::assistant, format_assistant_turn(step), i > r.transition});
    s.messages.push_back({Role::human, step.observation, false});
  }
  return s;
}

const char* to_string(MixDirection direction) noexcept {
  return direction == MixDirection::agent ? "agent" : "general";
}

MixDirection mix_direction_from_string(std::string_view text) {
  if (text == "agent") return MixDirection::agent;
  if (text == "general") return MixDirection::general;
  fail(ErrorCode::config_error, "mix direction must be 'agent' or 'general'");
}

void MixConfig::validate() const {
  if (!(eta >= 0.0 && eta <= 1.0)) fail(ErrorCode::config_error, "mix.eta must lie in [0,1]");
}

std::vector<DatasetSample> mix(std::vector<DatasetSample> agent,
                               std::vector<DatasetSample> general, const MixConfig& cfg) {
  cfg.validate();
  Rng rng(cfg.seed);
  const double share = cfg.agent_share();
  if (share == 1.0) {
    shuffle(agent, rng);
    return agent;
  }
  if (share == 0.0) {
    shuffle(general, rng);
    return general;
  }
  if (agent.empty()) fail(ErrorCode::empty_pool, "agent sample pool is empty");
  if (general.empty()) fail(ErrorCode::empty_pool, "general sample pool is empty");
  shuffle(agent, rng);
  shuffle(general, rng);
  std::vector<DatasetSample> out;
  std::size_t a = 0, g = 0;
  for (;;) {
    if (rng.bernoulli(share)) {
      if (a == agent.size()) break;
      out.push_back(std::move(agent[a++]));
    } else {
      if (g == general.size()) break;
      out.push_back(std::move(general[g++]));
    }
  }
  return out;
}

void write_jsonl(std::span<const DatasetSample> samples, const std::filesystem::path& path) {
  std::vector<Json> lines;
  lines.reserve(samples.size());
  for (const auto& s : samples) lines.push_back(to_json(s));
  write_json_lines(lines, path);
}

std::vector<DatasetSample> read_jsonl(const std::filesystem::path& path) {
  std::vector<DatasetSample> out;
  std::size_t line = 0;
  for (const auto& j : read_json_lines(path)) {
    ++line;
    try {
      out.push_back(sample_from_json(j));
    } catch (const Error& e) {
      fail(e.code(), path.string() + ": record " + std::to_string(line) + ": " + e.detail());
    }
  }
  return out;
}

std::vector<DatasetSample> load_general(const std::filesystem::path& path) {
  std::vector<DatasetSample> out;
  std::size_t line = 0;
  for (const auto& j : read_json_lines(path)) {
    ++line;
    try {
      DatasetSample s;
      s.kind = SampleKind::general;
      s.id = j.contains("id") ? j["id"].get<std::string>() : "general/" + std::to_string(line);
      for (const auto& m : field(j, "messages")) {
        const Role role = role_from_string(field(m, "role").get<std::string>());
        s.messages.push_back({role, field(m, "content").get<std::string>(), role == Role::assistant});
      }
      if (s.messages.empty()) fail(ErrorCode::parse_error, "sample has no messages");
      out.push_back(std::move(s));
    } catch (const Json::exception& e) {
      fail(ErrorCode::parse_error, path.string() + ": record " + std::to_string(line) + ": " + e.what());
    } catch (const Error& e) {
      fail(e.code(), path.string() + ": record " + std::to_string(line) + ": " + e.detail());
    }
  }
  return out;
}

}  // namespace revtraj
