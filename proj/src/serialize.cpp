#include "revtraj/serialize.hpp"

#include <fstream>
#include <sstream>

#include "revtraj/error.hpp"

namespace revtraj {

namespace {

const Json& field(const Json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) fail(ErrorCode::parse_error, std::string("missing field '") + key + "'");
  return *it;
}

}  // namespace

Json to_json(const Step& step) {
  Json j;
  if (step.thought) j["thought"] = *step.thought;
  j["action"] = step.action;
  j["observation"] = step.observation;
  return j;
}

Json to_json(const Trajectory& t) {
  Json j;
  j["instruction"] = {{"env", t.instruction.env_name},
                      {"task_id", t.instruction.task_id},
                      {"text", t.instruction.text}};
  if (!t.initial_observation.empty()) j["initial_observation"] = t.initial_observation;
  j["steps"] = Json::array();
  for (const auto& s : t.steps) j["steps"].push_back(to_json(s));
  j["reward"] = t.reward ? Json(*t.reward) : Json(nullptr);
  j["terminal"] = t.terminal;
  j["kind"] = to_string(t.kind);
  return j;
}

Json to_json(const RevisionTrajectory& r) {
  Json j;
  j["instruction"] = {{"env", r.instruction.env_name},
                      {"task_id", r.instruction.task_id},
                      {"text", r.instruction.text}};
  if (!r.initial_observation.empty()) j["initial_observation"] = r.initial_observation;
  j["steps"] = Json::array();
  for (const auto& s : r.steps) j["steps"].push_back(to_json(s));
  j["reward"] = r.reward;
  j["terminal"] = true;
  j["kind"] = to_string(r.kind);
  j["divergence"] = r.divergence;
  j["transition"] = r.transition;
  j["bad_length"] = r.bad_length;
  j["bad_reward"] = r.bad_reward;
  j["signal"] = {{"index", r.signal.thought_index}, {"text", r.signal.assistant_text}};
  j["source"] = to_string(r.source);
  return j;
}

Step step_from_json(const Json& j) {
  try {
    Step s;
    if (auto it = j.find("thought"); it != j.end() && !it->is_null())
      s.thought = it->get<std::string>();
    s.action = field(j, "action").get<std::string>();
    s.observation = field(j, "observation").get<std::string>();
    return s;
  } catch (const Json::exception& e) {
    fail(ErrorCode::parse_error, std::string("step: ") + e.what());
  }
}

namespace {

Instruction instruction_from_json(const Json& j) {
  const Json& ins = field(j, "instruction");
  return Instruction{field(ins, "env").get<std::string>(), field(ins, "task_id").get<std::string>(),
                     field(ins, "text").get<std::string>()};
}

std::vector<Step> steps_from_json(const Json& j) {
  std::vector<Step> steps;
  for (const auto& s : field(j, "steps")) steps.push_back(step_from_json(s));
  return steps;
}

}  // namespace

Trajectory trajectory_from_json(const Json& j) {
  try {
    Trajectory t;
    t.instruction = instruction_from_json(j);
    t.initial_observation = j.value("initial_observation", std::string());
    t.steps = steps_from_json(j);
    if (const Json& r = field(j, "reward"); !r.is_null()) t.reward = r.get<double>();
    t.terminal = field(j, "terminal").get<bool>();
    t.kind = trajectory_kind_from_string(field(j, "kind").get<std::string>());
    return t;
  } catch (const Json::exception& e) {
    fail(ErrorCode::parse_error, std::string("trajectory: ") + e.what());
  }
}

RevisionTrajectory revision_from_json(const Json& j) {
  try {
    RevisionTrajectory r;
    r.instruction = instruction_from_json(j);
    r.initial_observation = j.value("initial_observation", std::string());
    r.steps = steps_from_json(j);
    r.reward = field(j, "reward").get<double>();
    r.kind = trajectory_kind_from_string(field(j, "kind").get<std::string>());
    r.divergence = field(j, "divergence").get<std::size_t>();
    r.transition = field(j, "transition").get<std::size_t>();
    r.bad_length = field(j, "bad_length").get<std::size_t>();
    r.bad_reward = field(j, "bad_reward").get<double>();
    const Json& sig = field(j, "signal");
    r.signal.thought_index = field(sig, "index").get<int>();
    r.signal.assistant_text = field(sig, "text").get<std::string>();
    r.source = revision_source_from_string(field(j, "source").get<std::string>());
    if (r.transition >= r.steps.size())
      fail(ErrorCode::parse_error, "revision transition outside its steps");
    r.signal.human_ack = r.steps[r.transition].observation;
    return r;
  } catch (const Json::exception& e) {
    fail(ErrorCode::parse_error, std::string("revision: ") + e.what());
  }
}

void write_json_lines(std::span<const Json> values, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::io_error, "cannot open " + path.string() + " for writing");
  for (const auto& v : values) out << v.dump() << '\n';
  out.flush();
  if (!out) fail(ErrorCode::io_error, "write failed for " + path.string());
}

std::vector<Json> read_json_lines(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::io_error, "cannot open " + path.string());
  std::vector<Json> values;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    try {
      values.push_back(Json::parse(line));
    } catch (const Json::parse_error& e) {
      fail(ErrorCode::parse_error,
           path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return values;
}

void write_json_file(const Json& value, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::io_error, "cannot open " + path.string() + " for writing");
  out << value.dump(2) << '\n';
  if (!out) fail(ErrorCode::io_error, "write failed for " + path.string());
}

Json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::io_error, "cannot open " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  try {
    return Json::parse(buffer.str());
  } catch (const Json::parse_error& e) {
    fail(ErrorCode::parse_error, path.string() + ": " + e.what());
  }
}

}  // namespace revtraj
