#include "revtraj/http_env.hpp"

namespace revtraj {

namespace {

HttpEndpoint endpoint_for(const RemoteEnvConfig& c) {
  HttpEndpoint e;
  e.url = c.base_url;
  e.timeout_ms = c.timeout_ms;
  e.retries = c.retries;
  return e;
}

std::string strip_trailing_slash(std::string path) {
  while (path.size() > 1 && path.back() == '/') path.pop_back();
  return path == "/" ? "" : path;
}

}  // namespace

HttpEnvironment::HttpEnvironment(RemoteEnvConfig config, EnvOptions options)
    : Environment(options),
      config_(std::move(config)),
      http_(endpoint_for(config_), ErrorCode::env_unavailable),
      base_path_(strip_trailing_slash(http_.base_path())) {}

HttpEnvironment::RemoteReset HttpEnvironment::remote_reset(const std::string& task_id) {
  const HttpResponse res = http_.post(base_path_ + "/reset", Json{{"task_id", task_id}});
  if (res.status == 404) fail(ErrorCode::unknown_task, config_.name + " task '" + task_id + "'");
  if (res.status != 200)
    fail(ErrorCode::env_unavailable, "/reset returned " + std::to_string(res.status));
  try {
    return RemoteReset{res.body.at("instruction").get<std::string>(),
                       res.body.at("observation").get<std::string>(),
                       res.body.at("session").get<std::string>()};
  } catch (const Json::exception& e) {
    fail(ErrorCode::env_unavailable, std::string("malformed /reset reply: ") + e.what());
  }
}

StepResult HttpEnvironment::remote_step(const std::string& session, std::string_view action) {
  const HttpResponse res =
      http_.post(base_path_ + "/step", Json{{"session", session}, {"action", std::string(action)}});
  if (res.status == 404 || res.status == 410)
    fail(ErrorCode::session_expired, "session '" + session + "' expired");
  if (res.status != 200)
    fail(ErrorCode::env_unavailable, "/step returned " + std::to_string(res.status));
  try {
    StepResult r;
    r.observation = res.body.at("observation").get<std::string>();
    r.done = res.body.at("done").get<bool>();
    if (auto it = res.body.find("reward"); it != res.body.end() && !it->is_null())
      r.reward = it->get<double>();
    return r;
  } catch (const Json::exception& e) {
    fail(ErrorCode::env_unavailable, std::string("malformed /step reply: ") + e.what());
  }
}

ResetResult HttpEnvironment::reset(const std::string& task_id) {
  RemoteReset rr = remote_reset(task_id);
  live_session_ = rr.session;
  live_actions_.clear();
  ResetResult r;
  r.instruction = Instruction{config_.name, task_id, rr.instruction};
  r.state.task_id = task_id;
  r.state.session = rr.session;
  r.observation = std::move(rr.observation);
  return r;
}

void HttpEnvironment::sync(const EnvState& state) {
  if (state.session == live_session_ && state.actions == live_actions_) return;
  RemoteReset rr = remote_reset(state.task_id);
  live_session_ = rr.session;
  live_actions_.clear();
  for (const auto& a : state.actions) {
    remote_step(live_session_, a);
    live_actions_.push_back(a);
  }
}

StepResult HttpEnvironment::apply(EnvState& state, std::string_view action) {
  sync(state);
  StepResult r = remote_step(live_session_, action);
  live_actions_.emplace_back(action);
  state.session = live_session_;
  if (r.done && !r.reward) r.reward = 0.0;
  return r;
}

double HttpEnvironment::terminal_reward(const EnvState& state) const {
  return state.reward.value_or(0.0);
}

}  // namespace revtraj
