#pragma once

#include <string>
#include <vector>

#include "revtraj/env.hpp"
#include "revtraj/http.hpp"

namespace revtraj {

struct RemoteEnvConfig {
  std::string name = "remote";
  // Server root; the client posts to <base>/reset and <base>/step.
  std::string base_url;
  std::vector<std::string> tasks;
  long timeout_ms = 30000;
  int retries = 2;
};

// Client for an AgentGym-style environment server:
//   POST /reset {task_id}         -> {instruction, observation, session}
//   POST /step  {session, action} -> {observation, reward?, done}
// 404 on /reset means an unknown task; 404 or 410 on /step means the session
// expired. Branching from an older state re-creates a session and replays the
// state's actions, so the server must be deterministic per task.
class HttpEnvironment final : public Environment {
 public:
  explicit HttpEnvironment(RemoteEnvConfig config, EnvOptions options = {});

  std::string name() const override { return config_.name; }
  std::vector<std::string> task_ids() const override { return config_.tasks; }
  ResetResult reset(const std::string& task_id) override;

 protected:
  StepResult apply(EnvState& state, std::string_view action) override;
  // A forced stop carries no server verdict and scores 0.
  double terminal_reward(const EnvState& state) const override;

 private:
  struct RemoteReset {
    std::string instruction;
    std::string observation;
    std::string session;
  };
  RemoteReset remote_reset(const std::string& task_id);
  StepResult remote_step(const std::string& session, std::string_view action);
  void sync(const EnvState& state);

  RemoteEnvConfig config_;
  JsonHttpClient http_;
  std::string base_path_;
  std::string live_session_;
  std::vector<std::string> live_actions_;
};

}  // namespace revtraj
