#include <doctest.h>

#include <httplib.h>

#include <atomic>
#include <thread>

#include "helpers.hpp"
#include "oracles.hpp"
#include "revtraj/craft_env.hpp"
#include "revtraj/error.hpp"
#include "revtraj/graded_env.hpp"
#include "revtraj/http_env.hpp"
#include "revtraj/rng.hpp"

using namespace revtraj;

namespace {

ErrorCode code_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::invalid_argument;
}

StepOutcome walk(Environment& env, const std::string& task, const std::vector<std::string>& actions) {
  StepOutcome out{env.reset(task).state, {}};
  for (const auto& a : actions) out = env.step(out.state, a);
  return out;
}

}  // namespace

TEST_CASE("craft reset, step and reward") {
  CraftEnv env;
  auto r = env.reset("plank");
  CHECK(r.instruction.text == "Craft 1 plank.");
  CHECK(r.observation.find("craft 4 plank using 1 wood") != std::string::npos);
  CHECK(r.observation.find("Gatherable: wood") != std::string::npos);

  auto s1 = env.step(r.state, "get 1 wood");
  CHECK(s1.result.observation == "Got 1 wood");
  CHECK_FALSE(s1.result.done);
  CHECK_FALSE(s1.result.reward.has_value());

  auto s2 = env.step(s1.state, "craft 1 plank");
  CHECK(s2.result.done);
  CHECK(s2.result.reward == 1.0);
  CHECK(code_of([&] { env.step(s2.state, "inventory"); }) == ErrorCode::already_terminal);

  auto empty = env.step(r.state, "craft 1 plank");
  CHECK(empty.result.observation.rfind("Could not find enough items to craft", 0) == 0);
  CHECK_FALSE(empty.result.done);

  CHECK(code_of([&] { env.reset("no-such-task"); }) == ErrorCode::unknown_task);
}

TEST_CASE("unrecognised actions carry the sentinel and consume a round") {
  CraftEnv craft;
  GradedPathEnv graded;
  for (Environment* env : {static_cast<Environment*>(&craft), static_cast<Environment*>(&graded)}) {
    auto r = env->reset(env->task_ids().front());
    auto out = env->step(r.state, "dance wildly");
    CHECK(is_invalid_action_observation(out.result.observation));
    CHECK(out.state.step_count == 1);
  }
}

TEST_CASE("give up ends the episode with the terminal rule") {
  CraftEnv craft;
  auto out = walk(craft, "plank", {"get 1 wood", "give up"});
  CHECK(out.result.done);
  CHECK(out.result.reward == 0.0);

  GradedPathEnv graded;
  auto g = walk(graded, "tea", {"fill kettle", "boil water", "give up"});
  CHECK(g.result.done);
  CHECK(g.result.reward == doctest::Approx(0.5));
}

TEST_CASE("graded reset lists the goal and its actions") {
  GradedPathEnv env;
  auto r = env.reset("tea");
  CHECK(r.instruction.text == "Prepare a cup of tea.");
  CHECK(r.observation.find("boil water") != std::string::npos);
  CHECK(env.spec().task("tea").subgoals.size() == 4);
}

TEST_CASE("graded reward equals the brute-force subgoal prefix score") {
  GradedPathSpec spec;
  spec.version = 1;
  for (std::size_t n = 1; n <= 4; ++n) {
    GradedPathTask t;
    t.id = "t" + std::to_string(n);
    t.goal = "Goal.";
    for (std::size_t i = 0; i < n; ++i) t.subgoals.push_back("s" + std::to_string(i));
    t.distractors = {"d"};
    spec.tasks.push_back(t);
  }
  GradedPathEnv env(spec);
  Rng rng(3);
  for (const auto& task : spec.tasks) {
    std::vector<std::string> alphabet = task.subgoals;
    alphabet.push_back("d");
    for (int trial = 0; trial < 300; ++trial) {
      std::vector<std::string> actions;
      const std::size_t len = rng.index(9);
      for (std::size_t i = 0; i < len; ++i) actions.push_back(alphabet[rng.index(alphabet.size())]);
      Trajectory t = env.replay(task.id, actions, true);
      const std::size_t k = oracle::subgoal_prefix_bruteforce(task.subgoals, t.actions());
      CHECK(*t.reward == static_cast<double>(k) / static_cast<double>(task.subgoals.size()));
      CHECK(subgoal_progress(task.subgoals, t.actions()) == k);
    }
  }
}

TEST_CASE("craft reward is 1 exactly when the target is held") {
  CraftEnv env;
  Rng rng(9);
  for (const auto& id : env.task_ids()) {
    const auto space = env.action_space(id);
    for (int trial = 0; trial < 20; ++trial) {
      std::vector<std::string> actions;
      for (int i = 0; i < 12; ++i) actions.push_back(space[rng.index(space.size())]);
      EnvState s = env.reset(id).state;
      for (const auto& a : actions) {
        if (s.done) break;
        s = env.step(s, a).state;
      }
      env.terminate(s);
      const auto& task = env.spec().task(id);
      auto it = s.vars.find(task.target);
      const bool held = it != s.vars.end() && it->second >= task.count;
      CHECK((*s.reward == 1.0) == held);
    }
  }
}

TEST_CASE("expert plans solve every bundled task") {
  CraftEnv craft;
  GradedPathEnv graded;
  for (Environment* env : {static_cast<Environment*>(&craft), static_cast<Environment*>(&graded)}) {
    for (const auto& id : env->task_ids()) {
      auto r = env->reset(id);
      EnvState s = r.state;
      std::vector<Step> hist;
      while (!s.done) {
        auto a = env->planner()->expert_action(id, hist);
        REQUIRE(a.has_value());
        auto out = env->step(s, *a);
        hist.push_back(testutil::step(*a, out.result.observation));
        s = out.state;
      }
      CHECK(s.reward == 1.0);
      CHECK_FALSE(env->planner()->expert_action(id, hist).has_value());
    }
  }
}

TEST_CASE("craft plan on the bundled book") {
  const auto& spec = bundled_craft_spec();
  CHECK(craft_plan(spec, "plank", 1, {}) == std::vector<std::string>{"get 1 wood", "craft 1 plank"});
  CHECK(craft_plan(spec, "plank", 1, {{"plank", 2}}).empty());
  CHECK(craft_plan(spec, "stick", 1, {}) ==
        std::vector<std::string>{"get 1 wood", "craft 2 plank", "craft 1 stick"});
}

TEST_CASE("spec parsing rejects bad input") {
  CHECK(code_of([] { parse_craft_spec("version 1\nrecipe a 1 <- b 1\nrecipe b 1 <- a 1\n"); }) ==
        ErrorCode::config_error);
  CHECK(code_of([] { parse_craft_spec("version 1\ngather x\ntask t y 1\n"); }) ==
        ErrorCode::config_error);
  CHECK(code_of([] { parse_craft_spec("version 1\nfrobnicate\n"); }) == ErrorCode::parse_error);
  CHECK(code_of([] { parse_graded_spec("version 1\ntask t Goal.\nend\n"); }) ==
        ErrorCode::config_error);
  CHECK(code_of([] { parse_graded_spec("version 1\ntask t Goal.\nsubgoal a\n"); }) ==
        ErrorCode::parse_error);
  CHECK(bundled_craft_spec().tasks.size() == 20);
  CHECK(bundled_graded_spec().tasks.size() == 20);
}

TEST_CASE("snapshots restore identical futures") {
  CraftEnv env;
  auto r = env.reset("torch");
  auto mid = env.step(r.state, "get 1 wood").state;
  const SnapshotToken tok = env.snapshot(mid);
  const std::vector<std::string> seq{"craft 1 plank", "inventory", "get 1 coal", "craft 1 stick"};
  std::vector<std::vector<std::string>> runs;
  for (int i = 0; i < 3; ++i) {
    EnvState s = env.restore(tok);
    std::vector<std::string> obs;
    for (const auto& a : seq) {
      auto out = env.step(s, a);
      obs.push_back(out.result.observation);
      s = out.state;
    }
    runs.push_back(obs);
  }
  CHECK(runs[0] == runs[1]);
  CHECK(runs[1] == runs[2]);

  auto done = walk(env, "plank", {"give up"}).state;
  CHECK(env.restore(env.snapshot(done)).done);

  CraftEnv other;
  CHECK(code_of([&] { other.restore(tok); }) == ErrorCode::invalid_snapshot);
}

TEST_CASE("replay examples") {
  CraftEnv env;
  std::vector<std::string> win{"get 1 wood", "craft 1 plank"};
  auto t = env.replay("plank", win);
  CHECK(t.reward == 1.0);
  CHECK(t.terminal);

  auto empty = env.replay("plank", {});
  CHECK(empty.length() == 0);
  CHECK_FALSE(empty.terminal);

  MaxRoundsGuard guard(env, 3);
  std::vector<std::string> many(10, "inventory");
  auto cut = env.replay("plank", many);
  CHECK(cut.length() == 3);
  CHECK(cut.terminal);
  CHECK(cut.reward == 0.0);
}

TEST_CASE("replay is deterministic across environment instances") {
  Rng rng(21);
  GradedPathEnv a, b;
  for (const auto& id : a.task_ids()) {
    const auto space = a.action_space(id);
    std::vector<std::string> actions;
    for (int i = 0; i < 8; ++i) actions.push_back(space[rng.index(space.size())]);
    CHECK(a.replay(id, actions, true) == b.replay(id, actions, true));
  }
}

TEST_CASE("round limit") {
  GradedPathEnv env(bundled_graded_spec(), EnvOptions{2});
  auto out = walk(env, "tea", {"fill kettle", "open fridge"});
  CHECK(out.state.done);
  CHECK(out.state.step_count == 2);
  CHECK(out.result.reward == doctest::Approx(0.25));
  CHECK(code_of([] { GradedPathEnv bad(bundled_graded_spec(), EnvOptions{0}); }) ==
        ErrorCode::config_error);
}

namespace {

// Deterministic counter server: task "count" ends when "stop" is sent, with
// reward 1 after exactly three "inc" actions.
struct CounterServer {
  httplib::Server server;
  std::thread thread;
  int port = 0;
  std::atomic<int> resets{0};
  std::atomic<int> fail_next{0};
  std::map<std::string, int> sessions;
  std::mutex mu;
  std::atomic<bool> expire_all{false};

  CounterServer() {
    server.Post("/env/reset", [this](const httplib::Request& req, httplib::Response& res) {
      auto body = nlohmann::json::parse(req.body);
      if (fail_next > 0) {
        --fail_next;
        res.status = 503;
        return;
      }
      if (body["task_id"] != "count") {
        res.status = 404;
        return;
      }
      std::lock_guard lock(mu);
      const std::string sid = "s" + std::to_string(++resets);
      sessions[sid] = 0;
      res.set_content(nlohmann::json{{"instruction", "Count to three."},
                                     {"observation", "Counter at 0."},
                                     {"session", sid}}
                          .dump(),
                      "application/json");
    });
    server.Post("/env/step", [this](const httplib::Request& req, httplib::Response& res) {
      auto body = nlohmann::json::parse(req.body);
      std::lock_guard lock(mu);
      const std::string sid = body["session"];
      if (expire_all || !sessions.count(sid)) {
        res.status = 410;
        return;
      }
      int& c = sessions[sid];
      nlohmann::json out;
      const std::string action = body["action"];
      if (action == "inc") {
        ++c;
        out = {{"observation", "Counter at " + std::to_string(c) + "."}, {"done", false}};
      } else if (action == "stop") {
        out = {{"observation", "Stopped."}, {"done", true}, {"reward", c == 3 ? 1.0 : 0.0}};
      } else {
        out = {{"observation", "Invalid action: " + action}, {"done", false}};
      }
      res.set_content(out.dump(), "application/json");
    });
    port = server.bind_to_any_port("127.0.0.1");
    thread = std::thread([this] { server.listen_after_bind(); });
    server.wait_until_ready();
  }
  ~CounterServer() {
    server.stop();
    thread.join();
  }
  RemoteEnvConfig config() const {
    RemoteEnvConfig c;
    c.name = "counter";
    c.base_url = "http://127.0.0.1:" + std::to_string(port) + "/env";
    c.tasks = {"count"};
    c.timeout_ms = 2000;
    c.retries = 2;
    return c;
  }
};

}  // namespace

TEST_CASE("remote environment protocol") {
  CounterServer srv;
  HttpEnvironment env(srv.config());
  auto r = env.reset("count");
  CHECK(r.instruction.text == "Count to three.");
  CHECK(r.observation == "Counter at 0.");

  auto s1 = env.step(r.state, "inc");
  auto s2 = env.step(s1.state, "inc");
  // Branch from s1 again: the client must replay into a fresh session.
  auto branch = env.step(s1.state, "stop");
  CHECK(branch.result.done);
  CHECK(branch.result.reward == 0.0);
  auto s3 = env.step(s2.state, "inc");
  auto fin = env.step(s3.state, "stop");
  CHECK(fin.result.reward == 1.0);

  auto t = env.replay("count", std::vector<std::string>{"inc", "inc", "inc", "stop"});
  CHECK(t.reward == 1.0);

  CHECK(code_of([&] { env.reset("missing"); }) == ErrorCode::unknown_task);

  // Transient 5xx replies are retried.
  srv.fail_next = 2;
  CHECK_NOTHROW(env.reset("count"));
  srv.fail_next = 5;
  CHECK(code_of([&] { env.reset("count"); }) == ErrorCode::env_unavailable);

  srv.fail_next = 0;
  auto live = env.reset("count").state;
  srv.expire_all = true;
  CHECK(code_of([&] { env.step(live, "inc"); }) == ErrorCode::session_expired);
}

TEST_CASE("remote environment unreachable") {
  RemoteEnvConfig c;
  c.base_url = "http://127.0.0.1:1/env";
  c.tasks = {"x"};
  c.timeout_ms = 200;
  c.retries = 0;
  HttpEnvironment env(c);
  CHECK(code_of([&] { env.reset("x"); }) == ErrorCode::env_unavailable);
}
