#include <doctest.h>

#include <functional>

#include "revtraj/config.hpp"
#include "revtraj/error.hpp"

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

void leaf_keys(const Json& j, const std::string& prefix, std::vector<std::string>& out) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string key = prefix.empty() ? it.key() : prefix + "." + it.key();
    if (it->is_object())
      leaf_keys(*it, key, out);
    else
      out.push_back(key);
  }
}

}  // namespace

TEST_CASE("defaults mirror the reference settings") {
  RunConfig c;
  CHECK(c.mcts.k_rollouts == 8);
  CHECK(c.mcts.max_depth == 20);
  CHECK(c.mcts.c_uct == 0.25);
  CHECK(c.mcts.expand_width == 4);
  CHECK(c.mcts.expand_temperature == 1.0);
  CHECK(c.plan.beta == 0.2);
  CHECK(c.plan.alphas == std::vector<double>{0.5, 0.7, 1.0});
  CHECK(c.plan.epochs_hint(1) == 3);
  CHECK(c.plan.epochs_hint(2) == 1);
  CHECK(c.mix.eta == 0.2);
  CHECK(c.env.max_rounds == 100);
  CHECK(c.eval.max_rounds == 100);
  CHECK(c.eval.revision_max_rounds == 50);
  CHECK(c.revision.max_pairs_per_task == 32);
  CHECK_FALSE(c.carry_forward);
  CHECK_NOTHROW(c.validate());
}

TEST_CASE("config JSON round trip and partial files") {
  RunConfig c;
  c.seed = 9;
  c.policy.kind = "random";
  c.mcts.simulations = 12;
  c.plan.alphas = {0.4, 0.9};
  c.plan.epochs = {2, 1};
  c.mix.direction = MixDirection::general;
  c.revision.mode = TransitionMode::direct;
  c.env.remote.push_back(RemoteEnvConfig{"shop", "http://h:1/x", {"a", "b"}, 100, 1});
  CHECK(to_json(config_from_json(to_json(c))) == to_json(c));

  auto p = config_from_json(Json::parse(R"({"mcts":{"simulations":5},"plan":{"alphas":[0.5,0.6]}})"));
  CHECK(p.mcts.simulations == 5);
  CHECK(p.mcts.k_rollouts == 8);
  CHECK(p.plan.epochs == std::vector<int>{3, 1});
}

TEST_CASE("invalid configs are rejected") {
  try {
    config_from_json(Json::parse(R"({"mcts":{"simulation":5}})"));
    FAIL("expected ConfigError");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::config_error);
    CHECK(e.detail() == "unknown config key 'mcts.simulation'");
  }
  CHECK(code_of([] { config_from_json(Json::parse(R"({"bogus":1})")); }) == ErrorCode::config_error);
  CHECK(code_of([] { config_from_json(Json::parse(R"({"seed":"x"})")); }) == ErrorCode::config_error);

  auto bad = [](const std::function<void(RunConfig&)>& edit) {
    RunConfig c;
    edit(c);
    return code_of([&] { c.validate(); });
  };
  CHECK(bad([](RunConfig& c) { c.plan.alphas = {0.7, 0.5}; }) == ErrorCode::config_error);
  CHECK(bad([](RunConfig& c) { c.plan.beta = 0.6; }) == ErrorCode::config_error);
  CHECK(bad([](RunConfig& c) { c.mix.eta = -0.1; }) == ErrorCode::config_error);
  CHECK(bad([](RunConfig& c) { c.mcts.max_depth = 200; }) == ErrorCode::config_error);
  CHECK(bad([](RunConfig& c) { c.policy.kind = "magic"; }) == ErrorCode::config_error);
  CHECK(bad([](RunConfig& c) { c.env.suite = {"nowhere"}; }) == ErrorCode::config_error);
}

TEST_CASE("the key reference lists every config key") {
  std::vector<std::string> keys;
  leaf_keys(to_json(RunConfig{}), "", keys);
  const std::string ref = config_reference();
  for (const auto& k : keys) CHECK_MESSAGE(ref.find("  " + k + " ") != std::string::npos, k);
  CHECK(keys.size() == 38);
}

TEST_CASE("factories") {
  RunConfig c;
  auto env = make_environment(c, "craft");
  CHECK(env->name() == "craft");
  CHECK(make_policy(c, *env)->name() == "oracle");
  CHECK(make_judge(c, *env)->name() == "oracle");
  c.judge.kind = "all_good";
  CHECK(make_judge(c, *env)->name() == "all_Good");
  CHECK(code_of([&] { make_environment(c, "nowhere"); }) == ErrorCode::config_error);
}
