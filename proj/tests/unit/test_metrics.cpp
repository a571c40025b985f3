#include <doctest.h>

#include "helpers.hpp"
#include "oracles.hpp"
#include "revtraj/craft_env.hpp"
#include "revtraj/error.hpp"
#include "revtraj/graded_env.hpp"
#include "revtraj/metrics.hpp"
#include "revtraj/revision.hpp"

using namespace revtraj;

namespace {

// Failure trajectories of ScriptedOracle(eps) episodes that ended with reward 0.
std::vector<Trajectory> failures(CraftEnv& env, double eps, std::size_t want, std::uint64_t seed) {
  ScriptedOracle noisy(env, eps);
  std::vector<Trajectory> out;
  const auto ids = env.task_ids();
  for (std::uint64_t s = seed; out.size() < want; ++s) {
    std::vector<Trajectory> eps_out;
    std::vector<std::string> one{ids[s % ids.size()]};
    PolicyContext ctx;
    auto start = env.reset(one[0]);
    ctx.instruction = start.instruction;
    ctx.initial_observation = start.observation;
    Rng rng(s);
    auto r = rollout(noisy, env, ctx, start.state, 30, rng);
    if (r.reward != 0.0 || r.steps.size() < 2) continue;
    Trajectory t;
    t.instruction = start.instruction;
    t.initial_observation = start.observation;
    t.steps = r.steps;
    t.reward = 0.0;
    t.terminal = true;
    out.push_back(t);
  }
  return out;
}

}  // namespace

TEST_CASE("evaluate examples") {
  CraftEnv env;
  ScriptedOracle exact(env, 0.0);
  const auto ids = env.task_ids();
  auto report = evaluate(exact, env, ids, 100, 0);
  CHECK(report.tasks.size() == 20);
  CHECK(report.average_reward == 1.0);
  CHECK(report.success_rate == 1.0);

  RandomPolicy random(env);
  auto a = evaluate(random, env, ids, 30, 5);
  auto b = evaluate(random, env, ids, 30, 5);
  CHECK(a.to_json() == b.to_json());

  // No bundled craft task has a one-action plan.
  for (const auto& id : ids) CHECK(craft_plan(env.spec(), env.spec().task(id).target, 1, {}).size() > 1);
  auto one = evaluate(exact, env, ids, 1, 0);
  CHECK(one.average_reward == 0.0);
  CHECK(env.max_rounds() == 100);  // restored after evaluation

  std::vector<std::string> with_unknown{"plank", "nope"};
  auto flagged = evaluate(exact, env, with_unknown, 100, 0);
  CHECK(flagged.tasks[1].flagged);
  CHECK(flagged.tasks[1].reward == 0.0);
  CHECK(flagged.average_reward == 0.5);
}

TEST_CASE("report invariants") {
  GradedPathEnv env;
  ScriptedOracle noisy(env, 0.5);
  auto r = evaluate(noisy, env, env.task_ids(), 10, 3);
  CHECK(r.average_reward >= 0.0);
  CHECK(r.average_reward <= 1.0);
  CHECK(r.success_rate <= 1.0);
  CHECK(r.tasks.size() == env.task_ids().size());
  const Json j = r.to_json();
  CHECK(j["mode"] == "test");
  CHECK(j["tasks"].size() == r.tasks.size());
  CHECK(r.table().find("average") != std::string::npos);
}

TEST_CASE("revision_eval examples") {
  CraftEnv env;
  ScriptedOracle exact(env, 0.0);
  auto f = failures(env, 0.6, 10, 100);
  Rng rng(5);
  auto report = revision_eval(exact, env, f, rng, 50);
  CHECK(report.tasks.size() == 10);
  CHECK(report.excluded == 0);
  CHECK(report.average_reward == 1.0);
  CHECK(env.max_rounds() == 100);

  Rng e(1);
  auto empty = revision_eval(exact, env, std::vector<Trajectory>{}, e);
  CHECK(empty.tasks.empty());
  CHECK(empty.average_reward == 0.0);

  Rng r1(77), r2(77);
  auto x = revision_eval(exact, env, f, r1);
  auto y = revision_eval(exact, env, f, r2);
  for (std::size_t i = 0; i < f.size(); ++i) {
    CHECK(x.tasks[i].truncation == y.tasks[i].truncation);
    CHECK(*x.tasks[i].truncation >= 1);
    CHECK(*x.tasks[i].truncation <= f[i].length() - 1);
  }
}

TEST_CASE("revision_eval excludes non-reproducible prefixes") {
  CraftEnv env;
  ScriptedOracle exact(env, 0.0);
  auto f = failures(env, 0.6, 6, 300);
  for (auto& t : f)
    for (auto& s : t.steps) s.observation += " (tampered)";
  Rng rng(2);
  auto report = revision_eval(exact, env, f, rng);
  CHECK(report.excluded == f.size());
  for (const auto& t : report.tasks) {
    CHECK_FALSE(t.reward.has_value());
    CHECK(t.note.rfind("NonDeterministicEnv", 0) == 0);
  }
  CHECK(report.average_reward == 0.0);

  std::vector<Trajectory> tiny{testutil::traj({{"a", "o"}}, 0.0, "plank")};
  Rng r(0);
  CHECK(revision_eval(exact, env, tiny, r).tasks[0].flagged);
}

TEST_CASE("revision_length examples") {
  auto make = [](std::size_t transition, std::size_t bad_len) {
    RevisionTrajectory r;
    r.transition = transition;
    r.bad_length = bad_len;
    return r;
  };
  std::vector<RevisionTrajectory> one{make(4, 6)};
  CHECK(revision_length(one) == 4.0);
  std::vector<RevisionTrajectory> two{make(2, 3), make(4, 4)};
  CHECK(revision_length(two) == 3.0);
  CHECK_FALSE(revision_length(std::vector<RevisionTrajectory>{}).has_value());

  // Direct revisions cut at the bad length, so the mean equals the mean bad length.
  std::vector<RevisionTrajectory> direct{make(3, 3), make(5, 5), make(7, 7)};
  double mean_tb = 0;
  for (const auto& r : direct) mean_tb += static_cast<double>(r.bad_length);
  CHECK(revision_length(direct) == mean_tb / 3.0);
}

TEST_CASE("loop counting examples") {
  using V = std::vector<std::string>;
  V xy{"x", "y", "x", "y", "x", "y"};
  CHECK(max_block_repetition(xy, 2) == 3);
  V aaa{"a", "a", "a"};
  CHECK(max_block_repetition(aaa, 1) == 3);
  V abc{"a", "b", "c"};
  for (std::size_t L = 1; L <= 5; ++L) CHECK(max_block_repetition(abc, L) == 1);
  V five;
  for (int i = 0; i < 5; ++i) {
    five.push_back("open door");
    five.push_back("close door");
  }
  CHECK(max_block_repetition(five, 2) == 5);
  CHECK_THROWS_AS(max_block_repetition(abc, 0), Error);

  std::vector<V> trajs{xy, abc};
  auto profile = loop_profile(trajs);
  REQUIRE(profile.size() == 5);
  CHECK(profile[1] == 2.0);
  CHECK_THROWS_AS(loop_profile(std::vector<V>{}), Error);
}

TEST_CASE("loop counting matches the brute-force counter") {
  // Every binary sequence up to length 12, plus random longer ones.
  for (std::size_t n = 0; n <= 12; ++n) {
    for (unsigned mask = 0; mask < (1u << n); ++mask) {
      std::vector<std::string> a;
      for (std::size_t i = 0; i < n; ++i) a.push_back(mask & (1u << i) ? "b" : "a");
      for (std::size_t L = 1; L <= 5; ++L) CHECK(max_block_repetition(a, L) == oracle::max_repeats(a, L));
    }
  }
  Rng rng(6);
  for (int trial = 0; trial < 2000; ++trial) {
    std::vector<std::string> a;
    const std::size_t n = 13 + rng.index(18);
    const std::size_t k = 1 + rng.index(3);
    for (std::size_t i = 0; i < n; ++i) a.push_back(std::string(1, char('a' + rng.index(k))));
    for (std::size_t L = 1; L <= 5; ++L) CHECK(max_block_repetition(a, L) == oracle::max_repeats(a, L));
  }
}
