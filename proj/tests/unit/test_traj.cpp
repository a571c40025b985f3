#include <doctest.h>

#include "helpers.hpp"
#include "oracles.hpp"
#include "revtraj/error.hpp"
#include "revtraj/rng.hpp"
#include "revtraj/serialize.hpp"
#include "revtraj/traj.hpp"

using namespace revtraj;
using testutil::traj;

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

RevisionSignal signal0() {
  RevisionSignal s;
  s.thought_index = 0;
  s.assistant_text = "I realize my approach was flawed. I need to revise it.";
  return s;
}

}  // namespace

TEST_CASE("shared_prefix examples") {
  auto a = traj({{"x", "o1"}, {"y", "o2"}, {"z", "o3"}}, 0);
  CHECK(shared_prefix(a, a) == 3);

  auto b = traj({{"x", "o1"}, {"y", "o2"}}, 0);
  auto c = traj({{"x", "o1"}, {"z", "o3"}}, 0);
  CHECK(shared_prefix(b, c) == 1);

  auto d = traj({{"x", "o1"}}, 0);
  auto e = traj({{"x", "other"}}, 0);
  CHECK(shared_prefix(d, e) == 0);

  auto other = traj({{"x", "o1"}}, 0, "different-task");
  CHECK(code_of([&] { shared_prefix(d, other); }) == ErrorCode::invalid_pair);
}

TEST_CASE("shared_prefix is symmetric and bounded") {
  Rng rng(11);
  for (int n = 0; n < 300; ++n) {
    std::vector<std::pair<std::string, std::string>> x, y;
    const std::size_t lx = rng.index(6), ly = rng.index(6);
    for (std::size_t i = 0; i < lx; ++i) x.push_back({std::string(1, char('a' + rng.index(2))), "o"});
    for (std::size_t i = 0; i < ly; ++i) y.push_back({std::string(1, char('a' + rng.index(2))), "o"});
    auto tx = traj(x, 0), ty = traj(y, 0);
    const std::size_t t = shared_prefix(tx, ty);
    CHECK(t == shared_prefix(ty, tx));
    CHECK(shared_prefix(tx, tx) == lx);
    std::size_t expect = 0;
    while (expect < lx && expect < ly && x[expect] == y[expect]) ++expect;
    CHECK(t == expect);
  }
}

TEST_CASE("classify_pair examples") {
  FilterConfig f{0.2, 0.5};
  auto pair_of = [](double rb, double rg) {
    return TrajectoryPair{traj({{"a", "o"}, {"b", "o"}}, rb), traj({{"a", "o"}, {"c", "o"}}, rg), 1};
  };
  CHECK(classify_pair(pair_of(0.1, 0.6), f) == PairVerdict::accept);
  CHECK(classify_pair(pair_of(0.25, 0.9), f) == PairVerdict::bad_above_beta);
  CHECK(classify_pair(pair_of(0.0, 0.5), f) == PairVerdict::good_not_above_alpha);
  CHECK(classify_pair(pair_of(0.0, 0.2), f) == PairVerdict::good_not_above_beta);

  TrajectoryPair running = pair_of(0.0, 1.0);
  running.good.reward.reset();
  running.good.terminal = false;
  CHECK(code_of([&] { classify_pair(running, f); }) == ErrorCode::not_terminal);
}

TEST_CASE("classify_pair matches the three-inequality oracle on a reward grid") {
  for (auto [beta, alpha] : {std::pair{0.2, 0.5}, {0.2, 0.7}, {0.2, 1.0}, {0.1, 0.3}}) {
    FilterConfig f{beta, alpha};
    for (int i = 0; i <= 20; ++i)
      for (int j = 0; j <= 20; ++j) {
        const double rb = i / 20.0, rg = j / 20.0;
        TrajectoryPair p{traj({{"a", "o"}}, rb), traj({{"b", "o"}}, rg), 0};
        CHECK((classify_pair(p, f) == PairVerdict::accept) ==
              oracle::pair_accepted(rb, rg, beta, alpha));
      }
  }
}

TEST_CASE("filter thresholds are validated") {
  CHECK_NOTHROW(FilterConfig{0.2, 1.0}.validate());
  CHECK(code_of([] { FilterConfig{0.5, 0.5}.validate(); }) == ErrorCode::config_error);
  CHECK(code_of([] { FilterConfig{0.0, 0.5}.validate(); }) == ErrorCode::config_error);
  CHECK(code_of([] { FilterConfig{0.2, 1.5}.validate(); }) == ErrorCode::config_error);
}

TEST_CASE("splice examples") {
  auto s1 = std::pair<std::string, std::string>{"s1", "o"};
  auto bad = traj({s1, {"b2", "o"}, {"b3", "o"}}, 0.0);
  auto good = traj({s1, {"g2", "o"}}, 1.0);
  TrajectoryPair p = make_pair(bad, good);
  REQUIRE(p.divergence == 1);

  auto r = splice(p, 2, signal0());
  std::vector<std::string> actions;
  for (const auto& s : r.steps) actions.push_back(s.action);
  CHECK(actions == std::vector<std::string>{"s1", "b2", signal0().assistant_text, "g2"});
  CHECK(r.steps[2].observation == "OK.");
  CHECK(r.reward == 1.0);
  CHECK(r.kind == TrajectoryKind::optimal);

  auto direct = splice(p, 3, signal0(), RevisionSource::direct);
  actions.clear();
  for (const auto& s : direct.steps) actions.push_back(s.action);
  CHECK(actions == std::vector<std::string>{"s1", "b2", "b3", signal0().assistant_text, "g2"});
  CHECK(direct.source == RevisionSource::direct);

  CHECK(code_of([&] { splice(p, 1, signal0()); }) == ErrorCode::transition_before_divergence);
  CHECK(code_of([&] { splice(p, 4, signal0()); }) == ErrorCode::transition_out_of_range);
}

TEST_CASE("splice length law, structure and prefix stability") {
  Rng rng(5);
  for (int n = 0; n < 500; ++n) {
    const std::size_t t = rng.index(4);
    const std::size_t tb = t + 1 + rng.index(5), tg = t + 1 + rng.index(5);
    std::vector<std::pair<std::string, std::string>> b, g;
    for (std::size_t i = 0; i < t; ++i) b.push_back({"p" + std::to_string(i), "o"});
    g = b;
    for (std::size_t i = t; i < tb; ++i) b.push_back({"b" + std::to_string(i), "ob"});
    for (std::size_t i = t; i < tg; ++i) g.push_back({"g" + std::to_string(i), "og"});
    TrajectoryPair p = make_pair(traj(b, 0.0), traj(g, 0.8));
    REQUIRE(p.divergence == t);
    for (std::size_t tp = t + 1; tp <= tb; ++tp) {
      auto r = splice(p, tp, signal0());
      CHECK(r.steps.size() == tp + 1 + (tg - t));
      const Step sig{std::nullopt, signal0().assistant_text, "OK."};
      CHECK(r.steps == oracle::splice(p.bad.steps, p.good.steps, t, tp, sig));
      CHECK(r.good_length() == tg);
      if (tp < tb) {
        auto next = splice(p, tp + 1, signal0());
        std::size_t diff = 0;
        for (std::size_t i = 0; i < tp + 1; ++i) diff += next.steps[i] != r.steps[i];
        CHECK(diff == 1);
        CHECK(std::equal(r.steps.begin() + static_cast<long>(tp), r.steps.end(),
                         next.steps.begin() + static_cast<long>(tp + 1)));
      }
    }
  }
}

TEST_CASE("trajectory invariants") {
  auto t = traj({{"a", "o"}}, 1.0);
  t.kind = TrajectoryKind::optimal;
  CHECK_NOTHROW(t.validate());
  t.reward = 0.5;
  CHECK(code_of([&] { t.validate(); }) == ErrorCode::invalid_argument);
  t.kind = TrajectoryKind::good;
  t.terminal = false;
  CHECK(code_of([&] { t.validate(); }) == ErrorCode::invalid_argument);
}

TEST_CASE("trajectory and revision JSON round trip") {
  auto bad = traj({{"a", "o"}, {"b", "o2"}}, 0.0);
  bad.steps[0].thought = "first";
  bad.initial_observation = "start";
  auto good = traj({{"a", "o"}, {"c", "o3"}}, 0.75);
  good.initial_observation = "start";
  CHECK(trajectory_from_json(to_json(bad)) == bad);
  auto r = splice(make_pair(bad, good), 2, signal0());
  CHECK(revision_from_json(to_json(r)) == r);
  const Json j = to_json(r);
  CHECK(j["signal"]["index"] == 0);
  CHECK(j["divergence"] == 1);
  CHECK(j["transition"] == 2);
  CHECK(j["source"] == "model_guided");
}
