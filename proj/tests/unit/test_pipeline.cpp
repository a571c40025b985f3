#include <doctest.h>

#include <atomic>
#include <fstream>
#include <sstream>

#include "helpers.hpp"
#include "revtraj/config.hpp"
#include "revtraj/dataset.hpp"
#include "revtraj/error.hpp"
#include "revtraj/pipeline.hpp"
#include "revtraj/serialize.hpp"

using namespace revtraj;
namespace fs = std::filesystem;

namespace {

RunConfig small_run(const fs::path& out, int workers = 2) {
  RunConfig c;
  c.seed = 42;
  c.output = out.string();
  c.workers = workers;
  c.env.tasks_per_env = 4;
  c.mcts.simulations = 40;
  return c;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

std::size_t lines(const fs::path& p) { return read_json_lines(p).size(); }

ErrorCode code_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::invalid_argument;
}

}  // namespace

TEST_CASE("iteration layout and manifest counts") {
  const auto root = testutil::scratch_dir("pipeline_layout");
  auto cfg = small_run(root);
  auto s = run_iteration(cfg, 1, false);
  const fs::path dir = root / "iter_1";
  CHECK(s.directory == dir);
  for (const char* f : {"revisions.jsonl", "goods.jsonl", "mixed.jsonl", "manifest.json"})
    CHECK(fs::exists(dir / f));
  CHECK(fs::exists(dir / "trees" / "craft__plank.json"));
  const Json m = read_json_file(dir / "manifest.json");
  CHECK(m["iteration"] == 1);
  CHECK(m["alpha"] == 0.5);
  CHECK(m["epochs_hint"] == 3);
  CHECK(m["totals"]["revision"] == lines(dir / "revisions.jsonl"));
  CHECK(m["totals"]["good"] == lines(dir / "goods.jsonl"));
  CHECK(m["samples"]["mixed"] == lines(dir / "mixed.jsonl"));
  CHECK(m["envs"]["craft"]["tasks"] == 4);
  CHECK(m["envs"]["graded"]["test_size"] == 4);
  CHECK(m["totals"]["simulations"].get<int>() <= 8 * 40);
  // No general data with eta 0.2: a warning, and agent samples only.
  REQUIRE(s.warnings.size() == 1);
  CHECK(s.warnings[0].find("no general data") != std::string::npos);
  CHECK(m["samples"]["mixed"] == m["samples"]["agent"]);

  CHECK(code_of([&] { run_iteration(cfg, 1, false); }) == ErrorCode::refuses_overwrite);
  CHECK_NOTHROW(run_iteration(cfg, 1, true));
  CHECK(code_of([&] { run_iteration(cfg, 3, false); }) == ErrorCode::missing_prior_iteration);
  CHECK(code_of([&] { run_iteration(cfg, 4, false); }) == ErrorCode::config_error);
}

TEST_CASE("iterations are byte-identical regardless of worker count") {
  const auto a = testutil::scratch_dir("pipeline_a");
  const auto b = testutil::scratch_dir("pipeline_b");
  run_iteration(small_run(a, 1), 1, false);
  run_iteration(small_run(b, 4), 1, false);
  for (const auto& entry : fs::recursive_directory_iterator(a / "iter_1")) {
    if (!entry.is_regular_file()) continue;
    const auto rel = fs::relative(entry.path(), a);
    CHECK_MESSAGE(slurp(entry.path()) == slurp(b / rel), rel.string());
  }
}

TEST_CASE("sample masks in a collected iteration") {
  const auto root = testutil::scratch_dir("pipeline_masks");
  auto cfg = small_run(root);
  cfg.mix.eta = 1.0;
  run_iteration(cfg, 1, false);
  const auto dir = root / "iter_1";
  std::size_t checked = 0;
  for (const auto& s : read_jsonl(dir / "mixed.jsonl")) {
    for (const auto& m : s.messages)
      if (m.role == Role::human) CHECK_FALSE(m.train);
    if (s.kind == SampleKind::good) {
      for (const auto& m : s.messages)
        if (m.role == Role::assistant) CHECK(m.train);
    } else {
      REQUIRE(s.meta.transition.has_value());
      std::size_t a = 0;
      for (const auto& m : s.messages) {
        if (m.role != Role::assistant) continue;
        CHECK(m.train == (a >= *s.meta.transition));
        ++a;
      }
      ++checked;
    }
  }
  CHECK(checked == lines(dir / "revisions.jsonl"));
  CHECK(checked > 0);
}

TEST_CASE("general data is mixed in") {
  const auto root = testutil::scratch_dir("pipeline_general");
  auto cfg = small_run(root);
  cfg.mix.general_path = (fs::path(REVTRAJ_SOURCE_DIR) / "data" / "general_sample.jsonl").string();
  cfg.mix.eta = 0.5;
  auto s = run_iteration(cfg, 1, false);
  CHECK(s.manifest["samples"]["general_pool"] == 16);
  CHECK(s.manifest["samples"]["mixed_general"].get<int>() > 0);
  CHECK(s.warnings.empty());
}

TEST_CASE("later iterations use the alpha schedule") {
  const auto root = testutil::scratch_dir("pipeline_schedule");
  auto cfg = small_run(root);
  cfg.mix.eta = 1.0;
  for (int i = 1; i <= 3; ++i) run_iteration(cfg, i, false);
  for (const auto& j : read_json_lines(root / "iter_3" / "goods.jsonl"))
    CHECK(trajectory_from_json(j).reward == 1.0);
  CHECK(read_json_file(root / "iter_3" / "manifest.json")["alpha"] == 1.0);
  CHECK(read_json_file(root / "iter_2" / "manifest.json")["epochs_hint"] == 1);

  cfg.carry_forward = true;
  auto carried = run_iteration(cfg, 2, true);
  CHECK(carried.manifest["totals"]["carried_good"].get<int>() >= 0);
  for (const auto& j : read_json_lines(root / "iter_2" / "goods.jsonl"))
    CHECK(*trajectory_from_json(j).reward >= 0.7);
}

TEST_CASE("direct mode tags revisions") {
  const auto root = testutil::scratch_dir("pipeline_direct");
  auto cfg = small_run(root);
  cfg.revision.mode = TransitionMode::direct;
  run_iteration(cfg, 1, false);
  const auto revs = read_json_lines(root / "iter_1" / "revisions.jsonl");
  REQUIRE_FALSE(revs.empty());
  for (const auto& j : revs) {
    CHECK(j["source"] == "direct");
    CHECK(j["transition"] == j["bad_length"]);
  }
}

TEST_CASE("cancellation writes a partial manifest") {
  const auto root = testutil::scratch_dir("pipeline_cancel");
  std::atomic<bool> stop{true};
  auto s = run_iteration(small_run(root), 1, false, &stop);
  CHECK(s.cancelled);
  CHECK(s.manifest["cancelled"] == true);
  CHECK(s.manifest["envs"]["craft"]["skipped_tasks"] == 4);
}

TEST_CASE("evaluation and stats") {
  const auto root = testutil::scratch_dir("pipeline_eval");
  auto cfg = small_run(root);
  cfg.policy.epsilon = 0.0;
  auto test = run_eval(cfg, EvalMode::test, 100, std::nullopt);
  REQUIRE(test.reports.size() == 2);
  for (const auto& r : test.reports) CHECK(r.average_reward == 1.0);

  // Without failures there is nothing to resume.
  auto rev = run_eval(cfg, EvalMode::revision_eval, 50, std::nullopt);
  CHECK(rev.reports[0].tasks.empty());
  CHECK_FALSE(rev.warnings.empty());

  cfg.policy.epsilon = 0.3;
  run_iteration(cfg, 1, false);
  StatsOptions opts;
  opts.loops = true;
  opts.revision_length = true;
  const Json st = iteration_stats(root / "iter_1", opts);
  CHECK(st["counts"]["revision"] == lines(root / "iter_1" / "revisions.jsonl"));
  CHECK(st["manifest"]["iteration"] == 1);
  CHECK(st["loop_profile"].size() == 5);
  CHECK(st["revision_length"].is_number());
  CHECK(code_of([&] { iteration_stats(root / "iter_9", opts); }) == ErrorCode::io_error);
}
