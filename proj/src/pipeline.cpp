#include "revtraj/pipeline.hpp"

#include <map>
#include <mutex>
#include <thread>
#include <unordered_set>

#include "revtraj/error.hpp"
#include "revtraj/text.hpp"

namespace revtraj {

namespace fs = std::filesystem;

namespace {

struct Job {
  std::size_t env_index = 0;
  std::string env;
  std::size_t task_index = 0;
  std::string task_id;
};

struct TaskOutcome {
  bool ran = false;
  bool ok = false;
  std::string error;
  Json tree;
  std::size_t iterations = 0, simulations = 0, failures = 0, harvested = 0, duplicates = 0;
  std::size_t pairs = 0;
  RevisionBatch batch;
};

struct EnvCounts {
  std::size_t tasks = 0, tasks_with_revision = 0, iterations = 0, simulations = 0,
              rollout_failures = 0, harvested = 0, duplicates = 0, pairs = 0, revision = 0,
              good = 0, carried_good = 0, judge_calls = 0, judge_skips = 0, fallbacks = 0,
              test_size = 0, failed_tasks = 0, skipped_tasks = 0;

  Json to_json() const {
    return Json{{"tasks", tasks},
                {"tasks_with_revision", tasks_with_revision},
                {"search_iterations", iterations},
                {"simulations", simulations},
                {"rollout_failures", rollout_failures},
                {"harvested", harvested},
                {"duplicates", duplicates},
                {"pairs", pairs},
                {"revision", revision},
                {"good", good},
                {"carried_good", carried_good},
                {"judge_calls", judge_calls},
                {"judge_skips", judge_skips},
                {"fallbacks", fallbacks},
                {"test_size", test_size},
                {"failed_tasks", failed_tasks},
                {"skipped_tasks", skipped_tasks}};
  }

  EnvCounts& operator+=(const EnvCounts& o) {
    tasks += o.tasks;
    tasks_with_revision += o.tasks_with_revision;
    iterations += o.iterations;
    simulations += o.simulations;
    rollout_failures += o.rollout_failures;
    harvested += o.harvested;
    duplicates += o.duplicates;
    pairs += o.pairs;
    revision += o.revision;
    good += o.good;
    carried_good += o.carried_good;
    judge_calls += o.judge_calls;
    judge_skips += o.judge_skips;
    fallbacks += o.fallbacks;
    test_size += o.test_size;
    failed_tasks += o.failed_tasks;
    skipped_tasks += o.skipped_tasks;
    return *this;
  }
};

struct Components {
  std::unique_ptr<Environment> env;
  std::unique_ptr<Policy> policy;
  std::unique_ptr<Judge> judge;
};

std::uint64_t task_seed(const RunConfig& cfg, int iteration, const Job& job) {
  std::uint64_t s = mix_seed(cfg.seed, static_cast<std::uint64_t>(iteration));
  s = mix_seed(s, text::fnv1a(job.env));
  return mix_seed(s, job.task_index);
}

TaskOutcome run_task(const RunConfig& cfg, int iteration, const FilterConfig& filter,
                     const Job& job, Components& c) {
  TaskOutcome out;
  out.ran = true;
  const std::uint64_t seed = task_seed(cfg, iteration, job);
  Search search(*c.env, *c.policy, job.task_id, cfg.mcts, Rng(seed));
  SearchResult res = search.run();
  out.tree = res.tree.to_json();
  out.iterations = res.iterations;
  out.simulations = res.simulations;
  out.failures = res.failures;
  out.harvested = res.harvest.size();
  out.duplicates = res.duplicates;

  PairingConfig pairing{filter, cfg.revision.max_pairs_per_task, cfg.revision.reuse_bad};
  const auto pairs = build_pairs(res.harvest, pairing);
  out.pairs = pairs.size();
  out.batch = build_revisions(pairs, res.harvest, *c.judge, cfg.revision.mode, filter,
                              mix_seed(seed, 0x7265766973696f6eULL));
  out.ok = true;
  return out;
}

std::string sample_id(const Instruction& in, int iteration, const char* kind, std::size_t k) {
  return in.env_name + "/" + in.task_id + "/iter" + std::to_string(iteration) + "/" + kind + "/" +
         std::to_string(k);
}

std::size_t resolve_workers(const RunConfig& cfg, std::size_t jobs) {
  std::size_t n = cfg.workers > 0 ? static_cast<std::size_t>(cfg.workers)
                                   : std::max(1u, std::thread::hardware_concurrency());
  return std::max<std::size_t>(1, std::min(n, jobs));
}

}  // namespace

fs::path iteration_dir(const fs::path& root, int iteration) {
  return root / ("iter_" + std::to_string(iteration));
}

std::vector<std::pair<std::string, std::vector<std::string>>> task_suite(const RunConfig& cfg) {
  std::vector<std::pair<std::string, std::vector<std::string>>> suite;
  for (const auto& name : cfg.env.suite) {
    auto env = make_environment(cfg, name);
    auto ids = env->task_ids();
    if (cfg.env.tasks_per_env > 0 && ids.size() > cfg.env.tasks_per_env)
      ids.resize(cfg.env.tasks_per_env);
    suite.emplace_back(name, std::move(ids));
  }
  return suite;
}

IterationSummary run_iteration(const RunConfig& cfg, int iteration, bool force,
                               const std::atomic<bool>* cancel, const LogSink& log) {
  cfg.validate();
  const FilterConfig filter = cfg.plan.filter(iteration);
  const fs::path root(cfg.output);
  const fs::path dir = iteration_dir(root, iteration);
  if (iteration > 1 && !fs::exists(iteration_dir(root, iteration - 1) / "manifest.json"))
    fail(ErrorCode::missing_prior_iteration,
         "iteration " + std::to_string(iteration) + " needs " +
             iteration_dir(root, iteration - 1).string() + " to be collected first");
  if (fs::exists(dir)) {
    if (!force)
      fail(ErrorCode::refuses_overwrite, dir.string() + " already exists; pass --force to replace it");
    fs::remove_all(dir);
  }

  std::vector<DatasetSample> general;
  if (!cfg.mix.general_path.empty()) general = load_general(cfg.mix.general_path);

  const auto suite = task_suite(cfg);
  std::vector<Job> jobs;
  for (std::size_t e = 0; e < suite.size(); ++e)
    for (std::size_t t = 0; t < suite[e].second.size(); ++t)
      jobs.push_back(Job{e, suite[e].first, t, suite[e].second[t]});

  std::vector<TaskOutcome> outcomes(jobs.size());
  std::atomic<std::size_t> next{0};
  std::mutex log_mutex;
  auto emit = [&](const std::string& line) {
    if (!log) return;
    std::lock_guard<std::mutex> lock(log_mutex);
    log(line);
  };

  auto worker = [&]() {
    std::map<std::string, Components> parts;
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= jobs.size()) break;
      if (cancel && cancel->load()) continue;
      const Job& job = jobs[i];
      try {
        auto it = parts.find(job.env);
        if (it == parts.end()) {
          Components c;
          c.env = make_environment(cfg, job.env);
          c.policy = make_policy(cfg, *c.env);
          c.judge = make_judge(cfg, *c.env);
          it = parts.emplace(job.env, std::move(c)).first;
        }
        outcomes[i] = run_task(cfg, iteration, filter, job, it->second);
        emit("iter " + std::to_string(iteration) + " " + job.env + "/" + job.task_id + ": " +
             std::to_string(outcomes[i].harvested) + " harvested, " +
             std::to_string(outcomes[i].pairs) + " pairs, " +
             std::to_string(outcomes[i].batch.revisions.size()) + " revisions");
      } catch (const std::exception& e) {
        outcomes[i] = TaskOutcome{};
        outcomes[i].ran = true;
        outcomes[i].error = e.what();
        emit("iter " + std::to_string(iteration) + " " + job.env + "/" + job.task_id +
             " failed: " + outcomes[i].error);
      }
    }
  };

  const std::size_t n_workers = resolve_workers(cfg, jobs.size());
  if (n_workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> threads;
    for (std::size_t w = 0; w < n_workers; ++w) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
  }

  IterationSummary summary;
  summary.directory = dir;
  summary.cancelled = cancel && cancel->load();

  std::vector<EnvCounts> counts(suite.size());
  std::vector<RevisionTrajectory> revisions;
  std::vector<Trajectory> goods;
  std::unordered_set<std::string> good_keys;
  fs::create_directories(dir / "trees");
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    const Job& job = jobs[i];
    EnvCounts& c = counts[job.env_index];
    ++c.tasks;
    TaskOutcome& o = outcomes[i];
    if (!o.ran) {
      ++c.skipped_tasks;
      continue;
    }
    if (!o.ok) {
      ++c.failed_tasks;
      summary.warnings.push_back(job.env + "/" + job.task_id + ": " + o.error);
      continue;
    }
    c.iterations += o.iterations;
    c.simulations += o.simulations;
    c.rollout_failures += o.failures;
    c.harvested += o.harvested;
    c.duplicates += o.duplicates;
    c.pairs += o.pairs;
    c.revision += o.batch.revisions.size();
    c.good += o.batch.goods.size();
    c.judge_calls += o.batch.judge_calls;
    c.judge_skips += o.batch.judge_skips;
    c.fallbacks += o.batch.fallbacks;
    if (!o.batch.revisions.empty()) ++c.tasks_with_revision;
    if (o.failures)
      summary.warnings.push_back(job.env + "/" + job.task_id + ": " + std::to_string(o.failures) +
                                 " rollouts failed");
    if (o.batch.judge_skips)
      summary.warnings.push_back(job.env + "/" + job.task_id + ": " +
                                 std::to_string(o.batch.judge_skips) + " pairs skipped by the judge");
    write_json_file(o.tree, dir / "trees" / (job.env + "__" + job.task_id + ".json"));
    for (auto& r : o.batch.revisions) revisions.push_back(std::move(r));
    for (auto& g : o.batch.goods) {
      good_keys.insert(g.instruction.env_name + '\x1e' + g.instruction.task_id + '\x1e' +
                       action_key(g.steps));
      goods.push_back(std::move(g));
    }
  }
  for (std::size_t e = 0; e < suite.size(); ++e) counts[e].test_size = suite[e].second.size();

  if (cfg.carry_forward && iteration > 1) {
    const fs::path prior = iteration_dir(root, iteration - 1) / "goods.jsonl";
    if (fs::exists(prior)) {
      for (const auto& j : read_json_lines(prior)) {
        Trajectory t = trajectory_from_json(j);
        if (!t.reward || !filter.is_good(*t.reward)) continue;
        const std::string key = t.instruction.env_name + '\x1e' + t.instruction.task_id + '\x1e' +
                                action_key(t.steps);
        if (!good_keys.insert(key).second) continue;
        for (std::size_t e = 0; e < suite.size(); ++e)
          if (suite[e].first == t.instruction.env_name) {
            ++counts[e].good;
            ++counts[e].carried_good;
          }
        goods.push_back(std::move(t));
      }
    }
  }

  std::vector<DatasetSample> agent;
  std::map<std::string, std::size_t> per_task;
  std::vector<Json> revision_lines, good_lines;
  for (const auto& r : revisions) {
    revision_lines.push_back(to_json(r));
    const std::string k = r.instruction.env_name + "/" + r.instruction.task_id + "/r";
    agent.push_back(render_sample(r, iteration, sample_id(r.instruction, iteration, "revision",
                                                          per_task[k]++)));
  }
  for (const auto& g : goods) {
    good_lines.push_back(to_json(g));
    const std::string k = g.instruction.env_name + "/" + g.instruction.task_id + "/g";
    agent.push_back(render_sample(g, iteration, sample_id(g.instruction, iteration, "good",
                                                          per_task[k]++)));
  }
  write_json_lines(revision_lines, dir / "revisions.jsonl");
  write_json_lines(good_lines, dir / "goods.jsonl");

  MixConfig mix_cfg{cfg.mix.eta, cfg.mix.direction,
                    mix_seed(mix_seed(cfg.seed, static_cast<std::uint64_t>(iteration)), 0x6d6978)};
  const std::size_t agent_count = agent.size();
  std::vector<DatasetSample> mixed;
  if (general.empty() && mix_cfg.agent_share() != 1.0) {
    summary.warnings.push_back(
        "no general data (mix.general_path); mixed.jsonl holds agent samples only");
    mixed = mix(std::move(agent), {}, MixConfig{1.0, MixDirection::agent, mix_cfg.seed});
  } else {
    try {
      mixed = mix(agent, general, mix_cfg);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::empty_pool) throw;
      summary.warnings.push_back(std::string("mixing skipped: ") + e.what() +
                                 "; mixed.jsonl holds agent samples only");
      mixed = mix(std::move(agent), {}, MixConfig{1.0, MixDirection::agent, mix_cfg.seed});
    }
  }
  std::map<std::string, std::size_t> mixed_kinds{{"good", 0}, {"revision", 0}, {"general", 0}};
  for (const auto& s : mixed) ++mixed_kinds[to_string(s.kind)];
  write_jsonl(mixed, dir / "mixed.jsonl");

  if (summary.cancelled) summary.warnings.push_back("cancelled before every task ran");

  Json envs = Json::object();
  EnvCounts total;
  for (std::size_t e = 0; e < suite.size(); ++e) {
    envs[suite[e].first] = counts[e].to_json();
    total += counts[e];
  }
  Json m;
  m["iteration"] = iteration;
  m["seed"] = cfg.seed;
  m["alpha"] = filter.alpha;
  m["beta"] = filter.beta;
  m["epochs_hint"] = cfg.plan.epochs_hint(iteration);
  m["mode"] = to_string(cfg.revision.mode);
  m["eta"] = cfg.mix.eta;
  m["mix_direction"] = to_string(cfg.mix.direction);
  m["agent_share"] = mix_cfg.agent_share();
  m["carry_forward"] = cfg.carry_forward;
  m["policy"] = cfg.policy.kind;
  m["judge"] = cfg.judge.kind;
  m["mcts"] = to_json(cfg)["mcts"];
  m["envs"] = envs;
  m["totals"] = total.to_json();
  m["samples"] = {{"agent", agent_count},
                  {"general_pool", general.size()},
                  {"mixed", mixed.size()},
                  {"mixed_good", mixed_kinds["good"]},
                  {"mixed_revision", mixed_kinds["revision"]},
                  {"mixed_general", mixed_kinds["general"]}};
  m["warnings"] = summary.warnings;
  m["cancelled"] = summary.cancelled;
  write_json_file(m, dir / "manifest.json");
  summary.manifest = std::move(m);
  return summary;
}

EvalRun run_eval(const RunConfig& cfg, EvalMode mode, std::size_t max_rounds,
                 const std::optional<fs::path>& failures_path, const LogSink& log) {
  cfg.validate();
  EvalRun run;
  std::vector<Trajectory> from_file;
  if (failures_path)
    for (const auto& j : read_json_lines(*failures_path)) from_file.push_back(trajectory_from_json(j));

  for (const auto& [name, tasks] : task_suite(cfg)) {
    auto env = make_environment(cfg, name);
    auto policy = make_policy(cfg, *env);
    const std::uint64_t seed = mix_seed(cfg.seed, text::fnv1a(name));
    if (mode == EvalMode::test) {
      if (tasks.empty()) run.warnings.push_back(name + ": no tasks to evaluate");
      run.reports.push_back(evaluate(*policy, *env, tasks, max_rounds, seed));
    } else {
      std::vector<Trajectory> failures;
      if (failures_path) {
        for (const auto& t : from_file)
          if (t.instruction.env_name == name && t.reward && *t.reward == 0.0) failures.push_back(t);
      } else {
        std::vector<Trajectory> episodes;
        evaluate(*policy, *env, tasks, cfg.eval.max_rounds, seed, &episodes);
        for (auto& t : episodes)
          if (t.reward && *t.reward == 0.0) failures.push_back(std::move(t));
      }
      if (failures.empty()) run.warnings.push_back(name + ": no failed trajectories to resume");
      Rng rng(mix_seed(seed, 0x7265));
      run.reports.push_back(revision_eval(*policy, *env, failures, rng, max_rounds));
    }
    const auto& r = run.reports.back();
    if (r.excluded)
      run.warnings.push_back(name + ": " + std::to_string(r.excluded) + " tasks excluded");
    if (log)
      log(name + " " + to_string(mode) + ": average " + std::to_string(r.average_reward) +
          " over " + std::to_string(r.tasks.size() - r.excluded) + " tasks");
  }
  return run;
}

Json iteration_stats(const fs::path& directory, const StatsOptions& options) {
  if (!fs::is_directory(directory))
    fail(ErrorCode::io_error, directory.string() + " is not a directory");
  Json out;
  std::vector<std::string> warnings;
  const fs::path manifest = directory / "manifest.json";
  if (fs::exists(manifest)) {
    out["manifest"] = read_json_file(manifest);
  } else {
    out["manifest"] = nullptr;
    warnings.push_back("no manifest.json in " + directory.string());
  }

  std::vector<RevisionTrajectory> revisions;
  std::vector<Trajectory> goods;
  std::size_t mixed = 0;
  if (fs::exists(directory / "revisions.jsonl"))
    for (const auto& j : read_json_lines(directory / "revisions.jsonl"))
      revisions.push_back(revision_from_json(j));
  if (fs::exists(directory / "goods.jsonl"))
    for (const auto& j : read_json_lines(directory / "goods.jsonl"))
      goods.push_back(trajectory_from_json(j));
  if (fs::exists(directory / "mixed.jsonl")) mixed = read_json_lines(directory / "mixed.jsonl").size();
  out["counts"] = {{"revision", revisions.size()}, {"good", goods.size()}, {"mixed", mixed}};
  if (revisions.empty() && goods.empty()) warnings.push_back("no trajectories found");

  if (options.revision_length) {
    const auto len = revision_length(revisions);
    out["revision_length"] = len ? Json(*len) : Json(nullptr);
  }
  if (options.loops) {
    std::vector<std::vector<std::string>> actions;
    for (const auto& g : goods) actions.push_back(g.actions());
    for (const auto& r : revisions) {
      std::vector<std::string> a;
      for (std::size_t i = 0; i < r.steps.size(); ++i)
        if (i != r.transition) a.push_back(r.steps[i].action);
      actions.push_back(std::move(a));
    }
    if (actions.empty()) {
      out["loop_profile"] = nullptr;
    } else {
      out["loop_profile"] = loop_profile(actions, options.max_block);
    }
  }
  out["warnings"] = warnings;
  return out;
}

}  // namespace revtraj
