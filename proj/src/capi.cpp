#include "revtraj/revtraj.h"

#include <atomic>
#include <cstdlib>
#include <cstring>
#include <memory>
#include <mutex>
#include <string>

#include "revtraj/config.hpp"
#include "revtraj/craft_env.hpp"
#include "revtraj/error.hpp"
#include "revtraj/graded_env.hpp"
#include "revtraj/judge.hpp"
#include "revtraj/mcts.hpp"
#include "revtraj/pipeline.hpp"

using namespace revtraj;

struct rt_context {
  RunConfig config;
  std::atomic<bool> cancel{false};
  std::mutex log_mutex;
  rt_log_fn log_fn = nullptr;
  void* log_user = nullptr;
};

struct rt_env {
  std::unique_ptr<Environment> env;
  EnvState state;
  bool started = false;
};

namespace {

thread_local std::string last_error;

rt_status status_of(ErrorCode code) { return static_cast<rt_status>(static_cast<int>(code) + 1); }

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

template <class F>
rt_status guarded(F&& body) {
  try {
    last_error.clear();
    body();
    return RT_OK;
  } catch (const Error& e) {
    last_error = e.what();
    return status_of(e.code());
  } catch (const Json::exception& e) {
    last_error = std::string("JSON error: ") + e.what();
    return RT_ERR_PARSE;
  } catch (const std::exception& e) {
    last_error = e.what();
    return RT_ERR_INTERNAL;
  } catch (...) {
    last_error = "unknown error";
    return RT_ERR_INTERNAL;
  }
}

void require(const void* p, const char* what) {
  if (!p) fail(ErrorCode::invalid_argument, std::string(what) + " must not be NULL");
}

Json parse_json(const char* text, const char* what) {
  try {
    return Json::parse(text);
  } catch (const Json::exception& e) {
    fail(ErrorCode::parse_error, std::string(what) + " is not valid JSON: " + e.what());
  }
}

LogSink sink_for(rt_context* ctx) {
  return [ctx](const std::string& line) {
    std::lock_guard<std::mutex> lock(ctx->log_mutex);
    if (ctx->log_fn) ctx->log_fn(line.c_str(), ctx->log_user);
  };
}

}  // namespace

extern "C" {

const char* rt_version(void) { return "0.1.0"; }

const char* rt_status_name(rt_status status) {
  if (status == RT_OK) return "Ok";
  const int i = static_cast<int>(status);
  if (i >= 1 && i <= static_cast<int>(ErrorCode::cancelled) + 1)
    return to_string(static_cast<ErrorCode>(i - 1));
  return "Internal";
}

const char* rt_last_error_message(void) { return last_error.c_str(); }

void rt_free_string(char* s) { std::free(s); }

const char* rt_config_reference(void) {
  static const std::string text = config_reference();
  return text.c_str();
}

rt_status rt_context_create(const char* config_json, rt_context** out) {
  if (out) *out = nullptr;
  return guarded([&] {
    require(out, "out");
    auto ctx = std::make_unique<rt_context>();
    const bool empty = !config_json || !*config_json;
    ctx->config = config_from_json(empty ? Json::object() : parse_json(config_json, "config"));
    *out = ctx.release();
  });
}

void rt_context_destroy(rt_context* ctx) { delete ctx; }

rt_status rt_context_config(const rt_context* ctx, char** out_json) {
  if (out_json) *out_json = nullptr;
  return guarded([&] {
    require(ctx, "ctx");
    require(out_json, "out_json");
    *out_json = dup_string(to_json(ctx->config).dump(2));
  });
}

void rt_context_set_log(rt_context* ctx, rt_log_fn fn, void* user) {
  if (!ctx) return;
  std::lock_guard<std::mutex> lock(ctx->log_mutex);
  ctx->log_fn = fn;
  ctx->log_user = user;
}

void rt_request_cancel(rt_context* ctx) {
  if (ctx) ctx->cancel.store(true);
}

rt_status rt_collect(rt_context* ctx, int iteration, int force, char** out_manifest_json) {
  if (out_manifest_json) *out_manifest_json = nullptr;
  return guarded([&] {
    require(ctx, "ctx");
    require(out_manifest_json, "out_manifest_json");
    ctx->cancel.store(false);
    IterationSummary s = run_iteration(ctx->config, iteration, force != 0, &ctx->cancel, sink_for(ctx));
    *out_manifest_json = dup_string(s.manifest.dump(2));
  });
}

rt_status rt_evaluate(rt_context* ctx, const char* mode, size_t max_rounds,
                      const char* failures_path, char** out_json) {
  if (out_json) *out_json = nullptr;
  return guarded([&] {
    require(ctx, "ctx");
    require(mode, "mode");
    require(out_json, "out_json");
    EvalMode m;
    if (std::strcmp(mode, "test") == 0)
      m = EvalMode::test;
    else if (std::strcmp(mode, "revision") == 0)
      m = EvalMode::revision_eval;
    else
      fail(ErrorCode::invalid_argument, std::string("eval mode must be test or revision, not '") +
                                            mode + "'");
    std::optional<std::filesystem::path> failures;
    if (failures_path && *failures_path) failures = failures_path;
    EvalRun run = run_eval(ctx->config, m, max_rounds, failures, sink_for(ctx));
    Json reports = Json::array(), tables = Json::array();
    for (const auto& r : run.reports) {
      reports.push_back(r.to_json());
      tables.push_back(r.table());
    }
    *out_json = dup_string(
        Json{{"reports", reports}, {"tables", tables}, {"warnings", run.warnings}}.dump(2));
  });
}

rt_status rt_stats(const char* iteration_dir, int loops, int revision_length, char** out_json) {
  if (out_json) *out_json = nullptr;
  return guarded([&] {
    require(iteration_dir, "iteration_dir");
    require(out_json, "out_json");
    StatsOptions opt;
    opt.loops = loops != 0;
    opt.revision_length = revision_length != 0;
    *out_json = dup_string(iteration_stats(iteration_dir, opt).dump(2));
  });
}

rt_status rt_env_open(const char* name, size_t max_rounds, rt_env** out) {
  if (out) *out = nullptr;
  return guarded([&] {
    require(name, "name");
    require(out, "out");
    EnvOptions options{max_rounds ? max_rounds : 100};
    auto h = std::make_unique<rt_env>();
    if (std::strcmp(name, "craft") == 0)
      h->env = std::make_unique<CraftEnv>(bundled_craft_spec(), options);
    else if (std::strcmp(name, "graded") == 0)
      h->env = std::make_unique<GradedPathEnv>(bundled_graded_spec(), options);
    else
      fail(ErrorCode::invalid_argument, std::string("unknown bundled environment '") + name + "'");
    *out = h.release();
  });
}

void rt_env_close(rt_env* env) { delete env; }

rt_status rt_env_tasks(const rt_env* env, char** out_json) {
  if (out_json) *out_json = nullptr;
  return guarded([&] {
    require(env, "env");
    require(out_json, "out_json");
    *out_json = dup_string(Json(env->env->task_ids()).dump());
  });
}

rt_status rt_env_reset(rt_env* env, const char* task_id, char** out_json) {
  if (out_json) *out_json = nullptr;
  return guarded([&] {
    require(env, "env");
    require(task_id, "task_id");
    require(out_json, "out_json");
    ResetResult r = env->env->reset(task_id);
    env->state = r.state;
    env->started = true;
    *out_json = dup_string(Json{{"instruction", r.instruction.text}, {"observation", r.observation}}.dump());
  });
}

rt_status rt_env_step(rt_env* env, const char* action, char** out_json) {
  if (out_json) *out_json = nullptr;
  return guarded([&] {
    require(env, "env");
    require(action, "action");
    require(out_json, "out_json");
    if (!env->started) fail(ErrorCode::invalid_argument, "rt_env_reset must be called first");
    StepOutcome o = env->env->step(env->state, action);
    env->state = o.state;
    *out_json = dup_string(Json{{"observation", o.result.observation},
                                {"reward", o.result.reward ? Json(*o.result.reward) : Json(nullptr)},
                                {"done", o.result.done}}
                               .dump());
  });
}

rt_status rt_env_replay(rt_env* env, const char* task_id, const char* actions_json, int finalize,
                        char** out_json) {
  if (out_json) *out_json = nullptr;
  return guarded([&] {
    require(env, "env");
    require(task_id, "task_id");
    require(actions_json, "actions_json");
    require(out_json, "out_json");
    const Json a = parse_json(actions_json, "actions_json");
    if (!a.is_array()) fail(ErrorCode::invalid_argument, "actions_json must be an array");
    const auto actions = a.get<std::vector<std::string>>();
    *out_json = dup_string(to_json(env->env->replay(task_id, actions, finalize != 0)).dump());
  });
}

rt_status rt_judge_render_prompt(const char* query_json, char** out_prompt) {
  if (out_prompt) *out_prompt = nullptr;
  return guarded([&] {
    require(query_json, "query_json");
    require(out_prompt, "out_prompt");
    const Json j = parse_json(query_json, "query_json");
    if (!j.is_object()) fail(ErrorCode::invalid_argument, "query_json must be an object");
    for (const char* key : {"task_description", "current_action", "current_observation"})
      if (!j.contains(key) || !j[key].is_string())
        fail(ErrorCode::invalid_argument, std::string("query_json needs a string '") + key + "'");
    JudgeQuery q;
    q.task_description = j["task_description"].get<std::string>();
    q.current_action = j["current_action"].get<std::string>();
    q.current_observation = j["current_observation"].get<std::string>();
    if (j.contains("history"))
      for (const auto& s : j["history"]) q.history.push_back(step_from_json(s));
    *out_prompt = dup_string(render_prompt(q));
  });
}

rt_status rt_judge_parse_verdict(const char* completion, char** out_json) {
  if (out_json) *out_json = nullptr;
  return guarded([&] {
    require(completion, "completion");
    require(out_json, "out_json");
    const Verdict v = parse_verdict(completion);
    *out_json = dup_string(Json{{"label", to_string(v.label)}, {"reason", v.reason}}.dump());
  });
}

double rt_uct_score(double value_sum, size_t visits, size_t parent_visits, double c_uct) {
  return uct_score(value_sum, visits, parent_visits, c_uct);
}

}  // extern "C"
