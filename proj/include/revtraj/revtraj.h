/* C interface to the revtraj engine. All strings are UTF-8. Strings returned
 * through char** out-parameters are owned by the caller and must be released
 * with rt_free_string. On failure the out-parameter is left NULL and
 * rt_last_error_message() describes the error for the calling thread. */
#ifndef REVTRAJ_H
#define REVTRAJ_H

#include <stddef.h>

#if defined(_WIN32)
#  if defined(REVTRAJ_BUILDING)
#    define RT_API __declspec(dllexport)
#  else
#    define RT_API __declspec(dllimport)
#  endif
#else
#  define RT_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum rt_status {
  RT_OK = 0,
  RT_ERR_INVALID_ARGUMENT = 1,
  RT_ERR_INVALID_PAIR = 2,
  RT_ERR_NOT_TERMINAL = 3,
  RT_ERR_TRANSITION_BEFORE_DIVERGENCE = 4,
  RT_ERR_TRANSITION_OUT_OF_RANGE = 5,
  RT_ERR_UNKNOWN_TASK = 6,
  RT_ERR_ALREADY_TERMINAL = 7,
  RT_ERR_INVALID_SNAPSHOT = 8,
  RT_ERR_SESSION_EXPIRED = 9,
  RT_ERR_ENV_UNAVAILABLE = 10,
  RT_ERR_POLICY_UNAVAILABLE = 11,
  RT_ERR_JUDGE_UNAVAILABLE = 12,
  RT_ERR_SEARCH_EXHAUSTED = 13,
  RT_ERR_RENDER = 14,
  RT_ERR_EMPTY_POOL = 15,
  RT_ERR_IO = 16,
  RT_ERR_PARSE = 17,
  RT_ERR_CONFIG = 18,
  RT_ERR_MISSING_PRIOR_ITERATION = 19,
  RT_ERR_REFUSES_OVERWRITE = 20,
  RT_ERR_NON_DETERMINISTIC_ENV = 21,
  RT_ERR_CANCELLED = 22,
  RT_ERR_INTERNAL = 99
} rt_status;

typedef struct rt_context rt_context;
typedef struct rt_env rt_env;

typedef void (*rt_log_fn)(const char* line, void* user);

RT_API const char* rt_version(void);
/* CamelCase error name, e.g. "MissingPriorIteration". */
RT_API const char* rt_status_name(rt_status status);
/* Message of the last failed call on this thread; "" if none. */
RT_API const char* rt_last_error_message(void);
RT_API void rt_free_string(char* s);

/* Every config key with its default, one per line. Static storage. */
RT_API const char* rt_config_reference(void);

/* config_json may be NULL or "" for all defaults. Unknown keys fail. */
RT_API rt_status rt_context_create(const char* config_json, rt_context** out);
RT_API void rt_context_destroy(rt_context* ctx);
/* Effective configuration with defaults filled in. */
RT_API rt_status rt_context_config(const rt_context* ctx, char** out_json);
/* Progress lines; may be called from worker threads, one line at a time. */
RT_API void rt_context_set_log(rt_context* ctx, rt_log_fn fn, void* user);
/* Asks a running rt_collect to stop after in-flight tasks. Safe from a
 * signal handler. */
RT_API void rt_request_cancel(rt_context* ctx);

/* Collects iteration `iteration` (1-based) and returns its manifest. */
RT_API rt_status rt_collect(rt_context* ctx, int iteration, int force, char** out_manifest_json);

/* mode is "test" or "revision". failures_path may be NULL. Returns
 * {reports:[...], tables:[...], warnings:[...]}. */
RT_API rt_status rt_evaluate(rt_context* ctx, const char* mode, size_t max_rounds,
                             const char* failures_path, char** out_json);

/* Manifest, recounts and optional metrics of one iteration directory. */
RT_API rt_status rt_stats(const char* iteration_dir, int loops, int revision_length,
                          char** out_json);

/* Single-episode access to a bundled environment ("craft" or "graded"). */
RT_API rt_status rt_env_open(const char* name, size_t max_rounds, rt_env** out);
RT_API void rt_env_close(rt_env* env);
/* JSON array of task ids. */
RT_API rt_status rt_env_tasks(const rt_env* env, char** out_json);
/* Starts an episode: {instruction, observation}. */
RT_API rt_status rt_env_reset(rt_env* env, const char* task_id, char** out_json);
/* Advances the current episode: {observation, reward, done}. */
RT_API rt_status rt_env_step(rt_env* env, const char* action, char** out_json);
/* actions_json is a JSON array of strings. Returns trajectory JSON. */
RT_API rt_status rt_env_replay(rt_env* env, const char* task_id, const char* actions_json,
                               int finalize, char** out_json);

/* query_json: {task_description, history:[{action,observation}], current_action,
 * current_observation}. */
RT_API rt_status rt_judge_render_prompt(const char* query_json, char** out_prompt);
/* Returns {label, reason}. */
RT_API rt_status rt_judge_parse_verdict(const char* completion, char** out_json);

/* Q + c * sqrt(ln(parent_visits) / visits); +inf for visits == 0. */
RT_API double rt_uct_score(double value_sum, size_t visits, size_t parent_visits, double c_uct);

#ifdef __cplusplus
}
#endif

#endif /* REVTRAJ_H */
