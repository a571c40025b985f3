/* Exercises the shared library through its C header only. */
#include <math.h>
#include <stdio.h>
#include <stdlib.h>
#include <string.h>

#include "revtraj/revtraj.h"

static int failures = 0;

#define EXPECT(cond)                                              \
  do {                                                            \
    if (!(cond)) {                                                \
      fprintf(stderr, "%s:%d: expected %s\n", __FILE__, __LINE__, #cond); \
      ++failures;                                                 \
    }                                                             \
  } while (0)

static int contains(const char* s, const char* part) { return s && strstr(s, part) != NULL; }

static void check_basics(void) {
  EXPECT(strlen(rt_version()) > 0);
  EXPECT(strcmp(rt_status_name(RT_OK), "Ok") == 0);
  EXPECT(strcmp(rt_status_name(RT_ERR_MISSING_PRIOR_ITERATION), "MissingPriorIteration") == 0);
  EXPECT(strcmp(rt_status_name(RT_ERR_UNKNOWN_TASK), "UnknownTask") == 0);
  EXPECT(contains(rt_config_reference(), "mcts.c_uct"));
}

static void check_env(void) {
  rt_env* env = NULL;
  char* out = NULL;
  EXPECT(rt_env_open("craft", 100, &env) == RT_OK);
  if (!env) return;

  EXPECT(rt_env_tasks(env, &out) == RT_OK);
  EXPECT(contains(out, "\"plank\""));
  rt_free_string(out);

  EXPECT(rt_env_reset(env, "no-such-task", &out) == RT_ERR_UNKNOWN_TASK);
  EXPECT(out == NULL);
  EXPECT(contains(rt_last_error_message(), "no-such-task"));

  EXPECT(rt_env_reset(env, "plank", &out) == RT_OK);
  EXPECT(contains(out, "Craft 1 plank."));
  rt_free_string(out);

  EXPECT(rt_env_step(env, "get 1 wood", &out) == RT_OK);
  EXPECT(contains(out, "Got 1 wood"));
  EXPECT(contains(out, "\"done\":false"));
  rt_free_string(out);

  EXPECT(rt_env_step(env, "jump around", &out) == RT_OK);
  EXPECT(contains(out, "Invalid action:"));
  rt_free_string(out);

  EXPECT(rt_env_step(env, "craft 1 plank", &out) == RT_OK);
  EXPECT(contains(out, "\"done\":true"));
  EXPECT(contains(out, "\"reward\":1.0"));
  rt_free_string(out);

  EXPECT(rt_env_step(env, "inventory", &out) == RT_ERR_ALREADY_TERMINAL);

  EXPECT(rt_env_replay(env, "plank", "[\"get 1 wood\",\"craft 1 plank\"]", 0, &out) == RT_OK);
  EXPECT(contains(out, "\"reward\":1.0"));
  rt_free_string(out);

  EXPECT(rt_env_replay(env, "plank", "{\"not\":\"an array\"}", 0, &out) == RT_ERR_INVALID_ARGUMENT);
  EXPECT(rt_env_replay(env, "plank", "[unterminated", 0, &out) == RT_ERR_PARSE);
  rt_env_close(env);

  EXPECT(rt_env_open("nowhere", 100, &env) == RT_ERR_INVALID_ARGUMENT);
  EXPECT(env == NULL);
}

static void check_judge(void) {
  char* out = NULL;
  const char* query =
      "{\"task_description\":\"Craft 1 plank.\",\"history\":[],"
      "\"current_action\":\"get 1 wood\",\"current_observation\":\"Got 1 wood\"}";
  EXPECT(rt_judge_render_prompt(query, &out) == RT_OK);
  EXPECT(contains(out, "Craft 1 plank."));
  EXPECT(contains(out, "get 1 wood"));
  rt_free_string(out);

  EXPECT(rt_judge_render_prompt("{\"history\":[]}", &out) != RT_OK);
  EXPECT(out == NULL);

  EXPECT(rt_judge_parse_verdict("Judgment: Bad\nThat wastes a round.", &out) == RT_OK);
  EXPECT(contains(out, "\"label\":\"Bad\""));
  rt_free_string(out);
}

static void check_uct(void) {
  EXPECT(isinf(rt_uct_score(0.0, 0, 5, 0.25)));
  EXPECT(fabs(rt_uct_score(1.0, 2, 8, 0.25) - 0.75491674754220224) < 1e-12);
}

static void check_context(void) {
  rt_context* ctx = NULL;
  char* out = NULL;
  EXPECT(rt_context_create("{\"mcts\":{\"simulation\":3}}", &ctx) == RT_ERR_CONFIG);
  EXPECT(ctx == NULL);
  EXPECT(contains(rt_last_error_message(), "mcts.simulation"));
  EXPECT(rt_context_create("{not json", &ctx) == RT_ERR_PARSE);

  EXPECT(rt_context_create("{\"seed\":7}", &ctx) == RT_OK);
  if (!ctx) return;
  EXPECT(rt_context_config(ctx, &out) == RT_OK);
  EXPECT(contains(out, "\"seed\": 7"));
  rt_free_string(out);
  EXPECT(rt_evaluate(ctx, "sideways", 10, NULL, &out) == RT_ERR_INVALID_ARGUMENT);
  EXPECT(rt_stats("/nonexistent/iter_1", 0, 0, &out) == RT_ERR_IO);
  rt_context_destroy(ctx);
}

int main(void) {
  check_basics();
  check_env();
  check_judge();
  check_uct();
  check_context();
  if (failures) {
    fprintf(stderr, "%d check(s) failed\n", failures);
    return 1;
  }
  puts("capi: all checks passed");
  return 0;
}
