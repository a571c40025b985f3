// Command-line front end. Talks to the engine only through revtraj.h.
#include <algorithm>
#include <csignal>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "revtraj/revtraj.h"

namespace fs = std::filesystem;
using Json = nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitRuntime = 2;

rt_context* volatile g_context = nullptr;

extern "C" void on_interrupt(int) {
  if (g_context) rt_request_cancel(g_context);
}

struct Overrides {
  std::string config_path;
  std::optional<unsigned long long> seed;
  std::optional<std::string> output;
  std::optional<int> workers;
  std::vector<std::string> envs;
  std::optional<std::size_t> tasks_per_env;
  std::optional<std::string> policy;
  std::optional<double> epsilon;
  std::optional<std::string> policy_endpoint;
  std::optional<std::string> policy_model;
  std::optional<std::string> judge;
  std::optional<std::string> judge_endpoint;
  std::optional<int> judge_votes;
  std::optional<int> simulations;
  std::optional<int> k_rollouts;
  std::optional<int> max_depth;
  std::optional<double> c_uct;
  std::optional<int> expand_width;
};

void add_common(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config_path, "JSON config file");
  cmd->add_option("--seed", o.seed, "base seed");
  cmd->add_option("--output", o.output, "output root");
  cmd->add_option("--workers", o.workers, "parallel tasks (0 = hardware concurrency)");
  cmd->add_option("--env", o.envs, "environments, e.g. --env craft --env graded")->delimiter(',');
  cmd->add_option("--tasks-per-env", o.tasks_per_env, "first N tasks per environment");
  cmd->add_option("--policy", o.policy, "oracle | random | remote");
  cmd->add_option("--epsilon", o.epsilon, "oracle distractor probability");
  cmd->add_option("--policy-endpoint", o.policy_endpoint, "remote policy URL");
  cmd->add_option("--policy-model", o.policy_model, "remote policy model name");
  cmd->add_option("--judge", o.judge, "oracle | remote | all_good");
  cmd->add_option("--judge-endpoint", o.judge_endpoint, "remote judge URL");
  cmd->add_option("--judge-votes", o.judge_votes, "completions per judged step");
  cmd->add_option("--simulations", o.simulations, "rollout budget per task");
  cmd->add_option("--k-rollouts", o.k_rollouts, "rollouts per simulated node");
  cmd->add_option("--max-depth", o.max_depth, "tree depth limit");
  cmd->add_option("--c-uct", o.c_uct, "UCT exploration weight");
  cmd->add_option("--expand-width", o.expand_width, "candidate actions per expansion");
}

// Unreadable or malformed config input; exits like any other config error.
struct ConfigFileError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

Json read_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigFileError("ConfigError: cannot open config file " + path);
  try {
    return Json::parse(in);
  } catch (const Json::exception& e) {
    throw ConfigFileError("ConfigError: config file " + path + " is not valid JSON: " + e.what());
  }
}

// Flags > config file > built-in defaults.
Json build_config(const Overrides& o) {
  Json c = o.config_path.empty() ? Json::object() : read_config_file(o.config_path);
  if (!c.is_object()) throw ConfigFileError("ConfigError: config file must hold a JSON object");
  if (o.seed) c["seed"] = *o.seed;
  if (o.output) c["output"] = *o.output;
  if (o.workers) c["workers"] = *o.workers;
  if (!o.envs.empty()) c["env"]["suite"] = o.envs;
  if (o.tasks_per_env) c["env"]["tasks_per_env"] = *o.tasks_per_env;
  if (o.policy) c["policy"]["kind"] = *o.policy;
  if (o.epsilon) c["policy"]["epsilon"] = *o.epsilon;
  if (o.policy_endpoint) c["policy"]["endpoint"] = *o.policy_endpoint;
  if (o.policy_model) c["policy"]["model"] = *o.policy_model;
  if (o.judge) c["judge"]["kind"] = *o.judge;
  if (o.judge_endpoint) c["judge"]["endpoint"] = *o.judge_endpoint;
  if (o.judge_votes) c["judge"]["votes"] = *o.judge_votes;
  if (o.simulations) c["mcts"]["simulations"] = *o.simulations;
  if (o.k_rollouts) c["mcts"]["k_rollouts"] = *o.k_rollouts;
  if (o.max_depth) c["mcts"]["max_depth"] = *o.max_depth;
  if (o.c_uct) c["mcts"]["c_uct"] = *o.c_uct;
  if (o.expand_width) c["mcts"]["expand_width"] = *o.expand_width;
  return c;
}

int report_failure(rt_status s) {
  // The message already starts with the error name.
  std::cerr << "error: " << rt_last_error_message() << "\n";
  return (s == RT_ERR_CONFIG || s == RT_ERR_INVALID_ARGUMENT) ? kExitUsage : kExitRuntime;
}

Json take_json(char* text) {
  Json j = Json::parse(text);
  rt_free_string(text);
  return j;
}

void log_line(const char* line, void*) { std::cerr << line << "\n"; }

class Context {
 public:
  rt_status open(const Json& config) {
    const std::string text = config.dump();
    rt_status s = rt_context_create(text.c_str(), &ctx_);
    if (s == RT_OK) {
      rt_context_set_log(ctx_, log_line, nullptr);
      g_context = ctx_;
    }
    return s;
  }
  ~Context() {
    g_context = nullptr;
    rt_context_destroy(ctx_);
  }
  rt_context* get() const { return ctx_; }
  Json config() const {
    char* out = nullptr;
    if (rt_context_config(ctx_, &out) != RT_OK) return Json::object();
    return take_json(out);
  }

 private:
  rt_context* ctx_ = nullptr;
};

void print_warnings(const Json& warnings) {
  for (const auto& w : warnings) std::cerr << "warning: " << w.get<std::string>() << "\n";
}

std::string fixed(double v, int digits = 4) {
  std::ostringstream s;
  s.setf(std::ios::fixed);
  s.precision(digits);
  s << v;
  return s.str();
}

void print_stats(const std::string& label, const Json& stats) {
  std::cout << label << "\n";
  const Json& m = stats["manifest"];
  if (m.is_object()) {
    std::cout << "  alpha " << m["alpha"] << "  beta " << m["beta"] << "  mode "
              << m["mode"].get<std::string>() << "  eta " << m["eta"] << "\n";
    std::printf("  %-10s %6s %6s %10s %6s %9s %6s %10s %12s %9s\n", "env", "tasks", "sims",
                "harvested", "pairs", "revision", "good", "test_size", "judge_skips", "failed");
    std::fflush(stdout);
    for (const auto& [env, c] : m["envs"].items()) {
      std::printf("  %-10s %6zu %6zu %10zu %6zu %9zu %6zu %10zu %12zu %9zu\n", env.c_str(),
                  c["tasks"].get<std::size_t>(), c["simulations"].get<std::size_t>(),
                  c["harvested"].get<std::size_t>(), c["pairs"].get<std::size_t>(),
                  c["revision"].get<std::size_t>(), c["good"].get<std::size_t>(),
                  c["test_size"].get<std::size_t>(), c["judge_skips"].get<std::size_t>(),
                  c["failed_tasks"].get<std::size_t>());
      std::fflush(stdout);
    }
  }
  const Json& n = stats["counts"];
  std::cout << "  lines: revision " << n["revision"] << ", good " << n["good"] << ", mixed "
            << n["mixed"] << "\n";
  if (stats.contains("revision_length")) {
    const Json& r = stats["revision_length"];
    std::cout << "  revision length: " << (r.is_null() ? std::string("n/a") : fixed(r.get<double>()))
              << "\n";
  }
  if (stats.contains("loop_profile")) {
    const Json& lp = stats["loop_profile"];
    std::cout << "  loop profile:";
    if (lp.is_null()) {
      std::cout << " n/a\n";
    } else {
      std::cout << "\n";
      for (std::size_t i = 0; i < lp.size(); ++i)
        std::cout << "    L=" << (i + 1) << "  " << fixed(lp[i].get<double>()) << "\n";
    }
  }
}

std::vector<std::pair<int, fs::path>> iteration_dirs(const fs::path& root) {
  std::vector<std::pair<int, fs::path>> dirs;
  for (const auto& e : fs::directory_iterator(root)) {
    const std::string name = e.path().filename().string();
    if (!e.is_directory() || name.rfind("iter_", 0) != 0) continue;
    try {
      std::size_t used = 0;
      const int n = std::stoi(name.substr(5), &used);
      if (used == name.size() - 5) dirs.emplace_back(n, e.path());
    } catch (const std::exception&) {
    }
  }
  std::sort(dirs.begin(), dirs.end());
  return dirs;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Search-based trajectory synthesis: MCTS collection, revision splicing, "
               "loss-masked datasets and evaluation.",
               "revtraj"};
  app.require_subcommand(1);
  app.set_version_flag("--version", rt_version());
  app.footer(std::string("Exit codes: 0 success (possibly with warnings), 1 usage error, "
                         "2 runtime failure.\nCredentials for remote endpoints are read from "
                         "REVTRAJ_API_KEY.\n\n") +
             rt_config_reference());

  Overrides collect_o, eval_o, stats_o;

  auto* collect = app.add_subcommand("collect", "collect one iteration into <output>/iter_<n>/");
  add_common(collect, collect_o);
  int iter = 1;
  std::optional<std::string> collect_mode;
  bool force = false;
  std::optional<double> eta;
  std::optional<std::string> general;
  bool carry_forward = false;
  std::optional<std::size_t> collect_rounds;
  collect->add_option("--iter", iter, "iteration index (1-based)");
  collect->add_option("--mode", collect_mode, "model_guided | direct");
  collect->add_flag("--force", force, "replace an existing iteration directory");
  collect->add_option("--eta", eta, "mixing weight");
  collect->add_option("--general", general, "general chat JSONL for mixing");
  collect->add_flag("--carry-forward", carry_forward, "reuse the previous iteration's goods");
  collect->add_option("--max-rounds", collect_rounds, "episode round limit");

  auto* eval = app.add_subcommand("eval", "evaluate a policy (test or revision mode)");
  add_common(eval, eval_o);
  std::string eval_mode = "test";
  std::optional<std::size_t> eval_rounds;
  std::string failures, report;
  eval->add_option("--mode", eval_mode, "test | revision")->check(CLI::IsMember({"test", "revision"}));
  eval->add_option("--max-rounds", eval_rounds, "round limit (default from eval.*)");
  eval->add_option("--failures", failures, "trajectory JSONL of failures to resume (revision mode)");
  eval->add_option("--report", report, "report path (default <output>/eval/<mode>.json)");

  auto* stats = app.add_subcommand("stats", "print manifests and metrics of collected iterations");
  add_common(stats, stats_o);
  std::optional<int> stats_iter;
  bool loops = false, rev_len = false, as_json = false;
  stats->add_option("--iter", stats_iter, "iteration index (default: all)");
  stats->add_flag("--loops", loops, "loop profile of the iteration's trajectories");
  stats->add_flag("--revision-length", rev_len, "mean transition point");
  stats->add_flag("--json", as_json, "print JSON instead of tables");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  std::signal(SIGINT, on_interrupt);
  std::signal(SIGTERM, on_interrupt);

  try {
    if (collect->parsed()) {
      Json cfg = build_config(collect_o);
      if (collect_mode) cfg["revision"]["mode"] = *collect_mode;
      if (eta) cfg["mix"]["eta"] = *eta;
      if (general) cfg["mix"]["general_path"] = *general;
      if (carry_forward) cfg["carry_forward"] = true;
      if (collect_rounds) cfg["env"]["max_rounds"] = *collect_rounds;
      Context ctx;
      if (rt_status s = ctx.open(cfg); s != RT_OK) return report_failure(s);
      char* out = nullptr;
      if (rt_status s = rt_collect(ctx.get(), iter, force ? 1 : 0, &out); s != RT_OK)
        return report_failure(s);
      const Json m = take_json(out);
      print_warnings(m["warnings"]);
      const Json& t = m["totals"];
      std::cerr << "iter_" << iter << ": " << t["revision"] << " revisions, " << t["good"]
                << " goods from " << t["tasks"] << " tasks (" << m["warnings"].size()
                << " warnings)" << (m["cancelled"].get<bool>() ? ", cancelled" : "") << "\n";
      return kExitOk;
    }

    if (eval->parsed()) {
      Json cfg = build_config(eval_o);
      Context ctx;
      if (rt_status s = ctx.open(cfg); s != RT_OK) return report_failure(s);
      const Json eff = ctx.config();
      const std::size_t rounds =
          eval_rounds ? *eval_rounds
                      : eff["eval"][eval_mode == "test" ? "max_rounds" : "revision_max_rounds"]
                            .get<std::size_t>();
      char* out = nullptr;
      if (rt_status s = rt_evaluate(ctx.get(), eval_mode.c_str(), rounds,
                                    failures.empty() ? nullptr : failures.c_str(), &out);
          s != RT_OK)
        return report_failure(s);
      Json result = take_json(out);
      const fs::path path = report.empty()
                                ? fs::path(eff["output"].get<std::string>()) / "eval" / (eval_mode + ".json")
                                : fs::path(report);
      if (path.has_parent_path()) fs::create_directories(path.parent_path());
      std::ofstream f(path);
      f << Json{{"reports", result["reports"]}, {"warnings", result["warnings"]}}.dump(2) << "\n";
      if (!f) throw std::runtime_error("cannot write " + path.string());
      for (const auto& t : result["tables"]) std::cout << t.get<std::string>() << "\n";
      print_warnings(result["warnings"]);
      std::cerr << "report written to " << path.string() << "\n";
      return kExitOk;
    }

    if (stats->parsed()) {
      Json cfg = build_config(stats_o);
      Context ctx;
      if (rt_status s = ctx.open(cfg); s != RT_OK) return report_failure(s);
      const fs::path root = ctx.config()["output"].get<std::string>();
      if (!fs::is_directory(root)) {
        std::cerr << "error: IoError: " << root.string() << " does not exist\n";
        return kExitRuntime;
      }
      std::vector<std::pair<int, fs::path>> dirs;
      if (stats_iter) {
        const fs::path d = root / ("iter_" + std::to_string(*stats_iter));
        if (!fs::is_directory(d)) {
          std::cerr << "error: IoError: " << d.string() << " does not exist\n";
          return kExitRuntime;
        }
        dirs.emplace_back(*stats_iter, d);
      } else {
        dirs = iteration_dirs(root);
      }
      Json all = Json::array();
      if (dirs.empty()) {
        std::cerr << "warning: no iterations under " << root.string() << "\n";
        if (as_json) {
          std::cout << Json{{"iterations", all}}.dump(2) << "\n";
        } else {
          std::cout << "iterations: 0\n  revision 0, good 0, mixed 0\n";
        }
        return kExitOk;
      }
      for (const auto& [n, d] : dirs) {
        char* out = nullptr;
        if (rt_status s = rt_stats(d.string().c_str(), loops ? 1 : 0, rev_len ? 1 : 0, &out);
            s != RT_OK)
          return report_failure(s);
        Json st = take_json(out);
        print_warnings(st["warnings"]);
        st["iteration"] = n;
        if (!as_json) print_stats("iter_" + std::to_string(n), st);
        all.push_back(std::move(st));
      }
      if (as_json) std::cout << Json{{"iterations", all}}.dump(2) << "\n";
      return kExitOk;
    }
  } catch (const ConfigFileError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}
