#include "revtraj/mcts.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <unordered_set>

#include "revtraj/error.hpp"

namespace revtraj {

void MctsConfig::validate(std::size_t max_rounds) const {
  if (k_rollouts < 1) fail(ErrorCode::config_error, "mcts.k_rollouts must be >= 1");
  if (max_depth < 1) fail(ErrorCode::config_error, "mcts.max_depth must be >= 1");
  if (!(c_uct >= 0.0) || !std::isfinite(c_uct))
    fail(ErrorCode::config_error, "mcts.c_uct must be a finite value >= 0");
  if (expand_width < 1) fail(ErrorCode::config_error, "mcts.expand_width must be >= 1");
  if (simulations < 0) fail(ErrorCode::config_error, "mcts.simulations must be >= 0");
  if (expand_temperature < 0 || rollout_temperature < 0)
    fail(ErrorCode::config_error, "temperatures must be >= 0");
  if (static_cast<std::size_t>(max_depth) > max_rounds)
    fail(ErrorCode::config_error, "mcts.max_depth (" + std::to_string(max_depth) +
                                      ") exceeds the environment round limit (" +
                                      std::to_string(max_rounds) + ")");
}

double uct_score(double value_sum, std::size_t visits, std::size_t parent_visits, double c_uct) {
  if (visits == 0) return std::numeric_limits<double>::infinity();
  const double n = static_cast<double>(visits);
  const double q = value_sum / n;
  if (c_uct == 0.0) return q;
  return q + c_uct * std::sqrt(std::log(static_cast<double>(parent_visits)) / n);
}

SearchTree::SearchTree(Instruction instruction, std::string initial_observation,
                       SnapshotToken root)
    : instruction_(std::move(instruction)), initial_observation_(std::move(initial_observation)) {
  SearchNode r;
  r.snapshot = std::move(root);
  r.terminal = r.snapshot.state.done;
  r.reward = r.snapshot.state.reward;
  nodes_.push_back(std::move(r));
}

std::size_t SearchTree::add_child(std::size_t parent, SearchNode child) {
  child.id = nodes_.size();
  child.parent = parent;
  child.depth = node(parent).depth + 1;
  nodes_.push_back(std::move(child));
  nodes_[parent].children.push_back(nodes_.size() - 1);
  return nodes_.size() - 1;
}

std::vector<std::size_t> SearchTree::path_to(std::size_t id) const {
  std::vector<std::size_t> path;
  for (std::size_t cur = id; cur != kNoParent; cur = node(cur).parent) path.push_back(cur);
  std::reverse(path.begin(), path.end());
  return path;
}

std::vector<Step> SearchTree::steps_to(std::size_t id) const {
  std::vector<Step> steps;
  for (std::size_t n : path_to(id)) {
    if (n == 0) continue;
    const SearchNode& s = node(n);
    steps.push_back(Step{s.thought, s.action, s.observation});
  }
  return steps;
}

bool SearchTree::expandable(std::size_t id, const MctsConfig& cfg) const {
  const SearchNode& n = node(id);
  return !n.expanded && !n.terminal && n.depth < cfg.max_depth;
}

bool SearchTree::available(std::size_t id, const MctsConfig& cfg) const {
  const SearchNode& n = node(id);
  if (expandable(id, cfg)) return true;
  if (n.children.empty()) return n.visits == 0 && !n.expanded;
  return std::any_of(n.children.begin(), n.children.end(),
                     [&](std::size_t c) { return available(c, cfg); });
}

Json SearchTree::to_json() const {
  Json nodes = Json::array();
  for (const SearchNode& n : nodes_) {
    Json j;
    j["id"] = n.id;
    j["parent"] = n.parent == kNoParent ? Json(nullptr) : Json(n.parent);
    j["action"] = n.action;
    j["observation"] = n.observation;
    j["N"] = n.visits;
    j["W"] = n.value_sum;
    j["depth"] = n.depth;
    j["terminal"] = n.terminal;
    j["reward"] = n.reward ? Json(*n.reward) : Json(nullptr);
    j["children"] = n.children;
    nodes.push_back(std::move(j));
  }
  return Json{{"env", instruction_.env_name},
              {"task_id", instruction_.task_id},
              {"instruction", instruction_.text},
              {"nodes", std::move(nodes)}};
}

const char* to_string(HarvestOrigin origin) noexcept {
  return origin == HarvestOrigin::rollout ? "rollout" : "terminal_path";
}

std::size_t select_node(const SearchTree& tree, const MctsConfig& cfg) {
  if (tree.size() == 0) fail(ErrorCode::invalid_argument, "search tree has no root");
  if (!tree.available(0, cfg)) fail(ErrorCode::search_exhausted, "search tree exhausted");
  std::size_t cur = 0;
  for (;;) {
    const SearchNode& n = tree.node(cur);
    if (tree.expandable(cur, cfg) || n.children.empty()) return cur;
    std::size_t best = kNoParent;
    double best_score = -std::numeric_limits<double>::infinity();
    for (std::size_t c : n.children) {
      if (!tree.available(c, cfg)) continue;
      const SearchNode& child = tree.node(c);
      const double s = uct_score(child.value_sum, child.visits, n.visits, cfg.c_uct);
      if (best == kNoParent || s > best_score) {
        best = c;
        best_score = s;
      }
    }
    if (best == kNoParent) fail(ErrorCode::search_exhausted, "search tree exhausted");
    cur = best;
  }
}

void backpropagate(SearchTree& tree, std::size_t id, const std::vector<double>& rewards) {
  for (std::size_t cur = id; cur != kNoParent; cur = tree.node(cur).parent) {
    SearchNode& n = tree.node(cur);
    n.visits += rewards.size();
    for (double r : rewards) n.value_sum += r;
  }
}

Search::Search(Environment& env, Policy& policy, const std::string& task_id, MctsConfig cfg,
               Rng rng, Policy* rollout_policy)
    : env_(env),
      policy_(policy),
      rollout_policy_(rollout_policy ? *rollout_policy : policy),
      cfg_(cfg),
      rng_(rng) {
  cfg_.validate(env_.max_rounds());
  ResetResult start = env_.reset(task_id);
  result_.tree = SearchTree(start.instruction, start.observation, env_.snapshot(start.state));
}

PolicyContext Search::context_at(std::size_t id, double temperature) const {
  PolicyContext ctx;
  ctx.instruction = result_.tree.instruction();
  ctx.initial_observation = result_.tree.initial_observation();
  ctx.history = result_.tree.steps_to(id);
  ctx.temperature = temperature;
  return ctx;
}

std::vector<std::size_t> Search::expand(std::size_t id) {
  SearchTree& tree = result_.tree;
  std::vector<std::size_t> added;
  if (!tree.expandable(id, cfg_)) {
    tree.node(id).expanded = true;
    return added;
  }
  const EnvState state = env_.restore(tree.node(id).snapshot);
  PolicyContext ctx = context_at(id, cfg_.expand_temperature);
  ctx.n = cfg_.expand_width;
  const auto proposals = policy_.propose(ctx, rng_);
  tree.node(id).expanded = true;
  std::set<std::string> seen;
  for (const auto& p : proposals) {
    if (!seen.insert(p.action).second) continue;
    StepOutcome out = env_.step(state, p.action);
    SearchNode child;
    child.thought = p.thought;
    child.action = p.action;
    child.observation = out.result.observation;
    child.terminal = out.state.done;
    child.reward = out.state.reward;
    child.snapshot = env_.snapshot(out.state);
    added.push_back(tree.add_child(id, std::move(child)));
  }
  return added;
}

std::vector<double> Search::simulate(std::size_t id, int count) {
  SearchTree& tree = result_.tree;
  const SearchNode& node = tree.node(id);
  const std::vector<std::size_t> path = tree.path_to(id);
  std::vector<Step> prefix = tree.steps_to(id);
  std::vector<double> rewards;

  auto record = [&](std::vector<Step> steps, double reward, HarvestOrigin origin) {
    Trajectory t;
    t.instruction = tree.instruction();
    t.initial_observation = tree.initial_observation();
    t.steps = std::move(steps);
    t.reward = reward;
    t.terminal = true;
    t.kind = TrajectoryKind::unknown;
    result_.log.push_back(HarvestRecord{std::move(t), path, origin});
    rewards.push_back(reward);
  };

  if (node.terminal) {
    const double r = node.reward.value_or(0.0);
    for (int i = 0; i < count; ++i) {
      ++attempted_;
      record(prefix, r, HarvestOrigin::terminal_path);
    }
    return rewards;
  }

  const PolicyContext ctx = context_at(id, cfg_.rollout_temperature);
  const std::size_t budget = static_cast<std::size_t>(cfg_.max_depth - node.depth);
  const SnapshotToken snap = node.snapshot;
  for (int i = 0; i < count; ++i) {
    ++attempted_;
    try {
      RolloutResult r = rollout(rollout_policy_, env_, ctx, env_.restore(snap), budget, rng_);
      std::vector<Step> steps = prefix;
      steps.insert(steps.end(), std::make_move_iterator(r.steps.begin()),
                   std::make_move_iterator(r.steps.end()));
      record(std::move(steps), r.reward, HarvestOrigin::rollout);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::invalid_snapshot) throw;
      ++result_.failures;
    }
  }
  return rewards;
}

bool Search::iterate() {
  const auto budget = static_cast<std::size_t>(cfg_.simulations);
  if (attempted_ >= budget) return false;
  std::size_t selected = 0;
  try {
    selected = select_node(result_.tree, cfg_);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::search_exhausted) throw;
    result_.exhausted = true;
    return false;
  }
  std::size_t target = selected;
  if (result_.tree.expandable(selected, cfg_)) {
    const auto added = expand(selected);
    if (!added.empty()) target = added.front();
  }
  const int count = static_cast<int>(
      std::min<std::size_t>(static_cast<std::size_t>(cfg_.k_rollouts), budget - attempted_));
  const std::vector<double> rewards = simulate(target, count);
  backpropagate(result_.tree, target, rewards);
  result_.simulations += rewards.size();
  ++result_.iterations;
  return attempted_ < budget;
}

SearchResult Search::run(const std::atomic<bool>* cancel) {
  while (true) {
    if (cancel && cancel->load()) {
      result_.cancelled = true;
      break;
    }
    if (!iterate()) break;
  }
  std::unordered_set<std::string> keys;
  result_.harvest.clear();
  result_.duplicates = 0;
  for (const auto& rec : result_.log) {
    if (keys.insert(action_key(rec.trajectory.steps)).second)
      result_.harvest.push_back(rec.trajectory);
    else
      ++result_.duplicates;
  }
  return result_;
}

SearchResult run_search(Environment& env, Policy& policy, const std::string& task_id,
                        const MctsConfig& cfg, Rng rng, const std::atomic<bool>* cancel) {
  Search search(env, policy, task_id, cfg, rng);
  return search.run(cancel);
}

}  // namespace revtraj
