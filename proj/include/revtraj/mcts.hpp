#pragma once

#include <atomic>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "revtraj/env.hpp"
#include "revtraj/policy.hpp"
#include "revtraj/rng.hpp"
#include "revtraj/serialize.hpp"
#include "revtraj/traj.hpp"

namespace revtraj {

struct MctsConfig {
  int k_rollouts = 8;
  int max_depth = 20;
  double c_uct = 0.25;
  int expand_width = 4;
  // Rollout budget per task; every rollout (or terminal revisit) counts once.
  int simulations = 100;
  double expand_temperature = 1.0;
  double rollout_temperature = 1.0;

  // All knobs positive (simulations may be 0); max_depth <= max_rounds.
  void validate(std::size_t max_rounds) const;
};

// Q + c * sqrt(ln(parent_visits) / visits); +inf when visits == 0.
double uct_score(double value_sum, std::size_t visits, std::size_t parent_visits, double c_uct);

inline constexpr std::size_t kNoParent = static_cast<std::size_t>(-1);

struct SearchNode {
  std::size_t id = 0;
  std::size_t parent = kNoParent;
  std::optional<std::string> thought;
  std::string action;
  std::string observation;
  std::vector<std::size_t> children;
  std::size_t visits = 0;
  double value_sum = 0.0;
  SnapshotToken snapshot;
  int depth = 0;
  bool terminal = false;
  std::optional<double> reward;
  bool expanded = false;

  double q() const noexcept { return visits ? value_sum / static_cast<double>(visits) : 0.0; }
};

class SearchTree {
 public:
  SearchTree() = default;
  SearchTree(Instruction instruction, std::string initial_observation, SnapshotToken root);

  const Instruction& instruction() const noexcept { return instruction_; }
  const std::string& initial_observation() const noexcept { return initial_observation_; }

  std::size_t size() const noexcept { return nodes_.size(); }
  SearchNode& node(std::size_t id) { return nodes_.at(id); }
  const SearchNode& node(std::size_t id) const { return nodes_.at(id); }
  const SearchNode& root() const { return nodes_.front(); }

  std::size_t add_child(std::size_t parent, SearchNode child);

  // Node ids from the root down to `id`.
  std::vector<std::size_t> path_to(std::size_t id) const;
  // Steps along the path (the root contributes none).
  std::vector<Step> steps_to(std::size_t id) const;

  bool expandable(std::size_t id, const MctsConfig& cfg) const;
  // Has an expandable node or an unvisited leaf somewhere below (or at) `id`.
  bool available(std::size_t id, const MctsConfig& cfg) const;

  Json to_json() const;

 private:
  Instruction instruction_;
  std::string initial_observation_;
  std::vector<SearchNode> nodes_;
};

enum class HarvestOrigin { rollout, terminal_path };

const char* to_string(HarvestOrigin origin) noexcept;

struct HarvestRecord {
  Trajectory trajectory;
  // Root .. simulated node.
  std::vector<std::size_t> leaf_node_path;
  HarvestOrigin origin = HarvestOrigin::rollout;
};

// Descends by argmax UCT (ties to the earliest child) through available
// subtrees and stops at the first node that can be expanded or is an
// unvisited leaf. Throws SearchExhausted when nothing is left.
std::size_t select_node(const SearchTree& tree, const MctsConfig& cfg);

// Adds N and the rewards (in order) to `id` and each ancestor.
void backpropagate(SearchTree& tree, std::size_t id, const std::vector<double>& rewards);

struct SearchResult {
  SearchTree tree;
  // One record per simulated reward, in the order they were backpropagated.
  std::vector<HarvestRecord> log;
  // Log trajectories deduplicated by action sequence, first occurrence kept.
  std::vector<Trajectory> harvest;
  std::size_t iterations = 0;
  std::size_t simulations = 0;
  std::size_t failures = 0;
  std::size_t duplicates = 0;
  bool exhausted = false;
  bool cancelled = false;
};

// One tree over one task. The environment, policies and generator are used
// only by this object.
class Search {
 public:
  Search(Environment& env, Policy& policy, const std::string& task_id, MctsConfig cfg, Rng rng,
         Policy* rollout_policy = nullptr);

  SearchTree& tree() noexcept { return result_.tree; }
  const SearchResult& result() const noexcept { return result_; }

  std::vector<std::size_t> expand(std::size_t id);
  // Runs `count` simulations from `id`, appending to the log. Returns the
  // rewards of the successful ones.
  std::vector<double> simulate(std::size_t id, int count);

  // select -> expand -> simulate -> backpropagate. Returns false once the
  // budget is spent or the tree is exhausted.
  bool iterate();

  SearchResult run(const std::atomic<bool>* cancel = nullptr);

 private:
  PolicyContext context_at(std::size_t id, double temperature) const;

  Environment& env_;
  Policy& policy_;
  Policy& rollout_policy_;
  MctsConfig cfg_;
  Rng rng_;
  SearchResult result_;
  std::size_t attempted_ = 0;
};

SearchResult run_search(Environment& env, Policy& policy, const std::string& task_id,
                        const MctsConfig& cfg, Rng rng, const std::atomic<bool>* cancel = nullptr);

}  // namespace revtraj
