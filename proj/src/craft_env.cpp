#include "revtraj/craft_env.hpp"

#include <algorithm>
#include <charconv>
#include <functional>
#include <sstream>

#include "revtraj/error.hpp"
#include "revtraj/resources.hpp"
#include "revtraj/text.hpp"

namespace revtraj {

namespace {

constexpr long long kMaxCount = 1'000'000;

std::optional<long long> parse_count(std::string_view token) {
  long long value = 0;
  auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
  if (ec != std::errc() || ptr != token.data() + token.size() || value <= 0 || value > kMaxCount)
    return std::nullopt;
  return value;
}

long long held(const Inventory& inv, const std::string& item) {
  auto it = inv.find(item);
  return it == inv.end() ? 0 : it->second;
}

void add(Inventory& inv, const std::string& item, long long delta) {
  const long long v = held(inv, item) + delta;
  if (v == 0)
    inv.erase(item);
  else
    inv[item] = v;
}

long long batches_for(const CraftRecipe& r, long long count) {
  return (count + r.output_count - 1) / r.output_count;
}

void plan_item(const CraftSpec& spec, Inventory& work, const std::string& item, long long count,
               std::vector<std::string>& out) {
  const long long have = held(work, item);
  if (have >= count) {
    add(work, item, -count);
    return;
  }
  const long long deficit = count - have;
  if (spec.gatherable.count(item)) {
    out.push_back("get " + std::to_string(deficit) + " " + item);
    add(work, item, -have);
    return;
  }
  const CraftRecipe& recipe = spec.recipes.at(item);
  const long long batches = batches_for(recipe, deficit);
  for (const auto& [input, n] : recipe.inputs) plan_item(spec, work, input, n * batches, out);
  out.push_back("craft " + std::to_string(deficit) + " " + item);
  add(work, item, batches * recipe.output_count - count);
}

std::string inventory_text(const Inventory& inv) {
  if (inv.empty()) return "Inventory: you are not carrying anything.";
  std::string text = "Inventory:";
  bool first = true;
  for (const auto& [item, n] : inv) {
    text += first ? " " : ", ";
    text += "[" + item + "] (" + std::to_string(n) + ")";
    first = false;
  }
  return text;
}

// Shared by the environment and its planner so both see identical dynamics.
StepResult craft_apply(const CraftSpec& spec, const CraftTask& task, EnvState& state,
                       std::string_view raw) {
  Inventory& inv = state.vars;
  const std::string action = text::trim(raw);
  const auto tokens = text::split_whitespace(action);
  StepResult r;
  if (tokens.size() == 3 && tokens[0] == "get") {
    const auto n = parse_count(tokens[1]);
    const std::string& item = tokens[2];
    if (!n) {
      r.observation = std::string(kInvalidActionPrefix) + " " + action;
    } else if (spec.gatherable.count(item)) {
      add(inv, item, *n);
      r.observation = "Got " + std::to_string(*n) + " " + item;
    } else if (spec.recipes.count(item)) {
      r.observation = "Could not get " + item + ": it has to be crafted.";
    } else {
      r.observation = "Could not find " + item + ".";
    }
  } else if (tokens.size() == 3 && tokens[0] == "craft") {
    const auto n = parse_count(tokens[1]);
    const std::string& item = tokens[2];
    auto it = spec.recipes.find(item);
    if (!n) {
      r.observation = std::string(kInvalidActionPrefix) + " " + action;
    } else if (it == spec.recipes.end()) {
      r.observation = "Could not find a recipe for " + item + ".";
    } else {
      const long long batches = batches_for(it->second, *n);
      const bool enough = std::all_of(it->second.inputs.begin(), it->second.inputs.end(),
                                      [&](const auto& in) { return held(inv, in.first) >= in.second * batches; });
      if (!enough) {
        r.observation = "Could not find enough items to craft " + tokens[1] + " " + item;
      } else {
        for (const auto& [input, k] : it->second.inputs) add(inv, input, -k * batches);
        const long long made = batches * it->second.output_count;
        add(inv, item, made);
        r.observation = "Crafted " + std::to_string(made) + " " + item;
      }
    }
  } else if (action == "inventory") {
    r.observation = inventory_text(inv);
  } else if (action == "give up") {
    r.observation = "You gave up.";
    r.done = true;
  } else {
    r.observation = std::string(kInvalidActionPrefix) + " " + action;
  }
  if (held(inv, task.target) >= task.count) {
    r.done = true;
    r.reward = 1.0;
  } else if (r.done) {
    r.reward = 0.0;
  }
  return r;
}

}  // namespace

std::set<std::string> CraftSpec::items() const {
  std::set<std::string> out = gatherable;
  for (const auto& [name, r] : recipes) {
    out.insert(name);
    for (const auto& in : r.inputs) out.insert(in.first);
  }
  return out;
}

const CraftTask& CraftSpec::task(const std::string& id) const {
  for (const auto& t : tasks)
    if (t.id == id) return t;
  fail(ErrorCode::unknown_task, "craft task '" + id + "'");
}

std::set<std::string> CraftSpec::dependency_tree(const std::string& target) const {
  std::set<std::string> seen;
  std::function<void(const std::string&)> visit = [&](const std::string& item) {
    if (!seen.insert(item).second) return;
    if (auto it = recipes.find(item); it != recipes.end())
      for (const auto& in : it->second.inputs) visit(in.first);
  };
  visit(target);
  return seen;
}

void CraftSpec::validate() const {
  if (version != 1) fail(ErrorCode::config_error, "craft spec: unsupported version");
  enum class Mark { none, active, done };
  std::map<std::string, Mark> marks;
  std::function<void(const std::string&)> visit = [&](const std::string& item) {
    Mark& m = marks[item];
    if (m == Mark::done) return;
    if (m == Mark::active) fail(ErrorCode::config_error, "craft spec: recipe cycle through " + item);
    m = Mark::active;
    auto it = recipes.find(item);
    if (it == recipes.end() && !gatherable.count(item))
      fail(ErrorCode::config_error, "craft spec: " + item + " is neither gatherable nor craftable");
    if (it != recipes.end() && !gatherable.count(item))
      for (const auto& in : it->second.inputs) visit(in.first);
    marks[item] = Mark::done;
  };
  for (const auto& [name, r] : recipes) {
    if (r.output_count <= 0 || r.inputs.empty())
      fail(ErrorCode::config_error, "craft spec: malformed recipe for " + name);
    visit(name);
  }
  std::set<std::string> ids;
  for (const auto& t : tasks) {
    if (!ids.insert(t.id).second) fail(ErrorCode::config_error, "craft spec: duplicate task " + t.id);
    if (t.count <= 0) fail(ErrorCode::config_error, "craft spec: bad count for task " + t.id);
    visit(t.target);
  }
}

CraftSpec parse_craft_spec(std::string_view text) {
  CraftSpec spec;
  std::size_t lineno = 0;
  for (const auto& raw : text::split_lines(text)) {
    ++lineno;
    const std::string line = text::trim(raw);
    if (line.empty() || line[0] == '#') continue;
    const auto tok = text::split_whitespace(line);
    auto bad = [&](const std::string& why) {
      fail(ErrorCode::parse_error, "craft spec line " + std::to_string(lineno) + ": " + why);
    };
    if (tok[0] == "version") {
      if (tok.size() != 2) bad("expected 'version <n>'");
      spec.version = std::stoi(tok[1]);
    } else if (tok[0] == "gather") {
      if (tok.size() < 2) bad("expected items after 'gather'");
      spec.gatherable.insert(tok.begin() + 1, tok.end());
    } else if (tok[0] == "recipe") {
      // recipe <output> <count> <- <item> <n> [, <item> <n> ...]
      if (tok.size() < 6 || tok[3] != "<-") bad("expected 'recipe <output> <count> <- <item> <n>'");
      CraftRecipe r;
      r.output = tok[1];
      const auto out_count = parse_count(tok[2]);
      if (!out_count) bad("bad output count");
      r.output_count = *out_count;
      std::size_t i = 4;
      while (i < tok.size()) {
        if (i + 1 >= tok.size()) bad("ingredient without count");
        std::string count_tok = tok[i + 1];
        const bool comma = !count_tok.empty() && count_tok.back() == ',';
        if (comma) count_tok.pop_back();
        const auto n = parse_count(count_tok);
        if (!n) bad("bad ingredient count");
        r.inputs.emplace_back(tok[i], *n);
        i += 2;
        if (i < tok.size() && tok[i] == ",") ++i;
      }
      if (spec.recipes.count(r.output)) bad("duplicate recipe for " + r.output);
      spec.recipes.emplace(r.output, std::move(r));
    } else if (tok[0] == "task") {
      if (tok.size() != 4) bad("expected 'task <id> <target> <count>'");
      const auto n = parse_count(tok[3]);
      if (!n) bad("bad task count");
      spec.tasks.push_back(CraftTask{tok[1], tok[2], *n});
    } else {
      bad("unknown directive '" + tok[0] + "'");
    }
  }
  spec.validate();
  return spec;
}

const CraftSpec& bundled_craft_spec() {
  static const CraftSpec spec = parse_craft_spec(resources::craft_suite());
  return spec;
}

std::vector<std::string> craft_plan(const CraftSpec& spec, const std::string& target,
                                    long long count, const Inventory& inventory) {
  Inventory work = inventory;
  std::vector<std::string> out;
  plan_item(spec, work, target, count, out);
  return out;
}

CraftEnv::CraftEnv(CraftSpec spec, EnvOptions options)
    : Environment(options), spec_(std::move(spec)) {
  spec_.validate();
}

std::vector<std::string> CraftEnv::task_ids() const {
  std::vector<std::string> ids;
  for (const auto& t : spec_.tasks) ids.push_back(t.id);
  return ids;
}

ResetResult CraftEnv::reset(const std::string& task_id) {
  const CraftTask& task = spec_.task(task_id);
  ResetResult r;
  r.instruction = Instruction{name(), task.id,
                              "Craft " + std::to_string(task.count) + " " + task.target + "."};
  r.state.task_id = task.id;

  std::ostringstream obs;
  obs << "Crafting commands:";
  const auto tree = spec_.dependency_tree(task.target);
  for (const auto& item : tree) {
    auto it = spec_.recipes.find(item);
    if (it == spec_.recipes.end()) continue;
    obs << "\ncraft " << it->second.output_count << " " << item << " using ";
    for (std::size_t i = 0; i < it->second.inputs.size(); ++i) {
      if (i) obs << ", ";
      obs << it->second.inputs[i].second << " " << it->second.inputs[i].first;
    }
  }
  obs << "\nGatherable:";
  bool first = true;
  for (const auto& item : tree)
    if (spec_.gatherable.count(item)) {
      obs << (first ? " " : ", ") << item;
      first = false;
    }
  r.observation = obs.str();
  return r;
}

std::vector<std::string> CraftEnv::action_space(const std::string& task_id) const {
  spec_.task(task_id);
  std::vector<std::string> out;
  for (const auto& g : spec_.gatherable) out.push_back("get 1 " + g);
  for (const auto& [name, r] : spec_.recipes) out.push_back("craft 1 " + name);
  out.push_back("inventory");
  out.push_back("give up");
  return out;
}

StepResult CraftEnv::apply(EnvState& state, std::string_view action) {
  return craft_apply(spec_, spec_.task(state.task_id), state, action);
}

double CraftEnv::terminal_reward(const EnvState& state) const {
  const CraftTask& task = spec_.task(state.task_id);
  return held(state.vars, task.target) >= task.count ? 1.0 : 0.0;
}

EnvState CraftEnv::state_after(const std::string& task_id, std::span<const Step> history) const {
  const CraftTask& task = spec_.task(task_id);
  EnvState state;
  state.task_id = task_id;
  for (const auto& s : history) {
    if (state.done) break;
    StepResult r = craft_apply(spec_, task, state, s.action);
    ++state.step_count;
    if (r.done) {
      state.done = true;
      state.reward = r.reward;
    }
  }
  return state;
}

std::optional<std::string> CraftEnv::expert_action(const std::string& task_id,
                                                   std::span<const Step> history) const {
  const CraftTask& task = spec_.task(task_id);
  const EnvState state = state_after(task_id, history);
  if (state.done) return std::nullopt;
  auto plan = craft_plan(spec_, task.target, task.count, state.vars);
  if (plan.empty()) return std::nullopt;
  return plan.front();
}

std::vector<std::string> CraftEnv::distractor_actions(const std::string& task_id,
                                                      std::span<const Step> history) const {
  const CraftTask& task = spec_.task(task_id);
  const auto expert = expert_action(task_id, history);
  const auto tree = spec_.dependency_tree(task.target);

  // A fixed, task-specific handful of off-tree items keeps the distractor
  // set small enough that giving up is a realistic failure mode.
  std::vector<std::string> gathers, crafts;
  for (const auto& g : spec_.gatherable)
    if (!tree.count(g)) gathers.push_back(g);
  for (const auto& [name, r] : spec_.recipes)
    if (!tree.count(name)) crafts.push_back(name);
  const std::size_t offset = static_cast<std::size_t>(text::fnv1a(task_id) % 7);
  std::vector<std::string> out;
  for (std::size_t i = 0; i < std::min<std::size_t>(2, gathers.size()); ++i)
    out.push_back("get 1 " + gathers[(offset + i) % gathers.size()]);
  for (std::size_t i = 0; i < std::min<std::size_t>(2, crafts.size()); ++i)
    out.push_back("craft 1 " + crafts[(offset + i) % crafts.size()]);
  out.push_back("inventory");
  out.push_back("look around");
  out.push_back("give up");
  std::erase_if(out, [&](const std::string& a) { return expert && a == *expert; });
  return out;
}

}  // namespace revtraj
