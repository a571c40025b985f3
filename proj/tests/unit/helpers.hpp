#pragma once

#include <filesystem>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "revtraj/traj.hpp"

namespace testutil {

inline revtraj::Instruction instr(std::string task = "t") {
  return revtraj::Instruction{"toy", std::move(task), "Do the thing."};
}

// Terminal trajectory from (action, observation) pairs.
inline revtraj::Trajectory traj(const std::vector<std::pair<std::string, std::string>>& steps,
                                double reward, std::string task = "t") {
  revtraj::Trajectory t;
  t.instruction = instr(std::move(task));
  for (const auto& [a, o] : steps) t.steps.push_back(revtraj::Step{std::nullopt, a, o});
  t.reward = reward;
  t.terminal = true;
  return t;
}

inline revtraj::Step step(std::string a, std::string o) {
  return revtraj::Step{std::nullopt, std::move(a), std::move(o)};
}

// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("revtraj_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace testutil
