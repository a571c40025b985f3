#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "revtraj/judge.hpp"
#include "revtraj/rng.hpp"
#include "revtraj/traj.hpp"

namespace revtraj {

struct PairingConfig {
  FilterConfig filter;
  int max_pairs_per_task = 32;
  // When set, a bad trajectory is paired with every acceptable good instead
  // of only the best one.
  bool reuse_bad = false;

  void validate() const;
};

// Bad trajectories are taken in harvest order. Each is paired with the
// acceptable good of highest reward, then longest shared prefix, then earliest
// harvest position. Pairs need at least one step after the shared prefix on
// both sides.
std::vector<TrajectoryPair> build_pairs(std::span<const Trajectory> harvest,
                                        const PairingConfig& cfg);

using TransitionMode = RevisionSource;

struct TransitionResult {
  std::size_t transition = 0;
  std::size_t judge_calls = 0;
  // No step was judged Bad, so the transition fell back to the bad length.
  bool fallback = false;
};

// Direct mode: the bad length. Model-guided: the first 1-based step j in
// (divergence, bad length] judged Bad given steps before it; Uncertain keeps
// scanning. Judge errors propagate.
TransitionResult find_transition(const TrajectoryPair& pair, Judge& judge, TransitionMode mode);

// The ten bundled reflections, in index order.
const std::vector<std::string>& revision_thoughts();

RevisionSignal make_signal(int index);
RevisionSignal sample_signal(Rng& rng);

struct RevisionBatch {
  std::vector<RevisionTrajectory> revisions;
  std::vector<Trajectory> goods;
  std::size_t judge_calls = 0;
  std::size_t judge_skips = 0;
  std::size_t fallbacks = 0;
};

// One revision per pair, each with its own generator derived from
// (task_seed, pair index). Pairs whose judge is unavailable are skipped and
// counted. Goods are the distinct harvest trajectories above the filter's
// good threshold, whether paired or not.
RevisionBatch build_revisions(std::span<const TrajectoryPair> pairs,
                              std::span<const Trajectory> harvest, Judge& judge,
                              TransitionMode mode, const FilterConfig& filter,
                              std::uint64_t task_seed);

}  // namespace revtraj
