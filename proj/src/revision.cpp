#include "revtraj/revision.hpp"

#include <unordered_set>

#include "revtraj/error.hpp"
#include "revtraj/resources.hpp"
#include "revtraj/text.hpp"

namespace revtraj {

void PairingConfig::validate() const {
  filter.validate();
  if (max_pairs_per_task < 1) fail(ErrorCode::config_error, "max_pairs_per_task must be >= 1");
}

std::vector<TrajectoryPair> build_pairs(std::span<const Trajectory> harvest,
                                        const PairingConfig& cfg) {
  std::vector<TrajectoryPair> pairs;
  const auto limit = static_cast<std::size_t>(cfg.max_pairs_per_task);
  for (const Trajectory& bad : harvest) {
    if (pairs.size() >= limit) break;
    if (!bad.reward || !cfg.filter.is_bad(*bad.reward)) continue;

    struct Candidate {
      std::size_t index;
      double reward;
      std::size_t prefix;
    };
    std::vector<Candidate> candidates;
    for (std::size_t g = 0; g < harvest.size(); ++g) {
      const Trajectory& good = harvest[g];
      if (!good.reward || !cfg.filter.is_good(*good.reward)) continue;
      if (good.instruction != bad.instruction) continue;
      const std::size_t t = shared_prefix(bad, good);
      if (t >= bad.steps.size() || t >= good.steps.size()) continue;
      candidates.push_back({g, *good.reward, t});
    }
    std::stable_sort(candidates.begin(), candidates.end(), [](const auto& a, const auto& b) {
      if (a.reward != b.reward) return a.reward > b.reward;
      return a.prefix > b.prefix;
    });
    for (const auto& c : candidates) {
      if (pairs.size() >= limit) break;
      TrajectoryPair pair{bad, harvest[c.index], c.prefix};
      if (classify_pair(pair, cfg.filter) != PairVerdict::accept) continue;
      pairs.push_back(std::move(pair));
      if (!cfg.reuse_bad) break;
    }
  }
  return pairs;
}

TransitionResult find_transition(const TrajectoryPair& pair, Judge& judge, TransitionMode mode) {
  const Trajectory& bad = pair.bad;
  const std::size_t length = bad.steps.size();
  if (pair.divergence >= length)
    fail(ErrorCode::invalid_pair, "bad trajectory has no step after the shared prefix");
  TransitionResult r;
  r.transition = length;
  if (mode == TransitionMode::direct) return r;
  for (std::size_t j = pair.divergence + 1; j <= length; ++j) {
    const JudgeQuery q = judge_query(bad.instruction, bad.initial_observation, bad.steps, j - 1);
    ++r.judge_calls;
    if (judge.judge_step(q).label == VerdictLabel::bad) {
      r.transition = j;
      return r;
    }
  }
  r.fallback = true;
  return r;
}

const std::vector<std::string>& revision_thoughts() {
  static const std::vector<std::string> thoughts = [] {
    std::vector<std::string> out;
    for (const auto& line : text::split_lines(resources::revision_thoughts())) {
      const std::string t = text::trim(line);
      if (t.empty() || t.front() == '#') continue;
      out.push_back(t);
    }
    if (out.size() != 10)
      fail(ErrorCode::parse_error,
           "expected 10 revision thoughts, found " + std::to_string(out.size()));
    return out;
  }();
  return thoughts;
}

RevisionSignal make_signal(int index) {
  const auto& thoughts = revision_thoughts();
  if (index < 0 || static_cast<std::size_t>(index) >= thoughts.size())
    fail(ErrorCode::invalid_argument, "revision thought index out of range");
  RevisionSignal s;
  s.thought_index = index;
  s.assistant_text = thoughts[static_cast<std::size_t>(index)];
  return s;
}

RevisionSignal sample_signal(Rng& rng) {
  return make_signal(static_cast<int>(rng.index(revision_thoughts().size())));
}

RevisionBatch build_revisions(std::span<const TrajectoryPair> pairs,
                              std::span<const Trajectory> harvest, Judge& judge,
                              TransitionMode mode, const FilterConfig& filter,
                              std::uint64_t task_seed) {
  RevisionBatch batch;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const TrajectoryPair& pair = pairs[i];
    if (classify_pair(pair, filter) != PairVerdict::accept) continue;
    TransitionResult tr;
    try {
      tr = find_transition(pair, judge, mode);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::judge_unavailable) throw;
      ++batch.judge_skips;
      continue;
    }
    batch.judge_calls += tr.judge_calls;
    if (tr.fallback) ++batch.fallbacks;
    Rng rng(mix_seed(task_seed, i));
    batch.revisions.push_back(splice(pair, tr.transition, sample_signal(rng), mode));
  }

  std::unordered_set<std::string> seen;
  for (const Trajectory& t : harvest) {
    if (!t.reward || !filter.is_good(*t.reward)) continue;
    if (!seen.insert(action_key(t.steps)).second) continue;
    Trajectory g = t;
    g.kind = *t.reward == 1.0 ? TrajectoryKind::optimal : TrajectoryKind::good;
    batch.goods.push_back(std::move(g));
  }
  return batch;
}

}  // namespace revtraj
