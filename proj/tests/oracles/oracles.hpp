// Independent reference implementations. These deliberately avoid the
// library's own helpers so a shared bug cannot hide.
#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_dec_float.hpp>

namespace oracle {

using Dec = boost::multiprecision::cpp_dec_float_50;

// Q + c * sqrt(ln(Np) / N) in 50-digit decimal arithmetic.
inline Dec uct(const Dec& w, unsigned long n, unsigned long np, const Dec& c) {
  const Dec q = w / Dec(n);
  return q + c * boost::multiprecision::sqrt(boost::multiprecision::log(Dec(np)) / Dec(n));
}

// Minimal tree description for the selection oracle.
struct Node {
  long parent = -1;
  std::vector<std::size_t> children;
  unsigned long visits = 0;
  double value = 0.0;
  int depth = 0;
  bool terminal = false;
  bool expanded = false;
};

inline bool can_expand(const Node& n, int max_depth) {
  return !n.expanded && !n.terminal && n.depth < max_depth;
}

// Whether any node in the subtree can still be chosen: an expandable node or
// a never-visited leaf. Computed by explicit stack walk.
inline bool open_subtree(const std::vector<Node>& t, std::size_t id, int max_depth) {
  std::vector<std::size_t> stack{id};
  while (!stack.empty()) {
    const std::size_t cur = stack.back();
    stack.pop_back();
    const Node& n = t[cur];
    if (can_expand(n, max_depth)) return true;
    if (n.children.empty() && n.visits == 0 && !n.expanded) return true;
    for (std::size_t c : n.children) stack.push_back(c);
  }
  return false;
}

// Brute-force descent: at every level score all open children with the
// high-precision UCT and take the first maximum. Returns the visited path;
// empty when the root is closed.
inline std::vector<std::size_t> select_path(const std::vector<Node>& t, double c, int max_depth) {
  std::vector<std::size_t> path;
  if (!open_subtree(t, 0, max_depth)) return path;
  std::size_t cur = 0;
  path.push_back(cur);
  while (!can_expand(t[cur], max_depth) && !t[cur].children.empty()) {
    std::optional<std::size_t> best;
    Dec best_score = 0;
    bool best_inf = false;
    for (std::size_t ch : t[cur].children) {
      if (!open_subtree(t, ch, max_depth)) continue;
      const Node& n = t[ch];
      const bool inf = n.visits == 0;
      Dec score = inf ? Dec(0) : uct(Dec(n.value), n.visits, t[cur].visits, Dec(c));
      bool better = false;
      if (!best) better = true;
      else if (inf && !best_inf) better = true;
      else if (!inf && !best_inf && score > best_score) better = true;
      if (better) {
        best = ch;
        best_score = score;
        best_inf = inf;
      }
    }
    if (!best) return {};
    cur = *best;
    path.push_back(cur);
  }
  return path;
}

// The three strict reward inequalities, with alpha = 1 read as "reward is 1".
inline bool pair_accepted(double bad, double good, double beta, double alpha) {
  const bool good_over_alpha = alpha >= 1.0 ? good == 1.0 : alpha < good;
  return bad < beta && beta < good && good_over_alpha;
}

// Count of consecutive copies of every block, maximised over start and
// compared element by element.
inline std::size_t max_repeats(const std::vector<std::string>& a, std::size_t L) {
  std::size_t best = 1;
  for (std::size_t i = 0; i + L <= a.size(); ++i) {
    std::size_t reps = 0;
    for (std::size_t start = i; start + L <= a.size(); start += L) {
      bool same = true;
      for (std::size_t k = 0; k < L; ++k)
        if (a[start + k] != a[i + k]) same = false;
      if (!same) break;
      ++reps;
    }
    if (reps > best) best = reps;
  }
  return best;
}

// Largest k such that subgoals[0..k) occurs as a subsequence of `actions`,
// found by trying every subset of positions (actions.size() <= 16).
inline std::size_t subgoal_prefix_bruteforce(const std::vector<std::string>& subgoals,
                                             const std::vector<std::string>& actions) {
  std::size_t best = 0;
  const std::size_t n = actions.size();
  for (unsigned long mask = 0; mask < (1ul << n); ++mask) {
    std::vector<std::string> picked;
    for (std::size_t i = 0; i < n; ++i)
      if (mask & (1ul << i)) picked.push_back(actions[i]);
    if (picked.size() > subgoals.size()) continue;
    bool prefix = true;
    for (std::size_t i = 0; i < picked.size(); ++i)
      if (picked[i] != subgoals[i]) prefix = false;
    if (prefix && picked.size() > best) best = picked.size();
  }
  return best;
}

// Splice on plain vectors: first `transition` bad items, the
// signal, then the good items from `divergence` on.
template <class T>
std::vector<T> splice(const std::vector<T>& bad, const std::vector<T>& good, std::size_t divergence,
                      std::size_t transition, const T& signal) {
  std::vector<T> out;
  for (std::size_t i = 0; i < transition; ++i) out.push_back(bad[i]);
  out.push_back(signal);
  for (std::size_t i = divergence; i < good.size(); ++i) out.push_back(good[i]);
  return out;
}

}  // namespace oracle
