#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "ucsg/chain.hpp"
#include "ucsg/errors.hpp"
#include "ucsg/matrix_game.hpp"
#include "ucsg/sg_model.hpp"

namespace ucsg {

/**
 * Worst-case mean passage time when *both* players may conspire to slow
 * the walk: max over ordered state pairs (return times included) and
 * over joint deterministic stationary policies of the mean first-passage
 * time.  Maximizing the hitting time of a fixed target is a one-player
 * problem over the joint action space, so deterministic policies
 * suffice.
 *
 * Returns +inf when some policy pair disconnects a pair of states.
 * Cost grows as (A1*A2)^S linear solves; `max_policies` guards against
 * accidental use beyond desk scale.
 */
inline double diameter_a1(const SGModel& m, int64_t max_policies = 1 << 22) {
  const int JA = m.A1 * m.A2;
  double npol = std::pow(static_cast<double>(JA), m.S);
  if (npol > static_cast<double>(max_policies))
    throw SpecTooLarge("diameter_a1: joint policy enumeration too large");
  std::vector<int> joint(m.S, 0);
  std::vector<double> P(static_cast<size_t>(m.S) * m.S);
  double worst = 0.0;
  while (true) {
    for (int s = 0; s < m.S; ++s) {
      const double* row = m.row(s, joint[s] / m.A2, joint[s] % m.A2);
      for (int t = 0; t < m.S; ++t) P[static_cast<size_t>(s) * m.S + t] = row[t];
    }
    std::vector<double> T = mean_first_passage(P, m.S);
    for (double v : T) {
      if (v > worst) worst = v;
      if (v == std::numeric_limits<double>::infinity())
        return std::numeric_limits<double>::infinity();
    }
    int d = 0;
    while (d < m.S && ++joint[d] == JA) joint[d++] = 0;
    if (d == m.S) break;
  }
  return worst;
}

namespace detail {

/// True iff the delaying player can keep the walk away from `target`
/// surely (with probability one) from some state.  Greatest fixpoint of
/// "has an action whose every outcome row stays inside the avoid set";
/// a pure action suffices because mixtures of safe actions are safe.
inline bool delayer_separates(const SGModel& m, int target) {
  std::vector<char> safe(m.S, 1);
  safe[target] = 0;
  bool changed = true;
  while (changed) {
    changed = false;
    for (int s = 0; s < m.S; ++s) {
      if (!safe[s]) continue;
      bool has_safe_action = false;
      for (int a2 = 0; a2 < m.A2 && !has_safe_action; ++a2) {
        bool ok = true;
        for (int a1 = 0; a1 < m.A1 && ok; ++a1) {
          const double* row = m.row(s, a1, a2);
          for (int t = 0; t < m.S; ++t)
            if (row[t] > 0.0 && !safe[t]) {
              ok = false;
              break;
            }
        }
        has_safe_action = ok;
      }
      if (!has_safe_action) {
        safe[s] = 0;
        changed = true;
      }
    }
  }
  for (int s = 0; s < m.S; ++s)
    if (safe[s]) return true;
  return false;
}

}  // namespace detail

/**
 * Adversarial-traveller diameter: max over ordered state pairs of the
 * hitting-time game value where Player 1 steers toward the target and
 * Player 2 delays, i.e. max_{s,s'} max_{pi2} min_{pi1} E[T_{s -> s'}].
 * Return times (s = s') are included via one extra stage evaluation at
 * the target.
 *
 * Solved per target by value iteration on the absorbing-target game;
 * iterates increase monotonically from zero.  When the delaying player
 * can surely avoid a target, or the iterates blow past `value_cap`
 * (effective disconnection at any usable scale), the diameter is
 * reported as +inf.  Exhausting the iteration cap with bounded,
 * still-moving values throws NoConvergence.
 */
inline double diameter_a2(const SGModel& m, double tol = 1e-10,
                          int64_t max_iters = 1000000,
                          double value_cap = 1e5) {
  double worst = 0.0;
  std::vector<double> v(m.S), vnew(m.S), H(static_cast<size_t>(m.A1) * m.A2);
  for (int target = 0; target < m.S; ++target) {
    if (detail::delayer_separates(m, target))
      return std::numeric_limits<double>::infinity();
    std::fill(v.begin(), v.end(), 0.0);
    auto stage_value = [&](int s, const std::vector<double>& cont) {
      for (int a1 = 0; a1 < m.A1; ++a1)
        for (int a2 = 0; a2 < m.A2; ++a2) {
          const double* row = m.row(s, a1, a2);
          double acc = 1.0;
          for (int t = 0; t < m.S; ++t)
            if (t != target) acc += row[t] * cont[t];
          // Player 1 minimizes the delay, so it is the row player of
          // the negated matrix.
          H[static_cast<size_t>(a1) * m.A2 + a2] = -acc;
        }
      return -game_value(H, m.A1, m.A2);
    };
    int64_t it = 0;
    while (true) {
      double diff = 0.0;
      for (int s = 0; s < m.S; ++s) {
        vnew[s] = (s == target) ? 0.0 : stage_value(s, v);
        diff = std::max(diff, std::abs(vnew[s] - v[s]));
      }
      v = vnew;
      if (diff <= tol) break;
      for (int s = 0; s < m.S; ++s)
        if (v[s] > value_cap) return std::numeric_limits<double>::infinity();
      if (++it > max_iters)
        throw NoConvergence("diameter_a2: value iteration cap exceeded");
    }
    for (int s = 0; s < m.S; ++s) {
      double val = (s == target) ? stage_value(target, v) : v[s];
      if (val > worst) worst = val;
    }
  }
  return worst;
}

}  // namespace ucsg
