#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <vector>

#include "ucsg/diameter.hpp"
#include "ucsg/errors.hpp"
#include "ucsg/rng.hpp"
#include "ucsg/sg_model.hpp"

namespace ucsg {

enum class Family { ergodic_random, garnet, turn_based, river_swim_2p };

struct GenSpec {
  Family family = Family::ergodic_random;
  int S = 2;
  int A1 = 2;
  int A2 = 2;
  double eps_mix = 0.2;   // uniform-mixing weight; must be > 0 for ergodic_random
  int branching = 2;      // nonzero successors per cell (garnet)
  uint64_t seed = 1;
  bool exact_diameters = false;  // demand enumerated diameters or fail
  int64_t enum_budget = 1 << 22;
};

struct GeneratedGame {
  SGModel model;
  double diameter1 = std::numeric_limits<double>::infinity();
  double diameter2 = std::numeric_limits<double>::infinity();
  bool exact = false;            // diameters enumerated rather than bounded
  double analytic_bound = std::numeric_limits<double>::infinity();
};

namespace detail {

inline void mix_uniform(SGModel& m, double eps) {
  if (eps <= 0.0) return;
  const double u = eps / m.S;
  for (double& p : m.kernel) p = (1.0 - eps) * p + u;
}

inline void fill_ergodic(SGModel& m, Rng& rng) {
  std::vector<double> row(m.S);
  for (int s = 0; s < m.S; ++s)
    for (int a1 = 0; a1 < m.A1; ++a1)
      for (int a2 = 0; a2 < m.A2; ++a2) {
        m.r(s, a1, a2) = rng.uniform();
        rng.dirichlet_flat(row.data(), m.S);
        std::copy(row.begin(), row.end(), m.row(s, a1, a2));
      }
}

inline void fill_garnet(SGModel& m, Rng& rng, int branching) {
  const int b = std::max(1, std::min(branching, m.S));
  std::vector<int> perm(m.S);
  std::vector<double> w(b);
  for (int s = 0; s < m.S; ++s)
    for (int a1 = 0; a1 < m.A1; ++a1)
      for (int a2 = 0; a2 < m.A2; ++a2) {
        m.r(s, a1, a2) = rng.uniform();
        std::iota(perm.begin(), perm.end(), 0);
        for (int i = 0; i < b; ++i)  // partial Fisher-Yates
          std::swap(perm[i], perm[i + rng.uniform_int(m.S - i)]);
        rng.dirichlet_flat(w.data(), b);
        double* row = m.row(s, a1, a2);
        for (int i = 0; i < b; ++i) row[perm[i]] = w[i];
      }
}

inline void fill_turn_based(SGModel& m, Rng& rng) {
  std::vector<double> row(m.S);
  for (int s = 0; s < m.S; ++s) {
    const bool p1_owns = rng.uniform_int(2) == 0;
    const int n = p1_owns ? m.A1 : m.A2;
    for (int a = 0; a < n; ++a) {
      const double rew = rng.uniform();
      rng.dirichlet_flat(row.data(), m.S);
      // the other player's action is null: duplicate across it
      for (int other = 0; other < (p1_owns ? m.A2 : m.A1); ++other) {
        const int a1 = p1_owns ? a : other;
        const int a2 = p1_owns ? other : a;
        m.r(s, a1, a2) = rew;
        std::copy(row.begin(), row.end(), m.row(s, a1, a2));
      }
    }
  }
}

/**
 * Two-player river swim on a chain of S states.  Player 1 swims left
 * (action 0, deterministic) or right (action 1); Player 2 sets the
 * current, calm (0) or rough (1), which scales the odds of the swim
 * succeeding.  Only the far-right state pays well; the lazy left bank
 * pays a trickle.
 */
inline void fill_river_swim(SGModel& m) {
  if (m.A1 != 2 || m.A2 != 2)
    throw DimensionMismatch("river swim needs exactly 2 actions per player");
  const double succ[2] = {0.6, 0.35};
  const double stay[2] = {0.3, 0.4};
  const double slip[2] = {0.1, 0.25};
  for (int s = 0; s < m.S; ++s)
    for (int a2 = 0; a2 < 2; ++a2) {
      double* left = m.row(s, 0, a2);
      left[std::max(0, s - 1)] = 1.0;
      double* right = m.row(s, 1, a2);
      const int up = std::min(m.S - 1, s + 1);
      const int dn = std::max(0, s - 1);
      right[up] += succ[a2];
      right[s] += stay[a2];
      right[dn] += slip[a2];
      for (int a1 = 0; a1 < 2; ++a1)
        m.r(s, a1, a2) = (s == m.S - 1) ? 1.0 : (s == 0 && a1 == 0 ? 0.05 : 0.0);
    }
}

}  // namespace detail

/**
 * Build a stochastic game instance with a certified diameter.
 *
 * Mixing every kernel row with the uniform distribution at weight
 * eps_mix > 0 reaches any state with probability at least eps_mix/S
 * per step whatever both players do, so both diameters are at most
 * S/eps_mix (the analytic bound).  Exact diameters are enumerated when
 * the joint-policy count fits the budget; demanding them beyond it
 * throws SpecTooLarge.
 */
inline GeneratedGame generate(const GenSpec& spec) {
  if (spec.S < 1 || spec.A1 < 1 || spec.A2 < 1)
    throw DimensionMismatch("generator sizes must be at least 1");
  if (spec.family == Family::ergodic_random && !(spec.eps_mix > 0.0))
    throw DimensionMismatch("ergodic_random requires eps_mix > 0");
  if (spec.eps_mix < 0.0 || spec.eps_mix > 1.0)
    throw DimensionMismatch("eps_mix must lie in [0,1]");
  GeneratedGame out;
  out.model = SGModel(spec.S, spec.A1, spec.A2);
  Rng rng(spec.seed);
  switch (spec.family) {
    case Family::ergodic_random:
      detail::fill_ergodic(out.model, rng);
      break;
    case Family::garnet:
      detail::fill_garnet(out.model, rng, spec.branching);
      break;
    case Family::turn_based:
      detail::fill_turn_based(out.model, rng);
      break;
    case Family::river_swim_2p:
      detail::fill_river_swim(out.model);
      break;
  }
  detail::mix_uniform(out.model, spec.eps_mix);
  out.model.validate(1e-9);
  if (spec.eps_mix > 0.0) out.analytic_bound = spec.S / spec.eps_mix;

  const double joint = std::pow(static_cast<double>(spec.A1) * spec.A2, spec.S);
  const bool feasible = joint <= static_cast<double>(spec.enum_budget);
  if (spec.exact_diameters && !feasible)
    throw SpecTooLarge("exact diameters need " + std::to_string(joint) +
                       " joint policies, budget is " +
                       std::to_string(spec.enum_budget));
  if (feasible) {
    out.diameter1 = diameter_a1(out.model, spec.enum_budget);
    out.diameter2 = diameter_a2(out.model);
    out.exact = true;
  } else {
    out.diameter1 = out.diameter2 = out.analytic_bound;
  }
  return out;
}

}  // namespace ucsg
