#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <utility>
#include <vector>

#include "ucsg/chain.hpp"
#include "ucsg/confidence.hpp"
#include "ucsg/errors.hpp"
#include "ucsg/matrix_game.hpp"
#include "ucsg/sg_model.hpp"

namespace ucsg {

struct ViConfig {
  double alpha = 0.5;         // damping weight on the previous iterate
  double gamma = 1e-6;        // accuracy target for the value estimate
  int64_t max_iters = 1000000;
};

struct PlanResult {
  double rho = 0.0;     // midpoint of [rho_lo, rho_hi]
  double rho_lo = 0.0;  // each stationary response earns at least this
  double rho_hi = 0.0;  // the game value is at most this
  std::vector<double> v;
  StationaryPolicy pi1;
  int64_t iterations = 0;
  double final_span = 0.0;         // sp(v_{N+1} - v_N) at the stop
  double max_iterate_span = 0.0;   // max_i sp(v_i)
};

namespace detail {

inline void sort_by_value(const std::vector<double>& v, std::vector<int>& desc,
                          std::vector<int>& asc) {
  const int S = static_cast<int>(v.size());
  desc.resize(S);
  asc.resize(S);
  for (int i = 0; i < S; ++i) desc[i] = asc[i] = i;
  std::sort(desc.begin(), desc.end(), [&](int a, int b) {
    return v[a] != v[b] ? v[a] > v[b] : a < b;
  });
  std::sort(asc.begin(), asc.end(), [&](int a, int b) {
    return v[a] != v[b] ? v[a] < v[b] : a < b;
  });
}

/**
 * Greedy solution of  max_{p}  p.v  over the cell's admissible rows:
 * repeatedly move probability mass from the currently worst admissible
 * donor coordinate to the best receiver with headroom, while the L1
 * budget lasts.  Each unit moved costs 2 in L1 distance.  Exchange
 * optimality: any feasible row is reachable by such transfers, and the
 * greedy always picks the largest available per-unit gain, so the
 * result is an exact optimum of this LP.
 *
 * `desc`/`asc` are the coordinate orders under v (ties toward smaller
 * index), precomputed by the caller so a planning sweep sorts once.
 */
inline double transfer_max(const CellRegion& cell, const std::vector<double>& v,
                           const std::vector<int>& desc,
                           const std::vector<int>& asc,
                           std::vector<double>& out) {
  const int S = static_cast<int>(v.size());
  out.assign(cell.phat.begin(), cell.phat.end());
  double budget = 0.5 * cell.l1_radius;
  int ri = 0, di = 0;
  while (budget > 0.0 && ri < S && di < S) {
    const int rec = desc[ri];
    const double head = cell.hi[rec] - out[rec];
    if (head <= 0.0) {
      ++ri;
      continue;
    }
    const int don = asc[di];
    const double room = out[don] - cell.lo[don];
    if (room <= 0.0) {
      ++di;
      continue;
    }
    if (v[rec] <= v[don]) break;  // no strictly improving pair remains
    const double move = std::min(budget, std::min(head, room));
    out[rec] = (move == head) ? cell.hi[rec] : out[rec] + move;
    out[don] = (move == room) ? cell.lo[don] : out[don] - move;
    budget -= move;
  }
  double dot = 0.0, sum = 0.0;
  for (int t = 0; t < S; ++t) {
    dot += out[t] * v[t];
    sum += out[t];
  }
  if (std::abs(sum - 1.0) > 1e-10)
    throw NumericalFailure("transfer_max produced a non-simplex row");
  return dot;
}

}  // namespace detail

/// Most optimistic admissible transition row for one cell:
/// argmax_{p admissible} p.v together with the attained value.
inline std::pair<std::vector<double>, double> inner_max_transition(
    const CellRegion& cell, const std::vector<double>& v) {
  std::vector<int> desc, asc;
  detail::sort_by_value(v, desc, asc);
  std::vector<double> row;
  double val = detail::transfer_max(cell, v, desc, asc, row);
  return {std::move(row), val};
}

struct MaximinPlan {
  PlanResult plan;
  SGModel model;  // the given rewards with the maximizing kernels
};

/**
 * Optimistic maximin planning over a confidence region.
 *
 * Damped value iteration on the extended game in which Player 1 also
 * picks the transition row within each cell's admissible set:
 *
 *   v_{i+1}(s) = (1-alpha) val_{a1,a2}{ r(s,a1,a2)
 *                  + max_{p adm.} p.v_i } + alpha v_i(s),
 *
 * stopping once sp(v_{i+1} - v_i) <= (1-alpha) gamma.  The damping
 * makes every induced chain aperiodic, so the differences converge for
 * any admissible kernels.  On halt,
 *
 *   rho_lo <= min_{pi2} rho(model, pi1, pi2, s)  for every s, and
 *   rho_hi >= the maximin value of every admissible kernel choice,
 *
 * with rho_hi - rho_lo <= gamma; `rho` is the midpoint.  The returned
 * policy and kernels come from the stage games of the final sweep.
 */
inline MaximinPlan maximin_evi(const ConfidenceRegion& reg,
                               const std::vector<double>& reward,
                               const ViConfig& cfg) {
  const int S = reg.S, A1 = reg.A1, A2 = reg.A2;
  if (reward.size() != static_cast<size_t>(S) * A1 * A2)
    throw DimensionMismatch("maximin_evi: reward table shape mismatch");
  MaximinPlan out;
  out.model = SGModel(S, A1, A2);
  out.model.reward = reward;
  PlanResult& plan = out.plan;
  plan.pi1 = StationaryPolicy(Player::one, S, A1);
  plan.v.assign(S, 0.0);

  std::vector<double> stage(S), row, Q(static_cast<size_t>(A1) * A2);
  std::vector<int> desc, asc;
  const double alpha = cfg.alpha;
  while (true) {
    detail::sort_by_value(plan.v, desc, asc);
    for (int s = 0; s < S; ++s) {
      for (int a1 = 0; a1 < A1; ++a1)
        for (int a2 = 0; a2 < A2; ++a2) {
          const int ci = (s * A1 + a1) * A2 + a2;
          double val =
              detail::transfer_max(reg.cells[ci], plan.v, desc, asc, row);
          std::copy(row.begin(), row.end(),
                    out.model.kernel.begin() + static_cast<size_t>(ci) * S);
          Q[static_cast<size_t>(a1) * A2 + a2] = reward[ci] + val;
        }
      GameSolution sol = solve_matrix_game(Q, A1, A2);
      stage[s] = sol.value;
      for (int a1 = 0; a1 < A1; ++a1) plan.pi1.p(s, a1) = sol.p[a1];
    }
    double dmin = std::numeric_limits<double>::infinity();
    double dmax = -dmin;
    for (int s = 0; s < S; ++s) {
      double vnew = (1.0 - alpha) * stage[s] + alpha * plan.v[s];
      double d = vnew - plan.v[s];
      dmin = std::min(dmin, d);
      dmax = std::max(dmax, d);
      plan.v[s] = vnew;
    }
    ++plan.iterations;
    plan.max_iterate_span = std::max(plan.max_iterate_span, span(plan.v));
    plan.final_span = dmax - dmin;
    if (plan.final_span <= (1.0 - alpha) * cfg.gamma) {
      plan.rho_lo = dmin / (1.0 - alpha);
      plan.rho_hi = dmax / (1.0 - alpha);
      plan.rho = 0.5 * (plan.rho_lo + plan.rho_hi);
      return out;
    }
    if (plan.iterations >= cfg.max_iters)
      throw NoConvergence("maximin_evi: iteration cap at difference span " +
                          std::to_string(plan.final_span));
  }
}

/// Maximin planning on a known model: the same iteration with the
/// admissible set collapsed to the true kernel.
inline PlanResult schweitzer_vi(const SGModel& m, const ViConfig& cfg) {
  return maximin_evi(collapsed_region(m), m.reward, cfg).plan;
}

struct ResponsePlan {
  PlanResult plan;        // pi1 is left empty; rho_* bracket the best response
  StationaryPolicy pi2;   // deterministic minimizing response
  SGModel model;          // the given rewards with the minimizing kernels
};

/**
 * Pessimistic best-response planning for Player 2 against a fixed
 * Player-1 policy: the same damped iteration with stage value
 *
 *   min_{a2}  sum_{a1} pi1(a1|s) [ r(s,a1,a2) + min_{p adm.} p.v ],
 *
 * i.e. the kernel inside each cell is chosen adversarially *against*
 * Player 1.  On halt rho_lo lower-bounds the best response value on
 * every admissible kernel, rho_hi upper-bounds the value of the
 * returned (pi2, kernel) pair, and rho_hi - rho_lo <= gamma.
 */
inline ResponsePlan pessimistic_response_evi(const ConfidenceRegion& reg,
                                             const std::vector<double>& reward,
                                             const StationaryPolicy& pi1,
                                             const ViConfig& cfg) {
  const int S = reg.S, A1 = reg.A1, A2 = reg.A2;
  if (reward.size() != static_cast<size_t>(S) * A1 * A2)
    throw DimensionMismatch("pessimistic_response_evi: reward shape mismatch");
  if (pi1.S != S || pi1.A != A1 || pi1.owner != Player::one)
    throw DimensionMismatch("pessimistic_response_evi: policy shape mismatch");
  ResponsePlan out;
  out.model = SGModel(S, A1, A2);
  out.model.reward = reward;
  out.pi2 = StationaryPolicy(Player::two, S, A2);
  PlanResult& plan = out.plan;
  plan.v.assign(S, 0.0);

  std::vector<double> stage(S), negv(S), row;
  std::vector<int> choice(S, 0), desc, asc;
  const double alpha = cfg.alpha;
  while (true) {
    for (int s = 0; s < S; ++s) negv[s] = -plan.v[s];
    detail::sort_by_value(negv, desc, asc);
    for (int s = 0; s < S; ++s) {
      double best = std::numeric_limits<double>::infinity();
      int besta2 = 0;
      for (int a2 = 0; a2 < A2; ++a2) {
        double acc = 0.0;
        for (int a1 = 0; a1 < A1; ++a1) {
          const int ci = (s * A1 + a1) * A2 + a2;
          double val =
              -detail::transfer_max(reg.cells[ci], negv, desc, asc, row);
          std::copy(row.begin(), row.end(),
                    out.model.kernel.begin() + static_cast<size_t>(ci) * S);
          acc += pi1.p(s, a1) * (reward[ci] + val);
        }
        if (acc < best) {
          best = acc;
          besta2 = a2;
        }
      }
      stage[s] = best;
      choice[s] = besta2;
    }
    double dmin = std::numeric_limits<double>::infinity();
    double dmax = -dmin;
    for (int s = 0; s < S; ++s) {
      double vnew = (1.0 - alpha) * stage[s] + alpha * plan.v[s];
      double d = vnew - plan.v[s];
      dmin = std::min(dmin, d);
      dmax = std::max(dmax, d);
      plan.v[s] = vnew;
    }
    ++plan.iterations;
    plan.max_iterate_span = std::max(plan.max_iterate_span, span(plan.v));
    plan.final_span = dmax - dmin;
    if (plan.final_span <= (1.0 - alpha) * cfg.gamma) {
      plan.rho_lo = dmin / (1.0 - alpha);
      plan.rho_hi = dmax / (1.0 - alpha);
      plan.rho = 0.5 * (plan.rho_lo + plan.rho_hi);
      for (int s = 0; s < S; ++s) out.pi2.p(s, choice[s]) = 1.0;
      return out;
    }
    if (plan.iterations >= cfg.max_iters)
      throw NoConvergence(
          "pessimistic_response_evi: iteration cap at difference span " +
          std::to_string(plan.final_span));
  }
}

struct BestResponse {
  std::vector<double> gain;  // per-state minimal average reward against pi1
  StationaryPolicy pi2;      // a deterministic policy attaining it
};

/**
 * Exact minimizing stationary response to a fixed Player-1 policy on a
 * known model.  When A2^S fits the budget, enumerate deterministic
 * Player-2 policies and evaluate each induced chain's per-state gain;
 * the lexicographically smallest gain vector is also the elementwise
 * minimum, because some deterministic response is uniformly optimal.
 * Beyond the budget, fall back to high-accuracy response iteration;
 * the reported gain is then the exact evaluation of the returned
 * policy, itself optimal to within the iteration accuracy.
 */
inline BestResponse exact_best_response(const SGModel& m,
                                        const StationaryPolicy& pi1,
                                        int64_t enum_budget = 1 << 20,
                                        double fallback_gamma = 1e-9) {
  BestResponse out;
  double npol = std::pow(static_cast<double>(m.A2), m.S);
  if (npol <= static_cast<double>(enum_budget)) {
    std::vector<int> choice(m.S, 0);
    bool first = true;
    while (true) {
      StationaryPolicy pi2 = StationaryPolicy::pure(Player::two, m.S, m.A2, choice);
      MarkovRewardProcess mrp = induce_mrp(m, pi1, pi2);
      std::vector<double> g = gain_vector(mrp.P, mrp.rbar, m.S);
      if (first || std::lexicographical_compare(g.begin(), g.end(),
                                                out.gain.begin(),
                                                out.gain.end())) {
        out.gain = g;
        out.pi2 = pi2;
        first = false;
      }
      int d = 0;
      while (d < m.S && ++choice[d] == m.A2) choice[d++] = 0;
      if (d == m.S) break;
    }
    return out;
  }
  ViConfig cfg;
  cfg.gamma = fallback_gamma;
  ResponsePlan rp =
      pessimistic_response_evi(collapsed_region(m), m.reward, pi1, cfg);
  MarkovRewardProcess mrp = induce_mrp(m, pi1, rp.pi2);
  out.gain = gain_vector(mrp.P, mrp.rbar, m.S);
  out.pi2 = rp.pi2;
  return out;
}

}  // namespace ucsg
