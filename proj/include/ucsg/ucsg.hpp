#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "ucsg/confidence.hpp"
#include "ucsg/errors.hpp"
#include "ucsg/opponents.hpp"
#include "ucsg/planning.hpp"
#include "ucsg/rng.hpp"
#include "ucsg/sg_model.hpp"
#include "ucsg/trajectory.hpp"

namespace ucsg {

enum class RunMode { online, offline };

struct RunConfig {
  int64_t T = 1000;
  double delta = 0.1;
  RunMode mode = RunMode::online;
  uint64_t seed = 1;
  int initial_state = 0;
  ViConfig vi;  // alpha and iteration cap; the accuracy is set per phase

  double rho_star_gamma = 1e-8;    // accuracy of the reference game value
  std::vector<double> epsilons;    // near-optimality thresholds to tally
  bool exact_gaps = true;          // evaluate each phase policy exactly
  int64_t response_enum_budget = 1 << 20;
  bool log_pi2 = true;             // record opponent action distributions
};

struct PhaseRecord {
  int k = 0;  // 1-based
  int64_t t_start = 0;
  int64_t length = 0;
  double gamma = 0.0;  // planning accuracy used this phase
  StationaryPolicy pi1;
  double optimistic_rho = 0.0;
  bool contained = false;  // true kernel inside this phase's region
  // exact near-optimality gap of pi1 (NaN when not evaluated)
  double exact_gap = std::numeric_limits<double>::quiet_NaN();
  // offline mode only:
  StationaryPolicy pi2;
  double pessimistic_rho = std::numeric_limits<double>::quiet_NaN();
  double u = std::numeric_limits<double>::quiet_NaN();
};

struct RunReport {
  RunMode mode = RunMode::online;
  int64_t T = 0;
  uint64_t seed = 0;
  int initial_state = 0;

  double rho_star = 0.0;  // reference game value with its bracket
  double rho_star_lo = 0.0;
  double rho_star_hi = 0.0;

  Trajectory steps;
  std::vector<double> pi2_log;  // per step, flat stride A2 (may be empty)
  std::vector<PhaseRecord> phases;

  double total_reward = 0.0;
  double regret = 0.0;  // steps.size() * rho_star - total_reward
  // (epsilon, number of steps spent in phases with exact_gap > epsilon)
  std::vector<std::pair<double, int64_t>> l_eps;

  // offline mode only:
  StationaryPolicy best_policy;  // pi1 of the phase with smallest u
  int argmin_u_phase = 0;        // 1-based; 0 when no phase completed
  double min_u = std::numeric_limits<double>::infinity();

  bool aborted = false;  // planning failed mid-run; report is partial
  std::string abort_reason;
};

namespace detail {

inline RunReport run_core(const SGModel& model, Opponent* opponent,
                          const RunConfig& cfg) {
  model.validate();
  if (cfg.T < 1) throw DimensionMismatch("run needs at least one step");
  if (!(cfg.delta > 0.0 && cfg.delta < 1.0))
    throw DimensionMismatch("delta must lie in (0,1)");
  if (cfg.initial_state < 0 || cfg.initial_state >= model.S)
    throw DimensionMismatch("initial state out of range");
  if (cfg.mode == RunMode::online && opponent == nullptr)
    throw DimensionMismatch("online run needs an opponent");

  RunReport rep;
  rep.mode = cfg.mode;
  rep.T = cfg.T;
  rep.seed = cfg.seed;
  rep.initial_state = cfg.initial_state;

  Rng rng(cfg.seed);
  Counts counts(model.S, model.A1, model.A2);
  // the confidence schedule needs log2(horizon) >= 1
  const int64_t horizon = std::max<int64_t>(cfg.T, 2);
  int s = cfg.initial_state;
  int64_t t = 1;
  try {
    {
      ViConfig star_cfg = cfg.vi;
      star_cfg.gamma = cfg.rho_star_gamma;
      PlanResult star = schweitzer_vi(model, star_cfg);
      rep.rho_star = star.rho;
      rep.rho_star_lo = star.rho_lo;
      rep.rho_star_hi = star.rho_hi;
    }
    while (t <= cfg.T) {
      PhaseRecord ph;
      ph.k = static_cast<int>(rep.phases.size()) + 1;
      ph.t_start = t;
      ph.gamma = 1.0 / std::sqrt(static_cast<double>(t));
      counts.start_phase(t);
      ConfidenceRegion region = build_region(counts, cfg.delta, horizon);
      ph.contained = region_contains(region, model);

      ViConfig vi = cfg.vi;
      vi.gamma = ph.gamma;
      MaximinPlan opt = maximin_evi(region, model.reward, vi);
      ph.pi1 = opt.plan.pi1;
      ph.optimistic_rho = opt.plan.rho;
      if (cfg.mode == RunMode::offline) {
        ResponsePlan pess =
            pessimistic_response_evi(region, model.reward, ph.pi1, vi);
        ph.pi2 = pess.pi2;
        ph.pessimistic_rho = pess.plan.rho;
        ph.u = ph.optimistic_rho - ph.pessimistic_rho + 2.0 * ph.gamma;
      }
      if (cfg.exact_gaps) {
        BestResponse br =
            exact_best_response(model, ph.pi1, cfg.response_enum_budget);
        ph.exact_gap =
            rep.rho_star - *std::min_element(br.gain.begin(), br.gain.end());
      }

      while (t <= cfg.T) {
        const int a1 = rng.categorical(ph.pi1.dist(s), model.A1);
        int a2;
        if (cfg.mode == RunMode::offline) {
          const double* d2 = ph.pi2.dist(s);
          if (cfg.log_pi2)
            rep.pi2_log.insert(rep.pi2_log.end(), d2, d2 + model.A2);
          a2 = rng.categorical(d2, model.A2);
        } else {
          OpponentContext ctx{model, ph.pi1, ph.k, t, s, rep.steps};
          const std::vector<double>& d2 = opponent->act(ctx);
          if (cfg.log_pi2)
            rep.pi2_log.insert(rep.pi2_log.end(), d2.begin(), d2.end());
          a2 = rng.categorical(d2.data(), model.A2);
        }
        const double r = model.r(s, a1, a2);
        const int s2 = rng.categorical(model.row(s, a1, a2), model.S);
        rep.steps.push_back({t, s, a1, a2, r, ph.k});
        rep.total_reward += r;
        counts.record(s, a1, a2, s2);
        s = s2;
        ++t;
        ++ph.length;
        if (counts.doubling) break;
      }
      rep.phases.push_back(std::move(ph));
    }
  } catch (const NoConvergence& e) {
    rep.aborted = true;
    rep.abort_reason = e.what();
  }

  rep.regret =
      static_cast<double>(rep.steps.size()) * rep.rho_star - rep.total_reward;
  if (cfg.exact_gaps) {
    for (double eps : cfg.epsilons) {
      int64_t steps_over = 0;
      for (const PhaseRecord& ph : rep.phases)
        if (ph.exact_gap > eps) steps_over += ph.length;
      rep.l_eps.emplace_back(eps, steps_over);
    }
  }
  if (cfg.mode == RunMode::offline) {
    for (const PhaseRecord& ph : rep.phases)
      if (ph.u < rep.min_u) {
        rep.min_u = ph.u;
        rep.argmin_u_phase = ph.k;
        rep.best_policy = ph.pi1;
      }
  }
  return rep;
}

}  // namespace detail

/**
 * Online learning run: alternate planning phases and play.
 *
 * Each phase snapshots the visit counts, builds the confidence region
 * at failure budget delta over the declared horizon, plans an
 * optimistic maximin policy to accuracy 1/sqrt(t_k), then plays it
 * against the opponent until some cell's within-phase visits reach
 * their snapshot count.  Regret is accounted against the true game
 * value computed once at high accuracy.  If planning ever fails to
 * converge the partial report is returned with `aborted` set.
 */
inline RunReport run_online(const SGModel& model, Opponent& opponent,
                            const RunConfig& cfg) {
  RunConfig c = cfg;
  c.mode = RunMode::online;
  return detail::run_core(model, &opponent, c);
}

/**
 * Offline (sample-then-commit) run: both players are simulated.
 * Player 1 plays the optimistic maximin policy; Player 2 plays the
 * pessimistic response to it within the same region.  Each phase k
 * carries the certificate
 *
 *   u_k = optimistic_rho - pessimistic_rho + 2 gamma_k,
 *
 * an upper bound (up to estimate error) on the true near-optimality
 * gap of pi1_k; the reported best_policy minimizes u_k.
 */
inline RunReport run_offline(const SGModel& model, const RunConfig& cfg) {
  RunConfig c = cfg;
  c.mode = RunMode::offline;
  return detail::run_core(model, nullptr, c);
}

}  // namespace ucsg
