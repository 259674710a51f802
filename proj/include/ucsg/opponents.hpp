#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "ucsg/errors.hpp"
#include "ucsg/planning.hpp"
#include "ucsg/rng.hpp"
#include "ucsg/sg_model.hpp"
#include "ucsg/trajectory.hpp"

namespace ucsg {

/// Everything an adversary may condition on when choosing its next
/// action distribution.  `history` holds all steps strictly before `t`;
/// `learner_policy` is the learner's current phase policy (adversaries
/// are allowed to know it).
struct OpponentContext {
  const SGModel& model;
  const StationaryPolicy& learner_policy;
  int phase = 0;
  int64_t t = 0;
  int state = 0;
  const Trajectory& history;
};

/**
 * Player-2 strategy for online runs.  Variants:
 *
 *   stationary(pi2)           play pi2(.|s_t) forever
 *   best_response(period)     exact minimizing stationary response to
 *                             the learner's current policy, recomputed
 *                             on phase change (and additionally every
 *                             `period` steps when period > 0)
 *   switching(pis, cuts)      pis[i] while t < cuts[i], last one after
 *   random_seeded(seed)       a fresh random action distribution every
 *                             step, deterministic in the seed
 *
 * `act` must be called once per simulated step, in step order.
 */
class Opponent {
 public:
  enum class Kind { stationary, best_response, switching, random_seeded };

  static Opponent stationary(StationaryPolicy pi2) {
    Opponent o(Kind::stationary);
    o.pis_.push_back(std::move(pi2));
    return o;
  }

  static Opponent best_response(int64_t recompute_period = 0) {
    Opponent o(Kind::best_response);
    o.period_ = recompute_period;
    return o;
  }

  static Opponent switching(std::vector<StationaryPolicy> pis,
                            std::vector<int64_t> cuts) {
    if (pis.empty() || cuts.size() + 1 != pis.size())
      throw DimensionMismatch(
          "switching opponent needs n policies and n-1 cut times");
    for (size_t i = 1; i < cuts.size(); ++i)
      if (cuts[i] <= cuts[i - 1])
        throw DimensionMismatch("switching cut times must increase");
    Opponent o(Kind::switching);
    o.pis_ = std::move(pis);
    o.cuts_ = std::move(cuts);
    return o;
  }

  static Opponent random_seeded(uint64_t seed) {
    Opponent o(Kind::random_seeded);
    o.rng_ = Rng(seed);
    return o;
  }

  Kind kind() const { return kind_; }

  /// Distribution over Player-2 actions for ctx.state.  The reference
  /// stays valid until the next act() call.
  const std::vector<double>& act(const OpponentContext& ctx) {
    const int A2 = ctx.model.A2;
    buf_.resize(A2);
    switch (kind_) {
      case Kind::stationary:
        return fixed_row(ctx, pis_[0]);
      case Kind::switching: {
        size_t idx = 0;
        while (idx < cuts_.size() && ctx.t >= cuts_[idx]) ++idx;
        return fixed_row(ctx, pis_[idx]);
      }
      case Kind::random_seeded:
        rng_.dirichlet_flat(buf_.data(), A2);
        return buf_;
      case Kind::best_response: {
        if (ctx.learner_policy.empty())
          throw DimensionMismatch(
              "best-response opponent needs the learner's policy");
        const bool stale =
            cached_phase_ != ctx.phase ||
            (period_ > 0 && ctx.t - cached_t_ >= period_);
        if (stale || cached_.pi2.empty()) {
          cached_ = exact_best_response(ctx.model, ctx.learner_policy);
          cached_phase_ = ctx.phase;
          cached_t_ = ctx.t;
        }
        const double* row = cached_.pi2.dist(ctx.state);
        buf_.assign(row, row + A2);
        return buf_;
      }
    }
    throw NumericalFailure("unreachable opponent kind");
  }

 private:
  explicit Opponent(Kind k) : kind_(k) {}

  const std::vector<double>& fixed_row(const OpponentContext& ctx,
                                       const StationaryPolicy& pi) {
    if (pi.owner != Player::two || pi.S != ctx.model.S || pi.A != ctx.model.A2)
      throw DimensionMismatch("opponent policy does not match the model");
    const double* row = pi.dist(ctx.state);
    buf_.assign(row, row + ctx.model.A2);
    return buf_;
  }

  Kind kind_;
  std::vector<StationaryPolicy> pis_;
  std::vector<int64_t> cuts_;
  int64_t period_ = 0;
  Rng rng_{0};
  BestResponse cached_;
  int cached_phase_ = -1;
  int64_t cached_t_ = 0;
  std::vector<double> buf_;
};

/**
 * Visit-weighted average of the opponent's per-step action
 * distributions over one trajectory slice [begin, end):
 *
 *   pibar(a|s) = sum_t 1{s_t = s} pi_t(a) / sum_t 1{s_t = s}.
 *
 * `pi2_log` stores one length-A2 distribution per step, flat, aligned
 * with `steps`.  Returns nothing when some state was never visited in
 * the slice (the average is undefined there).
 */
inline std::optional<StationaryPolicy> extract_pibar(
    const Trajectory& steps, size_t begin, size_t end,
    const std::vector<double>& pi2_log, int S, int A2) {
  if (begin >= end || end > steps.size() ||
      pi2_log.size() < end * static_cast<size_t>(A2))
    throw DimensionMismatch("extract_pibar: bad slice");
  StationaryPolicy pibar(Player::two, S, A2);
  std::vector<int64_t> visits(S, 0);
  for (size_t i = begin; i < end; ++i) {
    const int s = steps[i].s;
    visits[s] += 1;
    for (int a = 0; a < A2; ++a)
      pibar.p(s, a) += pi2_log[i * static_cast<size_t>(A2) + a];
  }
  for (int s = 0; s < S; ++s) {
    if (visits[s] == 0) return std::nullopt;
    for (int a = 0; a < A2; ++a)
      pibar.p(s, a) /= static_cast<double>(visits[s]);
  }
  return pibar;
}

}  // namespace ucsg
