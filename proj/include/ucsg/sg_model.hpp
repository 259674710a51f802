#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "ucsg/errors.hpp"

namespace ucsg {

enum class Player { one, two };

/**
 * Two-player zero-sum stochastic game with simultaneous moves,
 * deterministic rewards in [0, 1] (paid by Player 2 to Player 1) and a
 * controlled transition kernel.
 *
 * Storage is flat and row-major:
 *   reward[(s*A1 + a1)*A2 + a2]
 *   kernel[((s*A1 + a1)*A2 + a2)*S + s']
 */
struct SGModel {
  int S = 0;
  int A1 = 0;
  int A2 = 0;
  std::vector<double> reward;
  std::vector<double> kernel;

  SGModel() = default;
  SGModel(int s, int a1, int a2)
      : S(s),
        A1(a1),
        A2(a2),
        reward(static_cast<size_t>(s) * a1 * a2, 0.0),
        kernel(static_cast<size_t>(s) * a1 * a2 * s, 0.0) {}

  int cell(int s, int a1, int a2) const { return (s * A1 + a1) * A2 + a2; }
  int cells() const { return S * A1 * A2; }

  double r(int s, int a1, int a2) const { return reward[cell(s, a1, a2)]; }
  double& r(int s, int a1, int a2) { return reward[cell(s, a1, a2)]; }

  const double* row(int s, int a1, int a2) const {
    return kernel.data() + static_cast<size_t>(cell(s, a1, a2)) * S;
  }
  double* row(int s, int a1, int a2) {
    return kernel.data() + static_cast<size_t>(cell(s, a1, a2)) * S;
  }

  /// Throws DimensionMismatch/NumericalFailure-free validation errors:
  /// shape consistency, rewards in [0,1], rows nonnegative and summing
  /// to 1 within `tol`.
  void validate(double tol = 1e-12) const {
    if (S <= 0 || A1 <= 0 || A2 <= 0)
      throw DimensionMismatch("model dimensions must be positive");
    if (reward.size() != static_cast<size_t>(cells()) ||
        kernel.size() != static_cast<size_t>(cells()) * S)
      throw DimensionMismatch("model array sizes do not match dimensions");
    for (int s = 0; s < S; ++s)
      for (int a1 = 0; a1 < A1; ++a1)
        for (int a2 = 0; a2 < A2; ++a2) {
          double rv = r(s, a1, a2);
          if (!(rv >= 0.0 && rv <= 1.0))
            throw ParseError("reward out of [0,1] at state " +
                             std::to_string(s) + " actions (" +
                             std::to_string(a1) + "," + std::to_string(a2) +
                             ")");
          const double* p = row(s, a1, a2);
          double sum = 0.0;
          for (int t = 0; t < S; ++t) {
            if (p[t] < -tol)
              throw ParseError("negative transition probability at state " +
                               std::to_string(s) + " actions (" +
                               std::to_string(a1) + "," + std::to_string(a2) +
                               ")");
            sum += p[t];
          }
          if (std::abs(sum - 1.0) > tol)
            throw ParseError("kernel row does not sum to 1 at state " +
                             std::to_string(s) + " actions (" +
                             std::to_string(a1) + "," + std::to_string(a2) +
                             "): sum = " + std::to_string(sum));
        }
  }
};

/// Per-state distribution over one player's actions.
struct StationaryPolicy {
  Player owner = Player::one;
  int S = 0;
  int A = 0;
  std::vector<double> prob;  // prob[s*A + a]

  StationaryPolicy() = default;
  StationaryPolicy(Player who, int s, int a)
      : owner(who), S(s), A(a), prob(static_cast<size_t>(s) * a, 0.0) {}

  double p(int s, int a) const { return prob[s * A + a]; }
  double& p(int s, int a) { return prob[s * A + a]; }
  const double* dist(int s) const { return prob.data() + s * A; }

  bool empty() const { return prob.empty(); }

  static StationaryPolicy uniform(Player who, int s, int a) {
    StationaryPolicy pi(who, s, a);
    for (auto& v : pi.prob) v = 1.0 / a;
    return pi;
  }

  /// Deterministic policy: one action index per state.
  static StationaryPolicy pure(Player who, int s, int a,
                               const std::vector<int>& choice) {
    if (static_cast<int>(choice.size()) != s)
      throw DimensionMismatch("pure policy needs one action per state");
    StationaryPolicy pi(who, s, a);
    for (int i = 0; i < s; ++i) pi.p(i, choice[i]) = 1.0;
    return pi;
  }

  void validate(double tol = 1e-12) const {
    if (S <= 0 || A <= 0 || prob.size() != static_cast<size_t>(S) * A)
      throw DimensionMismatch("policy arrays do not match dimensions");
    for (int s = 0; s < S; ++s) {
      double sum = 0.0;
      for (int a = 0; a < A; ++a) {
        if (p(s, a) < -tol)
          throw ParseError("negative action probability at state " +
                           std::to_string(s));
        sum += p(s, a);
      }
      if (std::abs(sum - 1.0) > tol)
        throw ParseError("policy row does not sum to 1 at state " +
                         std::to_string(s));
    }
  }
};

/// Markov chain with per-state expected reward: the object obtained by
/// fixing both players' stationary policies.
struct MarkovRewardProcess {
  int S = 0;
  std::vector<double> P;     // P[s*S + s']
  std::vector<double> rbar;  // rbar[s]

  MarkovRewardProcess() = default;
  explicit MarkovRewardProcess(int s)
      : S(s), P(static_cast<size_t>(s) * s, 0.0), rbar(s, 0.0) {}

  const double* row(int s) const { return P.data() + static_cast<size_t>(s) * S; }
  double* row(int s) { return P.data() + static_cast<size_t>(s) * S; }
};

/// Fix a stationary policy for each player and average the game's
/// rewards and kernel rows accordingly.
inline MarkovRewardProcess induce_mrp(const SGModel& m,
                                      const StationaryPolicy& pi1,
                                      const StationaryPolicy& pi2) {
  if (pi1.owner != Player::one || pi2.owner != Player::two)
    throw DimensionMismatch("induce_mrp expects (player-1, player-2) policies");
  if (pi1.S != m.S || pi1.A != m.A1 || pi2.S != m.S || pi2.A != m.A2)
    throw DimensionMismatch("policy shape does not match the model");
  MarkovRewardProcess mrp(m.S);
  for (int s = 0; s < m.S; ++s) {
    double* prow = mrp.row(s);
    double rb = 0.0;
    for (int a1 = 0; a1 < m.A1; ++a1) {
      double w1 = pi1.p(s, a1);
      if (w1 == 0.0) continue;
      for (int a2 = 0; a2 < m.A2; ++a2) {
        double w = w1 * pi2.p(s, a2);
        if (w == 0.0) continue;
        rb += w * m.r(s, a1, a2);
        const double* krow = m.row(s, a1, a2);
        for (int t = 0; t < m.S; ++t) prow[t] += w * krow[t];
      }
    }
    mrp.rbar[s] = rb;
  }
  return mrp;
}

}  // namespace ucsg
