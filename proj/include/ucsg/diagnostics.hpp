#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

#include "ucsg/chain.hpp"
#include "ucsg/errors.hpp"
#include "ucsg/rng.hpp"
#include "ucsg/sg_model.hpp"

namespace ucsg {

namespace detail {

inline std::vector<double> random_irreducible_chain(Rng& rng, int S,
                                                    double eps) {
  std::vector<double> P(static_cast<size_t>(S) * S);
  std::vector<double> row(S);
  for (int s = 0; s < S; ++s) {
    rng.dirichlet_flat(row.data(), S);
    for (int t = 0; t < S; ++t)
      P[static_cast<size_t>(s) * S + t] = (1.0 - eps) * row[t] + eps / S;
  }
  return P;
}

/// Blend each row toward an independent random row, with the blend
/// weight chosen so no entry moves by more than `cap`.
inline std::vector<double> jitter_rows(const std::vector<double>& P, int S,
                                       double cap, Rng& rng) {
  std::vector<double> Pt(P);
  std::vector<double> q(S);
  for (int s = 0; s < S; ++s) {
    rng.dirichlet_flat(q.data(), S);
    double maxdiff = 0.0;
    for (int t = 0; t < S; ++t)
      maxdiff = std::max(maxdiff,
                         std::abs(q[t] - P[static_cast<size_t>(s) * S + t]));
    const double w = maxdiff > 0.0 ? std::min(1.0, cap / maxdiff) : 0.0;
    for (int t = 0; t < S; ++t) {
      const size_t i = static_cast<size_t>(s) * S + t;
      Pt[i] = (1.0 - w) * P[i] + w * q[t];
    }
  }
  return Pt;
}

inline double max_entry_diff(const std::vector<double>& A,
                             const std::vector<double>& B) {
  double m = 0.0;
  for (size_t i = 0; i < A.size(); ++i) m = std::max(m, std::abs(A[i] - B[i]));
  return m;
}

inline double max_mfpt(const std::vector<double>& T, int S,
                       bool include_diagonal) {
  double m = 0.0;
  for (int i = 0; i < S; ++i)
    for (int j = 0; j < S; ++j)
      if (include_diagonal || i != j)
        m = std::max(m, T[static_cast<size_t>(i) * S + j]);
  return m;
}

}  // namespace detail

struct PerturbationReport {
  int S = 0;
  double D_before = 0.0;
  double E_norm = 0.0;  // max absolute entry of the kernel difference
  double D_after = 0.0;
  bool in_hypothesis = false;  // E_norm within 1/(8 D S^2)
  bool bound_holds = false;    // D_after within 2 D_before
};

/**
 * Perturb an irreducible chain by a random row-stochastic jitter capped
 * at min(perturb_scale, 1/(8 D S^2)) in max-entry norm, and report how
 * far the worst mean first passage time moved.  Within that cap it can
 * at most double.  `force_scale` removes the cap (for demonstrating
 * that the doubling guarantee needs its hypothesis) — reports from
 * forced runs are informational.
 */
inline PerturbationReport check_mfpt_perturbation(const std::vector<double>& P,
                                                  int S, double perturb_scale,
                                                  uint64_t seed,
                                                  bool force_scale = false) {
  if (!is_irreducible(P, S))
    throw MultichainError("mfpt perturbation check needs an irreducible chain");
  PerturbationReport rep;
  rep.S = S;
  std::vector<double> T = mean_first_passage(P, S);
  rep.D_before = detail::max_mfpt(T, S, true);
  const double threshold = 1.0 / (8.0 * rep.D_before * S * S);
  const double cap =
      force_scale ? perturb_scale : std::min(perturb_scale, threshold);
  Rng rng(seed);
  std::vector<double> Pt = detail::jitter_rows(P, S, cap, rng);
  rep.E_norm = detail::max_entry_diff(P, Pt);
  rep.in_hypothesis = rep.E_norm <= threshold + 1e-15;
  std::vector<double> Tt = mean_first_passage(Pt, S);
  rep.D_after = detail::max_mfpt(Tt, S, true);
  rep.bound_holds = rep.D_after <= 2.0 * rep.D_before + 1e-9;
  return rep;
}

/// Largest kernel-entry perturbation under which irreducibility is
/// guaranteed to survive: 2 / (S max_{i != j} T_ij).
inline double irreducibility_threshold(const std::vector<double>& P, int S) {
  std::vector<double> T = mean_first_passage(P, S);
  const double maxT = detail::max_mfpt(T, S, false);
  return maxT > 0.0 ? 2.0 / (S * maxT) : 2.0;
}

/**
 * Coordinatewise stationary-distribution sensitivity: true iff
 *
 *   |mu~_j - mu_j| <= mu_j (S ||E||_inf / 2) max_{i != j} T_ij
 *
 * holds for every state j, with 1e-10 slack.  Both chains must be
 * irreducible.
 */
inline bool check_stationary_perturbation(const std::vector<double>& P,
                                          const std::vector<double>& Ptilde,
                                          int S) {
  std::vector<double> mu = stationary_distribution(P, S);
  std::vector<double> mut = stationary_distribution(Ptilde, S);
  const double E = detail::max_entry_diff(P, Ptilde);
  std::vector<double> T = mean_first_passage(P, S);
  const double maxT = detail::max_mfpt(T, S, false);
  for (int j = 0; j < S; ++j) {
    const double bound = mu[j] * (S * E / 2.0) * maxT;
    if (std::abs(mut[j] - mu[j]) > bound + 1e-10) return false;
  }
  return true;
}

struct WrappedChain {
  std::vector<double> kernel;  // S x S, row-major
  std::vector<double> mu;      // empirical visit frequencies
  double residual = 0.0;       // worst deviation of mu from stationarity
};

/**
 * Close a trajectory slice into a loop (adding the jump from its last
 * state back to its first) and form the empirical kernel of that loop.
 * Because the loop is closed, each state's in-count equals its
 * out-count, so the empirical visit frequency vector is *exactly*
 * stationary for the wrapped kernel.  Returns nothing if some state
 * never appears (the kernel would have an empty row).
 */
inline std::optional<WrappedChain> wrapped_empirical_chain(
    const std::vector<int>& states, int S) {
  if (states.empty()) throw DimensionMismatch("empty trajectory slice");
  const int64_t len = static_cast<int64_t>(states.size());
  std::vector<int64_t> counts(static_cast<size_t>(S) * S, 0);
  std::vector<int64_t> visits(S, 0);
  for (int64_t i = 0; i < len; ++i) {
    const int from = states[i];
    const int to = states[(i + 1) % len];  // wrap the final step
    if (from < 0 || from >= S || to < 0 || to >= S)
      throw DimensionMismatch("trajectory state out of range");
    counts[static_cast<size_t>(from) * S + to] += 1;
    visits[from] += 1;
  }
  for (int s = 0; s < S; ++s)
    if (visits[s] == 0) return std::nullopt;

  WrappedChain out;
  out.kernel.assign(static_cast<size_t>(S) * S, 0.0);
  out.mu.resize(S);
  for (int s = 0; s < S; ++s) {
    out.mu[s] = static_cast<double>(visits[s]) / static_cast<double>(len);
    for (int t = 0; t < S; ++t)
      out.kernel[static_cast<size_t>(s) * S + t] =
          static_cast<double>(counts[static_cast<size_t>(s) * S + t]) /
          static_cast<double>(visits[s]);
  }
  // fixed-point residual of the empirical frequencies...
  double res = 0.0;
  for (int t = 0; t < S; ++t) {
    double acc = 0.0;
    for (int s = 0; s < S; ++s)
      acc += out.mu[s] * out.kernel[static_cast<size_t>(s) * S + t];
    res = std::max(res, std::abs(acc - out.mu[t]));
  }
  // ...and agreement with the solved stationary distribution
  std::vector<double> solved = stationary_distribution(out.kernel, S);
  for (int s = 0; s < S; ++s)
    res = std::max(res, std::abs(solved[s] - out.mu[s]));
  out.residual = res;
  return out;
}

struct SpanCheck {
  double span_h = 0.0;
  double max_mfpt = 0.0;
  bool holds = false;  // span_h <= max_mfpt + 1e-8
};

/// Bias spread against worst passage time for one fixed policy pair.
inline SpanCheck span_check(const SGModel& m, const StationaryPolicy& pi1,
                            const StationaryPolicy& pi2) {
  EvalReport ev = evaluate(m, pi1, pi2);
  if (!ev.irreducible)
    throw MultichainError("span check needs an irreducible induced chain");
  SpanCheck out;
  out.span_h = ev.span_h;
  out.max_mfpt = detail::max_mfpt(ev.mfpt, m.S, false);
  out.holds = out.span_h <= out.max_mfpt + 1e-8;
  return out;
}

inline bool check_span_bound(const SGModel& m, const StationaryPolicy& pi1,
                             const StationaryPolicy& pi2) {
  return span_check(m, pi1, pi2).holds;
}

// ---------------------------------------------------------------------------
// Batch suites, shared by the command-line diagnostics and the
// acceptance checks.  All are deterministic in their seed.

inline std::vector<PerturbationReport> mfpt_perturbation_suite(
    int count, int max_states, double scale, uint64_t seed,
    bool force_scale = false) {
  Rng rng(seed);
  std::vector<PerturbationReport> out;
  out.reserve(count);
  for (int i = 0; i < count; ++i) {
    const int S = 2 + rng.uniform_int(std::max(1, max_states - 1));
    std::vector<double> P =
        detail::random_irreducible_chain(rng, S, 0.05 + 0.3 * rng.uniform());
    out.push_back(
        check_mfpt_perturbation(P, S, scale, rng.next(), force_scale));
  }
  return out;
}

struct StationaryCheck {
  int S = 0;
  double E_norm = 0.0;
  double irr_threshold = 0.0;
  bool perturbed_irreducible = false;
  bool bound_holds = false;
};

inline std::vector<StationaryCheck> stationary_perturbation_suite(
    int count, int max_states, double scale, uint64_t seed) {
  Rng rng(seed);
  std::vector<StationaryCheck> out;
  out.reserve(count);
  for (int i = 0; i < count; ++i) {
    const int S = 2 + rng.uniform_int(std::max(1, max_states - 1));
    std::vector<double> P =
        detail::random_irreducible_chain(rng, S, 0.05 + 0.3 * rng.uniform());
    StationaryCheck chk;
    chk.S = S;
    chk.irr_threshold = irreducibility_threshold(P, S);
    const double cap = std::min(scale, 0.5 * chk.irr_threshold);
    std::vector<double> Pt = detail::jitter_rows(P, S, cap, rng);
    chk.E_norm = detail::max_entry_diff(P, Pt);
    chk.perturbed_irreducible = is_irreducible(Pt, S);
    chk.bound_holds = check_stationary_perturbation(P, Pt, S);
    out.push_back(chk);
  }
  return out;
}

struct WrappedSuiteRow {
  int S = 0;
  int64_t length = 0;
  double residual = 0.0;
};

/// Simulates random-chain trajectory slices until `count` of them visit
/// every state, and reports the wrapped-kernel residual of each.
inline std::vector<WrappedSuiteRow> wrapped_chain_suite(int count,
                                                        int max_states,
                                                        int64_t max_length,
                                                        uint64_t seed) {
  Rng rng(seed);
  std::vector<WrappedSuiteRow> out;
  out.reserve(count);
  int64_t attempts = 0;
  while (static_cast<int>(out.size()) < count && attempts < 50LL * count) {
    ++attempts;
    const int S = 1 + rng.uniform_int(max_states);
    std::vector<double> P =
        detail::random_irreducible_chain(rng, S, 0.05 + 0.3 * rng.uniform());
    const int64_t len =
        std::min<int64_t>(max_length, 1 + S + rng.uniform_int(64) * S);
    std::vector<int> states(len);
    int s = rng.uniform_int(S);
    for (int64_t t = 0; t < len; ++t) {
      states[t] = s;
      s = rng.categorical(P.data() + static_cast<size_t>(s) * S, S);
    }
    std::optional<WrappedChain> wc = wrapped_empirical_chain(states, S);
    if (!wc) continue;
    out.push_back({S, len, wc->residual});
  }
  if (static_cast<int>(out.size()) < count)
    throw NoConvergence("wrapped chain suite could not cover enough slices");
  return out;
}

inline std::vector<SpanCheck> span_bound_suite(int count, int max_states,
                                               uint64_t seed) {
  Rng rng(seed);
  std::vector<SpanCheck> out;
  out.reserve(count);
  std::vector<double> row;
  for (int i = 0; i < count; ++i) {
    const int S = 2 + rng.uniform_int(std::max(1, max_states - 1));
    const int A1 = 1 + rng.uniform_int(3);
    const int A2 = 1 + rng.uniform_int(3);
    SGModel m(S, A1, A2);
    row.resize(S);
    const double eps = 0.05 + 0.3 * rng.uniform();
    for (int s = 0; s < S; ++s)
      for (int a1 = 0; a1 < A1; ++a1)
        for (int a2 = 0; a2 < A2; ++a2) {
          m.r(s, a1, a2) = rng.uniform();
          rng.dirichlet_flat(row.data(), S);
          double* dst = m.row(s, a1, a2);
          for (int t = 0; t < S; ++t)
            dst[t] = (1.0 - eps) * row[t] + eps / S;
        }
    StationaryPolicy pi1(Player::one, S, A1);
    StationaryPolicy pi2(Player::two, S, A2);
    for (int s = 0; s < S; ++s) {
      rng.dirichlet_flat(&pi1.prob[static_cast<size_t>(s) * A1], A1);
      rng.dirichlet_flat(&pi2.prob[static_cast<size_t>(s) * A2], A2);
    }
    out.push_back(span_check(m, pi1, pi2));
  }
  return out;
}

}  // namespace ucsg
