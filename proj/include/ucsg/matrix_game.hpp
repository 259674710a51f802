#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "ucsg/errors.hpp"

namespace ucsg {

struct LpResult {
  double value = 0.0;
  std::vector<double> x;     // primal solution
  std::vector<double> dual;  // one multiplier per constraint
  int64_t iterations = 0;
};

/**
 * Dense tableau simplex for  max c'x  s.t.  Ax <= b, x >= 0  with b >= 0,
 * so the slack basis is feasible and no phase-1 is needed.  Entering and
 * leaving variables follow Bland's smallest-index rule, which cannot
 * cycle, so the iteration cap only trips on genuinely broken input.
 *
 * A is row-major m x n.
 */
inline LpResult simplex_max(const std::vector<double>& A, int m, int n,
                            const std::vector<double>& b,
                            const std::vector<double>& c,
                            int64_t max_pivots = 1000000) {
  constexpr double kFeasTol = 1e-10;
  constexpr double kOptTol = 1e-9;
  for (int i = 0; i < m; ++i)
    if (b[i] < 0.0)
      throw NumericalFailure("simplex_max requires b >= 0");
  const int cols = n + m + 1;  // variables, slacks, rhs
  std::vector<double> T(static_cast<size_t>(m) * cols, 0.0);
  std::vector<double> z(cols, 0.0);
  std::vector<int> basis(m);
  for (int i = 0; i < m; ++i) {
    double* row = T.data() + static_cast<size_t>(i) * cols;
    for (int j = 0; j < n; ++j) row[j] = A[static_cast<size_t>(i) * n + j];
    row[n + i] = 1.0;
    row[cols - 1] = b[i];
    basis[i] = n + i;
  }
  for (int j = 0; j < n; ++j) z[j] = -c[j];

  LpResult res;
  while (true) {
    int enter = -1;
    for (int j = 0; j < n + m; ++j)
      if (z[j] < -kOptTol) {
        enter = j;
        break;
      }
    if (enter < 0) break;
    int leave = -1;
    double best_ratio = std::numeric_limits<double>::infinity();
    for (int i = 0; i < m; ++i) {
      double a = T[static_cast<size_t>(i) * cols + enter];
      if (a > kFeasTol) {
        double ratio = T[static_cast<size_t>(i) * cols + cols - 1] / a;
        if (ratio < best_ratio - kFeasTol ||
            (ratio < best_ratio + kFeasTol && leave >= 0 &&
             basis[i] < basis[leave])) {
          best_ratio = ratio;
          leave = i;
        } else if (leave < 0 && ratio <= best_ratio) {
          best_ratio = ratio;
          leave = i;
        }
      }
    }
    if (leave < 0) throw NumericalFailure("simplex_max: unbounded program");
    // pivot on (leave, enter)
    double* prow = T.data() + static_cast<size_t>(leave) * cols;
    const double piv = prow[enter];
    for (int j = 0; j < cols; ++j) prow[j] /= piv;
    prow[enter] = 1.0;
    for (int i = 0; i < m; ++i) {
      if (i == leave) continue;
      double* row = T.data() + static_cast<size_t>(i) * cols;
      double f = row[enter];
      if (f == 0.0) continue;
      for (int j = 0; j < cols; ++j) row[j] -= f * prow[j];
      row[enter] = 0.0;
    }
    {
      double f = z[enter];
      if (f != 0.0) {
        for (int j = 0; j < cols; ++j) z[j] -= f * prow[j];
        z[enter] = 0.0;
      }
    }
    basis[leave] = enter;
    if (++res.iterations > max_pivots)
      throw NumericalFailure("simplex_max: pivot cap exceeded");
  }

  res.x.assign(n, 0.0);
  for (int i = 0; i < m; ++i)
    if (basis[i] < n)
      res.x[basis[i]] = T[static_cast<size_t>(i) * cols + cols - 1];
  res.dual.assign(m, 0.0);
  for (int i = 0; i < m; ++i) res.dual[i] = z[n + i];
  res.value = z[cols - 1];
  return res;
}

struct GameSolution {
  double value = 0.0;
  std::vector<double> p;  // row player's (maximizer's) optimal mixture
  std::vector<double> q;  // column player's (minimizer's) optimal mixture
  double duality_gap = 0.0;
  int64_t iterations = 0;
};

/**
 * Value and optimal mixtures of the zero-sum matrix game
 *     max_p min_q  p' G q
 * for a dense n x m payoff matrix (row player maximizes).
 *
 * The game is shifted entrywise so all payoffs are >= 1 and solved via
 * the classical reduction: the column player's program
 *     max 1'y  s.t.  G y <= 1, y >= 0
 * has optimum 1/v, the normalized y is the minimizer's mixture, and the
 * simplex duals on the slack rows give the maximizer's mixture.
 *
 * duality_gap = max_i (Gq)_i - min_j (p'G)_j, the width of the exact
 * bracket the two reported mixtures put around the true value.
 */
inline GameSolution solve_matrix_game(const std::vector<double>& G, int n,
                                      int m) {
  if (n <= 0 || m <= 0 ||
      G.size() != static_cast<size_t>(n) * static_cast<size_t>(m))
    throw DimensionMismatch("solve_matrix_game: bad payoff matrix shape");
  double lo = G[0];
  for (double g : G) lo = std::min(lo, g);
  const double shift = 1.0 - lo;
  std::vector<double> A(G.size());
  for (size_t i = 0; i < G.size(); ++i) A[i] = G[i] + shift;
  std::vector<double> b(n, 1.0), c(m, 1.0);
  LpResult lp = simplex_max(A, n, m, b, c);
  if (lp.value <= 0.0)
    throw NumericalFailure("solve_matrix_game: nonpositive program value");
  const double vshift = 1.0 / lp.value;

  GameSolution sol;
  sol.iterations = lp.iterations;
  sol.q.assign(m, 0.0);
  double qs = 0.0;
  for (int j = 0; j < m; ++j) {
    sol.q[j] = std::max(0.0, lp.x[j]) * vshift;
    qs += sol.q[j];
  }
  for (int j = 0; j < m; ++j) sol.q[j] /= qs;
  sol.p.assign(n, 0.0);
  double ps = 0.0;
  for (int i = 0; i < n; ++i) {
    sol.p[i] = std::max(0.0, lp.dual[i]) * vshift;
    ps += sol.p[i];
  }
  for (int i = 0; i < n; ++i) sol.p[i] /= ps;
  sol.value = vshift - shift;

  double row_guarantee = std::numeric_limits<double>::infinity();
  for (int j = 0; j < m; ++j) {
    double acc = 0.0;
    for (int i = 0; i < n; ++i)
      acc += sol.p[i] * G[static_cast<size_t>(i) * m + j];
    row_guarantee = std::min(row_guarantee, acc);
  }
  double col_guarantee = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < n; ++i) {
    double acc = 0.0;
    for (int j = 0; j < m; ++j)
      acc += G[static_cast<size_t>(i) * m + j] * sol.q[j];
    col_guarantee = std::max(col_guarantee, acc);
  }
  sol.duality_gap = col_guarantee - row_guarantee;
  return sol;
}

/// Game value only.
inline double game_value(const std::vector<double>& G, int n, int m) {
  return solve_matrix_game(G, n, m).value;
}

}  // namespace ucsg
