#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "ucsg/errors.hpp"
#include "ucsg/sg_model.hpp"

namespace ucsg {

/**
 * Visit statistics backing the per-phase confidence regions.
 *
 * `total`/`trans` accumulate over the whole run; `n_snap`/`trans_snap`
 * are frozen at the most recent phase start (with the visit count
 * floored at 1 so radii stay finite); `v_phase` counts within-phase
 * visits.  A phase ends as soon as some cell's within-phase count
 * reaches its snapshot count.
 */
struct Counts {
  int S = 0, A1 = 0, A2 = 0;
  std::vector<int64_t> total;       // per cell
  std::vector<int64_t> trans;       // per cell x next state
  std::vector<int64_t> n_snap;      // per cell, >= 1
  std::vector<int64_t> trans_snap;  // per cell x next state
  std::vector<int64_t> v_phase;     // per cell
  int64_t t_phase_start = 1;
  bool doubling = false;

  Counts() = default;
  Counts(int s, int a1, int a2)
      : S(s),
        A1(a1),
        A2(a2),
        total(static_cast<size_t>(s) * a1 * a2, 0),
        trans(static_cast<size_t>(s) * a1 * a2 * s, 0),
        n_snap(total.size(), 1),
        trans_snap(trans.size(), 0),
        v_phase(total.size(), 0) {}

  int cell(int s, int a1, int a2) const { return (s * A1 + a1) * A2 + a2; }

  void start_phase(int64_t t) {
    t_phase_start = t;
    trans_snap = trans;
    for (size_t i = 0; i < total.size(); ++i) {
      n_snap[i] = total[i] > 0 ? total[i] : 1;
      v_phase[i] = 0;
    }
    doubling = false;
  }

  void record(int s, int a1, int a2, int s_next) {
    int c = cell(s, a1, a2);
    total[c] += 1;
    trans[static_cast<size_t>(c) * S + s_next] += 1;
    v_phase[c] += 1;
    if (v_phase[c] >= n_snap[c]) doubling = true;
  }
};

/// Admissible transition rows for one (state, action pair) cell: the
/// empirical row, an L1 ball around it, and per-coordinate interval
/// caps, all intersected with the simplex.
struct CellRegion {
  std::vector<double> phat;
  std::vector<double> lo;
  std::vector<double> hi;
  double l1_radius = 2.0;
  int64_t n = 1;
};

struct ConfidenceRegion {
  int S = 0, A1 = 0, A2 = 0;
  double delta = 0.0;
  double delta1 = 0.0;
  std::vector<CellRegion> cells;

  const CellRegion& cell(int s, int a1, int a2) const {
    return cells[(s * A1 + a1) * A2 + a2];
  }
};

namespace detail {

/// Interval of admissible coordinate values implied by the
/// concentration constraints at empirical frequency `ph` with `n`
/// samples; `lnt` = ln(6/delta1).
inline void coordinate_interval(double ph, int64_t n, double lnt, double& lo,
                                double& hi) {
  double m = std::sqrt(lnt / (2.0 * static_cast<double>(n)));
  if (n >= 2) {
    double var = ph * (1.0 - ph);
    double mb = std::sqrt(2.0 * var * lnt / static_cast<double>(n)) +
                7.0 * lnt / (3.0 * static_cast<double>(n - 1));
    m = std::min(m, mb);
  }
  lo = std::max(0.0, ph - m);
  hi = std::min(1.0, ph + m);
  if (n >= 2) {
    const double c = std::sqrt(2.0 * lnt / static_cast<double>(n - 1));
    const double f = std::sqrt(ph * (1.0 - ph));
    if (f - c > 0.0) {
      // sqrt(x(1-x)) >= f - c keeps a middle interval
      double disc = std::sqrt(std::max(0.0, 1.0 - 4.0 * (f - c) * (f - c)));
      lo = std::max(lo, 0.5 * (1.0 - disc));
      hi = std::min(hi, 0.5 * (1.0 + disc));
    }
    if (f + c < 0.5) {
      // sqrt(x(1-x)) <= f + c excludes a band around 1/2; the far side
      // of the band is already outside the |x - ph| cap, so only the
      // near root binds
      double disc = std::sqrt(std::max(0.0, 1.0 - 4.0 * (f + c) * (f + c)));
      if (ph <= 0.5)
        hi = std::min(hi, 0.5 * (1.0 - disc));
      else
        lo = std::max(lo, 0.5 * (1.0 + disc));
    }
  }
  if (lo > ph + 1e-12 || hi < ph - 1e-12)
    throw NumericalFailure("coordinate interval excludes its own center");
  lo = std::min(lo, ph);
  hi = std::max(hi, ph);
}

}  // namespace detail

/**
 * Confidence region for every cell from the phase-start snapshot in
 * `counts`, at overall failure probability `delta` over a declared
 * horizon of `horizon_T` steps.
 *
 * Per cell with n snapshot samples the admissible rows p~ satisfy
 *   ||p~ - p^||_1 <= min(2, sqrt(2 S ln(1/d1) / n)),   and per coordinate
 *   |p~_i - p^_i| and |sd(p~_i) - sd(p^_i)| concentration caps,
 * where d1 = delta / (2 S^2 A1 A2 log2(horizon_T)).  Cells never
 * visited use the uniform row with n = 1; their L1 radius is 2, so any
 * simplex row is admissible.
 */
inline ConfidenceRegion build_region(const Counts& counts, double delta,
                                     int64_t horizon_T) {
  if (horizon_T < 2) throw DimensionMismatch("horizon must be at least 2");
  if (!(delta > 0.0 && delta < 1.0))
    throw DimensionMismatch("delta must lie in (0,1)");
  ConfidenceRegion reg;
  reg.S = counts.S;
  reg.A1 = counts.A1;
  reg.A2 = counts.A2;
  reg.delta = delta;
  const double S = counts.S;
  const double A = static_cast<double>(counts.A1) * counts.A2;
  reg.delta1 =
      delta / (2.0 * S * S * A * std::log2(static_cast<double>(horizon_T)));
  const double ln_inv = std::log(1.0 / reg.delta1);
  const double ln6 = std::log(6.0 / reg.delta1);
  reg.cells.resize(counts.total.size());
  for (size_t ci = 0; ci < counts.total.size(); ++ci) {
    CellRegion& cell = reg.cells[ci];
    const int64_t raw = [&] {
      int64_t acc = 0;
      for (int t = 0; t < counts.S; ++t)
        acc += counts.trans_snap[ci * counts.S + t];
      return acc;
    }();
    cell.n = raw > 0 ? raw : 1;
    cell.phat.assign(counts.S, 0.0);
    if (raw > 0) {
      for (int t = 0; t < counts.S; ++t)
        cell.phat[t] =
            static_cast<double>(counts.trans_snap[ci * counts.S + t]) /
            static_cast<double>(raw);
    } else {
      for (int t = 0; t < counts.S; ++t) cell.phat[t] = 1.0 / S;
    }
    cell.l1_radius = std::min(
        2.0, std::sqrt(2.0 * S * ln_inv / static_cast<double>(cell.n)));
    cell.lo.resize(counts.S);
    cell.hi.resize(counts.S);
    for (int t = 0; t < counts.S; ++t)
      detail::coordinate_interval(cell.phat[t], cell.n, ln6, cell.lo[t],
                                  cell.hi[t]);
  }
  return reg;
}

inline bool cell_contains(const CellRegion& cell, const double* p, int S,
                          double tol = 1e-12) {
  double l1 = 0.0;
  for (int t = 0; t < S; ++t) {
    if (p[t] < cell.lo[t] - tol || p[t] > cell.hi[t] + tol) return false;
    l1 += std::abs(p[t] - cell.phat[t]);
  }
  return l1 <= cell.l1_radius + tol;
}

/// True when every kernel row of `truth` is admissible.
inline bool region_contains(const ConfidenceRegion& reg, const SGModel& truth,
                            double tol = 1e-12) {
  if (reg.S != truth.S || reg.A1 != truth.A1 || reg.A2 != truth.A2)
    throw DimensionMismatch("region and model shapes differ");
  for (int s = 0; s < truth.S; ++s)
    for (int a1 = 0; a1 < truth.A1; ++a1)
      for (int a2 = 0; a2 < truth.A2; ++a2)
        if (!cell_contains(reg.cell(s, a1, a2), truth.row(s, a1, a2), truth.S,
                           tol))
          return false;
  return true;
}

/// Degenerate region pinned to a known kernel: every cell admits
/// exactly the true row.  Planning on it reproduces planning on the
/// model itself.
inline ConfidenceRegion collapsed_region(const SGModel& m) {
  ConfidenceRegion reg;
  reg.S = m.S;
  reg.A1 = m.A1;
  reg.A2 = m.A2;
  reg.delta = 0.0;
  reg.delta1 = 0.0;
  reg.cells.resize(m.cells());
  for (int s = 0; s < m.S; ++s)
    for (int a1 = 0; a1 < m.A1; ++a1)
      for (int a2 = 0; a2 < m.A2; ++a2) {
        CellRegion& cell = reg.cells[m.cell(s, a1, a2)];
        const double* row = m.row(s, a1, a2);
        cell.phat.assign(row, row + m.S);
        cell.lo = cell.phat;
        cell.hi = cell.phat;
        cell.l1_radius = 0.0;
        cell.n = 1;
      }
  return reg;
}

}  // namespace ucsg
