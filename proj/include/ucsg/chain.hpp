#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <limits>
#include <utility>
#include <vector>

#include "ucsg/errors.hpp"
#include "ucsg/sg_model.hpp"

namespace ucsg {

namespace detail {

inline Eigen::VectorXd solve_linear(const Eigen::MatrixXd& A,
                                    const Eigen::VectorXd& b,
                                    const char* context) {
  Eigen::FullPivLU<Eigen::MatrixXd> lu(A);
  if (!lu.isInvertible())
    throw SingularSystem(std::string("singular linear system in ") + context);
  return lu.solve(b);
}

inline std::vector<std::vector<int>> support_graph(const std::vector<double>& P,
                                                   int S) {
  std::vector<std::vector<int>> adj(S);
  for (int s = 0; s < S; ++s)
    for (int t = 0; t < S; ++t)
      if (P[static_cast<size_t>(s) * S + t] > 0.0) adj[s].push_back(t);
  return adj;
}

/// Iterative Tarjan; comp ids are assigned sinks-first.
inline int strongly_connected_components(
    const std::vector<std::vector<int>>& adj, std::vector<int>& comp) {
  const int n = static_cast<int>(adj.size());
  comp.assign(n, -1);
  std::vector<int> index(n, -1), low(n, 0), stack;
  std::vector<char> on(n, 0);
  std::vector<std::pair<int, int>> call;
  stack.reserve(n);
  int idx = 0, ncomp = 0;
  for (int root = 0; root < n; ++root) {
    if (index[root] != -1) continue;
    call.emplace_back(root, 0);
    while (!call.empty()) {
      int v = call.back().first;
      int& ci = call.back().second;
      if (ci == 0) {
        index[v] = low[v] = idx++;
        stack.push_back(v);
        on[v] = 1;
      }
      bool descended = false;
      while (ci < static_cast<int>(adj[v].size())) {
        int w = adj[v][ci++];
        if (index[w] == -1) {
          call.emplace_back(w, 0);
          descended = true;
          break;
        }
        if (on[w]) low[v] = std::min(low[v], index[w]);
      }
      if (descended) continue;
      if (low[v] == index[v]) {
        while (true) {
          int w = stack.back();
          stack.pop_back();
          on[w] = 0;
          comp[w] = ncomp;
          if (w == v) break;
        }
        ++ncomp;
      }
      call.pop_back();
      if (!call.empty())
        low[call.back().first] = std::min(low[call.back().first], low[v]);
    }
  }
  return ncomp;
}

struct ChainStructure {
  std::vector<int> comp;   // component id per state
  int ncomp = 0;
  std::vector<char> comp_closed;  // per component: no outgoing edges
  std::vector<int> closed_comps;
};

inline ChainStructure analyze_chain(const std::vector<double>& P, int S) {
  ChainStructure cs;
  auto adj = support_graph(P, S);
  cs.ncomp = strongly_connected_components(adj, cs.comp);
  cs.comp_closed.assign(cs.ncomp, 1);
  for (int s = 0; s < S; ++s)
    for (int t : adj[s])
      if (cs.comp[t] != cs.comp[s]) cs.comp_closed[cs.comp[s]] = 0;
  for (int c = 0; c < cs.ncomp; ++c)
    if (cs.comp_closed[c]) cs.closed_comps.push_back(c);
  return cs;
}

}  // namespace detail

inline bool is_irreducible(const std::vector<double>& P, int S) {
  std::vector<int> comp;
  auto adj = detail::support_graph(P, S);
  return detail::strongly_connected_components(adj, comp) == 1;
}

/**
 * Average reward and bias of a unichain Markov reward process.
 *
 * Solves the (S+1)-dimensional linear system
 *     (I - P) h + rho 1 = rbar,   h(ref) = 0
 * and shifts the bias so that min_s h(s) = 0.  For a unichain P the
 * system is nonsingular for any reference state.
 *
 * Throws MultichainError when two closed recurrent classes exist.
 */
inline std::pair<double, std::vector<double>> average_reward_bias(
    const std::vector<double>& P, const std::vector<double>& rbar, int S) {
  auto cs = detail::analyze_chain(P, S);
  if (cs.closed_comps.size() > 1) {
    int c0 = cs.closed_comps[0], c1 = cs.closed_comps[1];
    int s0 = -1, s1 = -1;
    for (int s = 0; s < S; ++s) {
      if (cs.comp[s] == c0 && s0 < 0) s0 = s;
      if (cs.comp[s] == c1 && s1 < 0) s1 = s;
    }
    throw MultichainError("two closed recurrent classes (e.g. around states " +
                          std::to_string(s0) + " and " + std::to_string(s1) +
                          ")");
  }
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(S + 1, S + 1);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(S + 1);
  for (int i = 0; i < S; ++i) {
    for (int j = 0; j < S; ++j)
      A(i, j) = (i == j ? 1.0 : 0.0) - P[static_cast<size_t>(i) * S + j];
    A(i, S) = 1.0;
    b(i) = rbar[i];
  }
  int ref = 0;
  while (ref < S && cs.comp[ref] != cs.closed_comps[0]) ++ref;
  A(S, ref) = 1.0;
  Eigen::VectorXd x = detail::solve_linear(A, b, "average_reward_bias");
  std::vector<double> h(S);
  double hmin = x(0);
  for (int i = 0; i < S; ++i) hmin = std::min(hmin, x(i));
  for (int i = 0; i < S; ++i) h[i] = x(i) - hmin;
  return {x(S), std::move(h)};
}

/// Average reward of a unichain process (state-independent).
inline double average_reward(const std::vector<double>& P,
                             const std::vector<double>& rbar, int S) {
  return average_reward_bias(P, rbar, S).first;
}

/**
 * Per-state long-run average reward of an arbitrary (possibly
 * multichain) Markov reward process: the gain of each closed class is
 * its stationary average, and transient states mix class gains by
 * absorption probability, i.e. g = P g off the recurrent classes.
 */
inline std::vector<double> gain_vector(const std::vector<double>& P,
                                       const std::vector<double>& rbar, int S) {
  auto cs = detail::analyze_chain(P, S);
  std::vector<double> g(S, 0.0);
  std::vector<char> recurrent(S, 0);
  for (int c : cs.closed_comps) {
    std::vector<int> states;
    for (int s = 0; s < S; ++s)
      if (cs.comp[s] == c) states.push_back(s);
    const int m = static_cast<int>(states.size());
    // stationary distribution of the class, last balance row replaced
    // by normalization
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(m, m);
    Eigen::VectorXd b = Eigen::VectorXd::Zero(m);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j)
        A(i, j) = P[static_cast<size_t>(states[j]) * S + states[i]] -
                  (i == j ? 1.0 : 0.0);
    for (int j = 0; j < m; ++j) A(m - 1, j) = 1.0;
    b(m - 1) = 1.0;
    Eigen::VectorXd mu = detail::solve_linear(A, b, "gain_vector");
    double rho = 0.0;
    for (int i = 0; i < m; ++i) rho += mu(i) * rbar[states[i]];
    for (int i = 0; i < m; ++i) {
      g[states[i]] = rho;
      recurrent[states[i]] = 1;
    }
  }
  std::vector<int> trans;
  for (int s = 0; s < S; ++s)
    if (!recurrent[s]) trans.push_back(s);
  if (!trans.empty()) {
    const int m = static_cast<int>(trans.size());
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(m, m);
    Eigen::VectorXd b = Eigen::VectorXd::Zero(m);
    for (int i = 0; i < m; ++i) {
      for (int j = 0; j < m; ++j)
        A(i, j) = (i == j ? 1.0 : 0.0) -
                  P[static_cast<size_t>(trans[i]) * S + trans[j]];
      double acc = 0.0;
      for (int t = 0; t < S; ++t)
        if (recurrent[t]) acc += P[static_cast<size_t>(trans[i]) * S + t] * g[t];
      b(i) = acc;
    }
    Eigen::VectorXd x = detail::solve_linear(A, b, "gain_vector/transient");
    for (int i = 0; i < m; ++i) g[trans[i]] = x(i);
  }
  return g;
}

/// Unichain stationary distribution; transient states carry zero mass.
inline std::vector<double> stationary_distribution(
    const std::vector<double>& P, int S) {
  auto cs = detail::analyze_chain(P, S);
  if (cs.closed_comps.size() > 1)
    throw MultichainError("stationary distribution undefined: multichain");
  int c = cs.closed_comps[0];
  std::vector<int> states;
  for (int s = 0; s < S; ++s)
    if (cs.comp[s] == c) states.push_back(s);
  const int m = static_cast<int>(states.size());
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(m, m);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j)
      A(i, j) = P[static_cast<size_t>(states[j]) * S + states[i]] -
                (i == j ? 1.0 : 0.0);
  for (int j = 0; j < m; ++j) A(m - 1, j) = 1.0;
  b(m - 1) = 1.0;
  Eigen::VectorXd mu = detail::solve_linear(A, b, "stationary_distribution");
  std::vector<double> full(S, 0.0);
  for (int i = 0; i < m; ++i) full[states[i]] = mu(i);
  return full;
}

/**
 * Mean first-passage times T[i*S + j] = expected steps to first reach j
 * from i, where the diagonal holds expected *return* times.  Entries
 * are +inf whenever the target is not reached almost surely.
 *
 * For each target j the computation makes j absorbing, identifies the
 * states from which absorption is certain, and solves
 * (I - Q) t = 1 on that set.
 */
inline std::vector<double> mean_first_passage(const std::vector<double>& P,
                                              int S) {
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> T(static_cast<size_t>(S) * S, inf);
  auto adj = detail::support_graph(P, S);
  std::vector<std::vector<int>> radj(S);
  for (int s = 0; s < S; ++s)
    for (int t : adj[s]) radj[t].push_back(s);

  std::vector<char> reach(S), doomed(S);
  std::vector<int> work;
  for (int j = 0; j < S; ++j) {
    // states that can reach j when j's own out-edges are removed
    std::fill(reach.begin(), reach.end(), 0);
    reach[j] = 1;
    work.assign(1, j);
    while (!work.empty()) {
      int x = work.back();
      work.pop_back();
      for (int u : radj[x])
        if (u != j && !reach[u]) {
          reach[u] = 1;
          work.push_back(u);
        }
    }
    // states with an escape route: they can reach a state that never
    // reaches j, so absorption at j is not almost sure from them
    std::fill(doomed.begin(), doomed.end(), 0);
    work.clear();
    for (int s = 0; s < S; ++s)
      if (!reach[s]) {
        doomed[s] = 1;
        work.push_back(s);
      }
    while (!work.empty()) {
      int x = work.back();
      work.pop_back();
      for (int u : radj[x])
        if (u != j && !doomed[u]) {
          doomed[u] = 1;
          work.push_back(u);
        }
    }
    std::vector<int> sure;  // absorption certain, excluding j itself
    for (int s = 0; s < S; ++s)
      if (s != j && reach[s] && !doomed[s]) sure.push_back(s);
    const int m = static_cast<int>(sure.size());
    std::vector<double> t(S, inf);
    t[j] = 0.0;
    if (m > 0) {
      Eigen::MatrixXd A = Eigen::MatrixXd::Zero(m, m);
      Eigen::VectorXd b = Eigen::VectorXd::Ones(m);
      for (int i = 0; i < m; ++i)
        for (int k = 0; k < m; ++k)
          A(i, k) = (i == k ? 1.0 : 0.0) -
                    P[static_cast<size_t>(sure[i]) * S + sure[k]];
      Eigen::VectorXd x = detail::solve_linear(A, b, "mean_first_passage");
      for (int i = 0; i < m; ++i) t[sure[i]] = x(i);
    }
    for (int i = 0; i < S; ++i)
      if (i != j) T[static_cast<size_t>(i) * S + j] = t[i];
    // expected return time: one step plus the hitting time from wherever
    // that step lands
    double ret = 1.0;
    for (int s2 = 0; s2 < S; ++s2) {
      double p = P[static_cast<size_t>(j) * S + s2];
      if (p > 0.0) {
        if (t[s2] == inf) {
          ret = inf;
          break;
        }
        ret += p * t[s2];
      }
    }
    T[static_cast<size_t>(j) * S + j] = ret;
  }
  return T;
}

/// Everything evaluate() reports about a fixed policy pair.
struct EvalReport {
  double rho = 0.0;            // long-run average reward
  std::vector<double> h;       // bias, shifted so min_s h(s) = 0
  double span_h = 0.0;
  std::vector<double> mu;      // stationary distribution (zeros on transients)
  std::vector<double> mfpt;    // T[i*S + j]; +inf where not a.s. reached
  bool irreducible = false;
};

/// Full unichain evaluation of a Markov reward process.
inline EvalReport evaluate(const MarkovRewardProcess& mrp) {
  EvalReport rep;
  auto [rho, h] = average_reward_bias(mrp.P, mrp.rbar, mrp.S);
  rep.rho = rho;
  rep.h = std::move(h);
  rep.span_h = *std::max_element(rep.h.begin(), rep.h.end());
  rep.mu = stationary_distribution(mrp.P, mrp.S);
  rep.mfpt = mean_first_passage(mrp.P, mrp.S);
  rep.irreducible = is_irreducible(mrp.P, mrp.S);
  return rep;
}

inline EvalReport evaluate(const SGModel& m, const StationaryPolicy& pi1,
                           const StationaryPolicy& pi2) {
  return evaluate(induce_mrp(m, pi1, pi2));
}

inline double span(const std::vector<double>& v) {
  auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  return *hi - *lo;
}

}  // namespace ucsg
