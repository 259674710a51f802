#include <catch2/catch_amalgamated.hpp>
#include <cmath>

#include "test_util.hpp"
#include "ucsg/ucsg.hpp"

using namespace ucsg;
using Catch::Approx;

namespace {

void require_reports_equal(const RunReport& a, const RunReport& b) {
  REQUIRE(a.steps.size() == b.steps.size());
  for (size_t i = 0; i < a.steps.size(); ++i) {
    REQUIRE(a.steps[i].t == b.steps[i].t);
    REQUIRE(a.steps[i].s == b.steps[i].s);
    REQUIRE(a.steps[i].a1 == b.steps[i].a1);
    REQUIRE(a.steps[i].a2 == b.steps[i].a2);
    REQUIRE(a.steps[i].r == b.steps[i].r);
    REQUIRE(a.steps[i].phase == b.steps[i].phase);
  }
  REQUIRE(a.pi2_log == b.pi2_log);
  REQUIRE(a.total_reward == b.total_reward);
  REQUIRE(a.regret == b.regret);
  REQUIRE(a.phases.size() == b.phases.size());
  for (size_t k = 0; k < a.phases.size(); ++k) {
    REQUIRE(a.phases[k].t_start == b.phases[k].t_start);
    REQUIRE(a.phases[k].length == b.phases[k].length);
    REQUIRE(a.phases[k].optimistic_rho == b.phases[k].optimistic_rho);
    REQUIRE(a.phases[k].pi1.prob == b.phases[k].pi1.prob);
  }
}

}  // namespace

TEST_CASE("a one-step run is a single one-step phase") {
  Rng rng(50);
  SGModel m = testutil::random_ergodic_game(rng, 3, 2, 2, 0.3);
  RunConfig cfg;
  cfg.T = 1;
  cfg.seed = 4;
  Opponent opp =
      Opponent::stationary(StationaryPolicy::uniform(Player::two, 3, 2));
  RunReport rep = run_online(m, opp, cfg);
  REQUIRE(rep.steps.size() == 1);
  REQUIRE(rep.phases.size() == 1);
  REQUIRE(rep.phases[0].length == 1);
  REQUIRE(rep.regret == Approx(rep.rho_star - rep.steps[0].r).margin(1e-12));
}

TEST_CASE("a known one-state game is played optimally from the start") {
  // the planner knows the rewards and a 1-state kernel has no freedom,
  // so every step pulls the best arm
  SGModel m(1, 2, 1);
  m.r(0, 0, 0) = 0.3;
  m.r(0, 1, 0) = 0.8;
  m.row(0, 0, 0)[0] = 1.0;
  m.row(0, 1, 0)[0] = 1.0;
  RunConfig cfg;
  cfg.T = 200;
  Opponent opp =
      Opponent::stationary(StationaryPolicy::uniform(Player::two, 1, 1));
  RunReport rep = run_online(m, opp, cfg);
  for (const StepRecord& st : rep.steps) REQUIRE(st.a1 == 1);
  REQUIRE(rep.total_reward == Approx(0.8 * 200).margin(1e-9));
  REQUIRE(std::abs(rep.regret) <= 1e-5);  // only the rho* bracket is inexact
}

TEST_CASE("phases tile the horizon and follow the doubling rule") {
  Rng rng(51);
  SGModel m = testutil::random_ergodic_game(rng, 3, 2, 2, 0.3);
  RunConfig cfg;
  cfg.T = 1000;
  cfg.seed = 9;
  cfg.exact_gaps = false;
  Opponent opp =
      Opponent::stationary(StationaryPolicy::uniform(Player::two, 3, 2));
  RunReport rep = run_online(m, opp, cfg);
  REQUIRE_FALSE(rep.aborted);

  // contiguous tiling
  int64_t t = 1;
  int64_t total_len = 0;
  for (const PhaseRecord& ph : rep.phases) {
    REQUIRE(ph.t_start == t);
    REQUIRE(ph.length >= 1);
    REQUIRE(ph.gamma == 1.0 / std::sqrt(static_cast<double>(ph.t_start)));
    t += ph.length;
    total_len += ph.length;
  }
  REQUIRE(total_len == cfg.T);
  REQUIRE(static_cast<int64_t>(rep.steps.size()) == cfg.T);

  // phase stamps on steps match the records
  size_t idx = 0;
  for (const PhaseRecord& ph : rep.phases)
    for (int64_t i = 0; i < ph.length; ++i, ++idx)
      REQUIRE(rep.steps[idx].phase == ph.k);

  // phase count bound
  const double bound = m.S * m.A1 * m.A2 *
                       std::log2(static_cast<double>(cfg.T));
  REQUIRE(static_cast<double>(rep.phases.size()) <= bound);

  // replay the doubling bookkeeping from the raw steps: a phase ends
  // exactly when some cell's within-phase count reaches its snapshot
  std::vector<int64_t> total(m.cells(), 0);
  idx = 0;
  for (size_t k = 0; k < rep.phases.size(); ++k) {
    std::vector<int64_t> snap(total);
    for (auto& v : snap)
      if (v == 0) v = 1;
    std::vector<int64_t> within(m.cells(), 0);
    const PhaseRecord& ph = rep.phases[k];
    for (int64_t i = 0; i < ph.length; ++i, ++idx) {
      const StepRecord& st = rep.steps[idx];
      const int cell = m.cell(st.s, st.a1, st.a2);
      within[cell] += 1;
      total[cell] += 1;
      const bool doubled = within[cell] >= snap[cell];
      if (i + 1 < ph.length) {
        REQUIRE_FALSE(doubled);  // phase would have ended earlier
      } else if (k + 1 < rep.phases.size()) {
        REQUIRE(doubled);  // non-final phases end for a reason
      }
    }
  }
}

TEST_CASE("identical seeds give identical runs") {
  Rng rng(52);
  SGModel m = testutil::random_ergodic_game(rng, 3, 2, 2, 0.3);
  RunConfig cfg;
  cfg.T = 500;
  cfg.seed = 1234;
  Opponent opp1 = Opponent::best_response();
  RunReport a = run_online(m, opp1, cfg);
  Opponent opp2 = Opponent::best_response();
  RunReport b = run_online(m, opp2, cfg);
  require_reports_equal(a, b);

  RunReport oa = run_offline(m, cfg);
  RunReport ob = run_offline(m, cfg);
  require_reports_equal(oa, ob);

  cfg.seed = 1235;
  Opponent opp3 = Opponent::best_response();
  RunReport c = run_online(m, opp3, cfg);
  REQUIRE(a.total_reward != c.total_reward);
}

TEST_CASE("optimism holds on contained phases") {
  Rng rng(53);
  SGModel m = testutil::random_ergodic_game(rng, 3, 2, 2, 0.3);
  RunConfig cfg;
  cfg.T = 5000;
  cfg.seed = 77;
  cfg.exact_gaps = false;
  Opponent opp =
      Opponent::stationary(StationaryPolicy::uniform(Player::two, 3, 2));
  RunReport rep = run_online(m, opp, cfg);
  REQUIRE_FALSE(rep.aborted);
  int contained = 0;
  for (const PhaseRecord& ph : rep.phases)
    if (ph.contained) {
      ++contained;
      REQUIRE(ph.optimistic_rho >= rep.rho_star - ph.gamma - 1e-6);
    }
  REQUIRE(contained >= 1);  // delta = 0.1 should contain almost always
}

TEST_CASE("offline runs carry valid certificates") {
  Rng rng(54);
  SGModel m = testutil::random_ergodic_game(rng, 3, 2, 2, 0.3);
  RunConfig cfg;
  cfg.T = 2000;
  cfg.seed = 5;
  cfg.epsilons = {0.02, 0.05, 0.1, 0.2};
  RunReport rep = run_offline(m, cfg);
  REQUIRE_FALSE(rep.aborted);
  REQUIRE(rep.phases.size() >= 2);

  double min_u = std::numeric_limits<double>::infinity();
  int arg = 0;
  for (const PhaseRecord& ph : rep.phases) {
    REQUIRE(ph.u >= -2e-6);  // optimist never falls below the pessimist
    REQUIRE(std::isfinite(ph.pessimistic_rho));
    REQUIRE(ph.exact_gap >= -1e-6);
    if (ph.u < min_u) {
      min_u = ph.u;
      arg = ph.k;
    }
  }
  REQUIRE(rep.min_u == min_u);
  REQUIRE(rep.argmin_u_phase == arg);
  REQUIRE(rep.best_policy.prob == rep.phases[arg - 1].pi1.prob);

  // the L_eps table is a recomputation of the phase gaps...
  for (const auto& [eps, cnt] : rep.l_eps) {
    int64_t expect = 0;
    for (const PhaseRecord& ph : rep.phases)
      if (ph.exact_gap > eps) expect += ph.length;
    REQUIRE(cnt == expect);
  }
  // ...and is monotone nonincreasing in eps
  for (size_t i = 1; i < rep.l_eps.size(); ++i)
    REQUIRE(rep.l_eps[i].second <= rep.l_eps[i - 1].second);
}

TEST_CASE("one-state offline certificates collapse to their floor") {
  // with a single state the kernel is known exactly, so u_k is the
  // planning slack alone: 0 <= u_k <= 4 gamma_k within estimate error
  SGModel m(1, 2, 2);
  m.r(0, 0, 0) = 1.0;
  m.r(0, 0, 1) = 0.0;
  m.r(0, 1, 0) = 0.0;
  m.r(0, 1, 1) = 1.0;
  for (int a1 = 0; a1 < 2; ++a1)
    for (int a2 = 0; a2 < 2; ++a2) m.row(0, a1, a2)[0] = 1.0;
  RunConfig cfg;
  cfg.T = 300;
  RunReport rep = run_offline(m, cfg);
  for (const PhaseRecord& ph : rep.phases) {
    REQUIRE(ph.u >= -1e-9);
    REQUIRE(ph.u <= 4.0 * ph.gamma + 1e-9);
  }
}

TEST_CASE("a planning failure aborts into a partial report") {
  Rng rng(55);
  SGModel m = testutil::random_ergodic_game(rng, 3, 2, 2, 0.3);
  RunConfig cfg;
  cfg.T = 100;
  cfg.vi.max_iters = 1;  // the very first planning call gives up
  Opponent opp =
      Opponent::stationary(StationaryPolicy::uniform(Player::two, 3, 2));
  RunReport rep = run_online(m, opp, cfg);
  REQUIRE(rep.aborted);
  REQUIRE_FALSE(rep.abort_reason.empty());
  REQUIRE(rep.steps.empty());
}

TEST_CASE("the opponent's distributions are logged faithfully") {
  Rng rng(56);
  SGModel m = testutil::random_ergodic_game(rng, 2, 2, 2, 0.3);
  StationaryPolicy pi2 = testutil::random_policy(rng, Player::two, 2, 2);
  RunConfig cfg;
  cfg.T = 50;
  cfg.exact_gaps = false;
  Opponent opp = Opponent::stationary(pi2);
  RunReport rep = run_online(m, opp, cfg);
  REQUIRE(rep.pi2_log.size() == rep.steps.size() * 2);
  for (size_t i = 0; i < rep.steps.size(); ++i)
    for (int a = 0; a < 2; ++a)
      REQUIRE(rep.pi2_log[i * 2 + a] == pi2.p(rep.steps[i].s, a));

  // phase-1 slice average exists whenever all states were visited
  const PhaseRecord& ph = rep.phases.back();
  size_t begin = 0;
  for (size_t k = 0; k + 1 < rep.phases.size(); ++k)
    begin += rep.phases[k].length;
  auto pibar = extract_pibar(rep.steps, begin, begin + ph.length, rep.pi2_log,
                             2, 2);
  if (pibar) {
    for (int s = 0; s < 2; ++s)
      REQUIRE(pibar->p(s, 0) + pibar->p(s, 1) == Approx(1.0).margin(1e-12));
  }

  cfg.log_pi2 = false;
  Opponent opp2 = Opponent::stationary(pi2);
  RunReport quiet = run_online(m, opp2, cfg);
  REQUIRE(quiet.pi2_log.empty());
}

TEST_CASE("runs validate their configuration") {
  Rng rng(57);
  SGModel m = testutil::random_ergodic_game(rng, 2, 2, 2, 0.3);
  Opponent opp =
      Opponent::stationary(StationaryPolicy::uniform(Player::two, 2, 2));
  RunConfig cfg;
  cfg.T = 0;
  REQUIRE_THROWS_AS(run_online(m, opp, cfg), DimensionMismatch);
  cfg.T = 10;
  cfg.delta = 0.0;
  REQUIRE_THROWS_AS(run_online(m, opp, cfg), DimensionMismatch);
  cfg.delta = 0.1;
  cfg.initial_state = 5;
  REQUIRE_THROWS_AS(run_online(m, opp, cfg), DimensionMismatch);
}
