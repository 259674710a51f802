#include <catch2/catch_amalgamated.hpp>
#include <cmath>

#include "test_util.hpp"
#include "ucsg/diameter.hpp"
#include "ucsg/planning.hpp"

using namespace ucsg;
using Catch::Approx;

namespace {

CellRegion make_cell(std::vector<double> phat, std::vector<double> lo,
                     std::vector<double> hi, double radius) {
  CellRegion cell;
  cell.phat = std::move(phat);
  cell.lo = std::move(lo);
  cell.hi = std::move(hi);
  cell.l1_radius = radius;
  cell.n = 1;
  return cell;
}

}  // namespace

TEST_CASE("inner_max_transition moves mass toward high values") {
  // free box, budget 0.2 of mass: shift that much onto the good state
  CellRegion cell = make_cell({1.0, 0.0}, {0.0, 0.0}, {1.0, 1.0}, 0.4);
  auto [row, val] = inner_max_transition(cell, {0.0, 1.0});
  REQUIRE(row[0] == Approx(0.8).margin(1e-15));
  REQUIRE(row[1] == Approx(0.2).margin(1e-15));
  REQUIRE(val == Approx(0.2).margin(1e-15));
}

TEST_CASE("inner_max_transition respects the coordinate caps") {
  CellRegion cell = make_cell({0.5, 0.3, 0.2}, {0.0, 0.0, 0.0},
                              {1.0, 1.0, 0.25}, 1.0);
  auto [row, val] = inner_max_transition(cell, {0.0, 0.0, 1.0});
  REQUIRE(row[0] == Approx(0.45).margin(1e-15));
  REQUIRE(row[1] == Approx(0.3).margin(1e-15));
  REQUIRE(row[2] == 0.25);  // assigned exactly at its cap
  REQUIRE(val == Approx(0.25).margin(1e-15));
}

TEST_CASE("inner_max_transition respects the L1 budget") {
  CellRegion cell = make_cell({0.5, 0.3, 0.2}, {0.0, 0.0, 0.0},
                              {1.0, 1.0, 0.25}, 0.08);
  auto [row, val] = inner_max_transition(cell, {0.0, 0.0, 1.0});
  REQUIRE(row[0] == Approx(0.46).margin(1e-15));
  REQUIRE(row[1] == Approx(0.3).margin(1e-15));
  REQUIRE(row[2] == Approx(0.24).margin(1e-15));
  REQUIRE(val == Approx(0.24).margin(1e-15));
}

TEST_CASE("inner_max_transition drains donors only to their floor") {
  CellRegion cell = make_cell({0.5, 0.3, 0.2}, {0.48, 0.0, 0.0},
                              {1.0, 1.0, 0.25}, 1.0);
  auto [row, val] = inner_max_transition(cell, {0.0, 0.0, 1.0});
  REQUIRE(row[0] == 0.48);
  REQUIRE(row[1] == Approx(0.27).margin(1e-15));
  REQUIRE(row[2] == 0.25);
  REQUIRE(val == Approx(0.25).margin(1e-15));
}

TEST_CASE("a zero-radius cell returns its own row") {
  Rng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    auto p = testutil::random_stochastic_row(rng, 4, 0.0);
    CellRegion cell = make_cell(p, p, p, 0.0);
    std::vector<double> v(4);
    for (auto& x : v) x = rng.uniform(-3.0, 3.0);
    auto [row, val] = inner_max_transition(cell, v);
    double expect = 0.0;
    for (int t = 0; t < 4; ++t) expect += p[t] * v[t];
    REQUIRE(row == p);
    REQUIRE(val == Approx(expect).margin(1e-12));
  }
}

TEST_CASE("greedy inner maximization matches the LP optimum") {
  Rng rng(515);
  int done = 0;
  while (done < 200) {
    int S = 2 + rng.uniform_int(5);
    Counts counts(S, 1, 1);
    auto truth = testutil::random_stochastic_row(rng, S, 0.1);
    int64_t n = 1 + rng.uniform_int(200);
    for (int64_t i = 0; i < n; ++i)
      counts.record(0, 0, 0, rng.categorical(truth.data(), S));
    counts.start_phase(n + 1);
    double delta = 0.05 + 0.25 * rng.uniform();
    ConfidenceRegion reg = build_region(counts, delta, 100000);
    for (int s = 0; s < S && done < 200; ++s) {  // s>0 cells are unvisited
      const CellRegion& cell = reg.cell(s, 0, 0);
      std::vector<double> v(S);
      for (auto& x : v) x = rng.uniform(-5.0, 5.0);
      auto [row, val] = inner_max_transition(cell, v);
      REQUIRE(cell_contains(cell, row.data(), S, 1e-9));
      double dot = 0.0;
      for (int t = 0; t < S; ++t) dot += row[t] * v[t];
      REQUIRE(val == Approx(dot).margin(1e-12));
      REQUIRE(val == Approx(testutil::lp_inner_max(cell, v)).margin(1e-8));
      ++done;
    }
  }
}

TEST_CASE("planning on a one-state bandit picks the best arm") {
  SGModel m(1, 2, 1);
  m.r(0, 0, 0) = 0.3;
  m.r(0, 1, 0) = 0.8;
  m.row(0, 0, 0)[0] = 1.0;
  m.row(0, 1, 0)[0] = 1.0;
  PlanResult plan = schweitzer_vi(m, ViConfig{});
  REQUIRE(plan.rho == Approx(0.8).margin(1e-9));
  REQUIRE(plan.pi1.p(0, 1) == Approx(1.0).margin(1e-9));
}

TEST_CASE("planning solves single-state matching pennies") {
  SGModel m(1, 2, 2);
  m.r(0, 0, 0) = 1.0;
  m.r(0, 0, 1) = 0.0;
  m.r(0, 1, 0) = 0.0;
  m.r(0, 1, 1) = 1.0;
  for (int a1 = 0; a1 < 2; ++a1)
    for (int a2 = 0; a2 < 2; ++a2) m.row(0, a1, a2)[0] = 1.0;
  PlanResult plan = schweitzer_vi(m, ViConfig{});
  REQUIRE(plan.rho == Approx(0.5).margin(1e-9));
  REQUIRE(plan.pi1.p(0, 0) == Approx(0.5).margin(1e-8));
}

TEST_CASE("planning brackets are ordered, tight and attained") {
  Rng rng(99);
  for (int trial = 0; trial < 5; ++trial) {
    SGModel m = testutil::random_ergodic_game(rng, 4, 2, 2, 0.3);
    ViConfig cfg;
    cfg.gamma = 1e-7;
    PlanResult plan = schweitzer_vi(m, cfg);
    REQUIRE(plan.rho_lo <= plan.rho + 1e-15);
    REQUIRE(plan.rho <= plan.rho_hi + 1e-15);
    REQUIRE(plan.rho_hi - plan.rho_lo <= cfg.gamma * (1.0 + 1e-9));
    REQUIRE(plan.rho == Approx(0.5 * (plan.rho_lo + plan.rho_hi)).margin(1e-15));
    // the returned policy really earns at least rho_lo against everything
    BestResponse br = exact_best_response(m, plan.pi1);
    for (int s = 0; s < m.S; ++s) {
      REQUIRE(br.gain[s] >= plan.rho_lo - 1e-8);
      REQUIRE(br.gain[s] <= plan.rho_hi + 1e-8);
    }
  }
}

TEST_CASE("turn-based values match brute force enumeration") {
  Rng rng(123);
  for (int trial = 0; trial < 10; ++trial) {
    SGModel m = testutil::random_turn_based_game(rng, 3, 2, 2, 0.3);
    double exact = testutil::brute_force_maximin(m);
    PlanResult plan = schweitzer_vi(m, ViConfig{});
    REQUIRE(plan.rho == Approx(exact).margin(2e-5));
  }
}

TEST_CASE("iterate spans stay within the adversarial diameter") {
  Rng rng(321);
  for (int trial = 0; trial < 5; ++trial) {
    SGModel m = testutil::random_ergodic_game(rng, 3, 2, 2, 0.35);
    double d2 = diameter_a2(m);
    PlanResult plan = schweitzer_vi(m, ViConfig{});
    REQUIRE(plan.max_iterate_span <= d2 + 1e-6);
  }
}

TEST_CASE("a wide-open region lets the optimist teleport") {
  // no data: every simplex row is admissible, so the optimistic value is
  // the best single-state matrix game value
  Counts counts(3, 2, 2);
  counts.start_phase(1);
  ConfidenceRegion reg = build_region(counts, 0.1, 1000);
  Rng rng(8);
  SGModel m = testutil::random_ergodic_game(rng, 3, 2, 2, 0.2);
  ViConfig cfg;
  MaximinPlan opt = maximin_evi(reg, m.reward, cfg);
  double best = -1.0;
  for (int s = 0; s < 3; ++s) {
    std::vector<double> G(4);
    for (int a1 = 0; a1 < 2; ++a1)
      for (int a2 = 0; a2 < 2; ++a2) G[a1 * 2 + a2] = m.r(s, a1, a2);
    best = std::max(best, game_value(G, 2, 2));
  }
  REQUIRE(opt.plan.rho == Approx(best).margin(cfg.gamma + 1e-9));
  // every kernel row the plan selected is admissible for its cell
  opt.model.validate(1e-9);
  REQUIRE(region_contains(reg, opt.model, 1e-9));
}

TEST_CASE("a wide-open region lets the pessimist trap") {
  Counts counts(3, 2, 2);
  counts.start_phase(1);
  ConfidenceRegion reg = build_region(counts, 0.1, 1000);
  Rng rng(9);
  SGModel m = testutil::random_ergodic_game(rng, 3, 2, 2, 0.2);
  StationaryPolicy pi1 = testutil::random_policy(rng, Player::one, 3, 2);
  ViConfig cfg;
  ResponsePlan pess = pessimistic_response_evi(reg, m.reward, pi1, cfg);
  double worst = 2.0;
  for (int s = 0; s < 3; ++s)
    for (int a2 = 0; a2 < 2; ++a2) {
      double acc = 0.0;
      for (int a1 = 0; a1 < 2; ++a1) acc += pi1.p(s, a1) * m.r(s, a1, a2);
      worst = std::min(worst, acc);
    }
  REQUIRE(pess.plan.rho == Approx(worst).margin(cfg.gamma + 1e-9));
  pess.model.validate(1e-9);
  REQUIRE(region_contains(reg, pess.model, 1e-9));
}

TEST_CASE("pessimistic planning on the true kernel finds the best response") {
  Rng rng(14);
  for (int trial = 0; trial < 10; ++trial) {
    SGModel m = testutil::random_ergodic_game(rng, 3, 2, 2, 0.3);
    StationaryPolicy pi1 = testutil::random_policy(rng, Player::one, 3, 2);
    ViConfig cfg;
    cfg.gamma = 1e-8;
    ResponsePlan rp = pessimistic_response_evi(collapsed_region(m), m.reward,
                                               pi1, cfg);
    BestResponse br = exact_best_response(m, pi1);
    for (int s = 0; s < m.S; ++s) {
      REQUIRE(br.gain[s] >= rp.plan.rho_lo - 1e-7);
      REQUIRE(br.gain[s] <= rp.plan.rho_hi + 1e-7);
    }
    // the returned deterministic response is itself near-optimal
    MarkovRewardProcess mrp = induce_mrp(m, pi1, rp.pi2);
    std::vector<double> g = gain_vector(mrp.P, mrp.rbar, m.S);
    for (int s = 0; s < m.S; ++s)
      REQUIRE(g[s] <= br.gain[s] + cfg.gamma + 1e-7);
  }
}

TEST_CASE("response enumeration agrees with its iterative fallback") {
  Rng rng(25);
  for (int trial = 0; trial < 5; ++trial) {
    SGModel m = testutil::random_ergodic_game(rng, 3, 1 + rng.uniform_int(2), 2,
                                              0.3);
    StationaryPolicy pi1 = testutil::random_policy(rng, Player::one, 3, m.A1);
    BestResponse by_enum = exact_best_response(m, pi1, 1 << 20);
    BestResponse by_iter = exact_best_response(m, pi1, 1);
    for (int s = 0; s < m.S; ++s)
      REQUIRE(by_enum.gain[s] == Approx(by_iter.gain[s]).margin(1e-7));
  }
}

TEST_CASE("planning reports an iteration cap honestly") {
  Rng rng(31);
  SGModel m = testutil::random_ergodic_game(rng, 3, 2, 2, 0.3);
  ViConfig cfg;
  cfg.max_iters = 1;
  REQUIRE_THROWS_AS(schweitzer_vi(m, cfg), NoConvergence);
  StationaryPolicy pi1 = StationaryPolicy::uniform(Player::one, 3, 2);
  REQUIRE_THROWS_AS(
      pessimistic_response_evi(collapsed_region(m), m.reward, pi1, cfg),
      NoConvergence);
}

TEST_CASE("planning validates its input shapes") {
  Counts counts(2, 1, 1);
  counts.start_phase(1);
  ConfidenceRegion reg = build_region(counts, 0.1, 100);
  REQUIRE_THROWS_AS(maximin_evi(reg, std::vector<double>(5, 0.5), ViConfig{}),
                    DimensionMismatch);
  StationaryPolicy bad = StationaryPolicy::uniform(Player::one, 3, 1);
  REQUIRE_THROWS_AS(pessimistic_response_evi(reg, std::vector<double>(2, 0.5),
                                             bad, ViConfig{}),
                    DimensionMismatch);
}
