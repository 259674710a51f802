#include <catch2/catch_amalgamated.hpp>
#include <cmath>

#include "test_util.hpp"
#include "ucsg/opponents.hpp"

using namespace ucsg;
using Catch::Approx;

namespace {

Trajectory no_history;

OpponentContext ctx_at(const SGModel& m, const StationaryPolicy& pi1, int phase,
                       int64_t t, int state) {
  return OpponentContext{m, pi1, phase, t, state, no_history};
}

}  // namespace

TEST_CASE("stationary opponent plays its policy verbatim") {
  Rng rng(1);
  SGModel m = testutil::random_ergodic_game(rng, 2, 2, 3, 0.2);
  StationaryPolicy pi2 = testutil::random_policy(rng, Player::two, 2, 3);
  Opponent opp = Opponent::stationary(pi2);
  StationaryPolicy pi1 = StationaryPolicy::uniform(Player::one, 2, 2);
  for (int s = 0; s < 2; ++s) {
    const std::vector<double>& d = opp.act(ctx_at(m, pi1, 1, 1, s));
    for (int a = 0; a < 3; ++a) REQUIRE(d[a] == pi2.p(s, a));
  }
}

TEST_CASE("stationary opponent rejects mismatched policies") {
  Rng rng(2);
  SGModel m = testutil::random_ergodic_game(rng, 2, 2, 3, 0.2);
  StationaryPolicy pi1 = StationaryPolicy::uniform(Player::one, 2, 2);
  Opponent wrong_shape =
      Opponent::stationary(StationaryPolicy::uniform(Player::two, 2, 2));
  REQUIRE_THROWS_AS(wrong_shape.act(ctx_at(m, pi1, 1, 1, 0)), DimensionMismatch);
  Opponent wrong_owner =
      Opponent::stationary(StationaryPolicy::uniform(Player::one, 2, 3));
  REQUIRE_THROWS_AS(wrong_owner.act(ctx_at(m, pi1, 1, 1, 0)), DimensionMismatch);
}

TEST_CASE("switching opponent flips exactly at its cut times") {
  Rng rng(3);
  SGModel m = testutil::random_ergodic_game(rng, 2, 2, 2, 0.2);
  StationaryPolicy pi1 = StationaryPolicy::uniform(Player::one, 2, 2);
  StationaryPolicy a = StationaryPolicy::pure(Player::two, 2, 2, {0, 0});
  StationaryPolicy b = StationaryPolicy::pure(Player::two, 2, 2, {1, 1});
  Opponent opp = Opponent::switching({a, b}, {100});
  REQUIRE(opp.act(ctx_at(m, pi1, 1, 99, 0))[0] == 1.0);
  REQUIRE(opp.act(ctx_at(m, pi1, 1, 100, 0))[1] == 1.0);
  REQUIRE(opp.act(ctx_at(m, pi1, 1, 5000, 0))[1] == 1.0);
}

TEST_CASE("switching opponent validates its schedule") {
  StationaryPolicy a = StationaryPolicy::uniform(Player::two, 2, 2);
  REQUIRE_THROWS_AS(Opponent::switching({a, a}, {}), DimensionMismatch);
  REQUIRE_THROWS_AS(Opponent::switching({a, a, a}, {50, 50}), DimensionMismatch);
  REQUIRE_THROWS_AS(Opponent::switching({}, {}), DimensionMismatch);
}

TEST_CASE("best-response opponent solves the stage game it is shown") {
  // single-state diagonal game: against pi1 = (0.7, 0.3) the pure
  // column 1 concedes only 0.3
  SGModel m(1, 2, 2);
  m.r(0, 0, 0) = 1.0;
  m.r(0, 1, 1) = 1.0;
  for (int a1 = 0; a1 < 2; ++a1)
    for (int a2 = 0; a2 < 2; ++a2) m.row(0, a1, a2)[0] = 1.0;
  StationaryPolicy pi1(Player::one, 1, 2);
  pi1.p(0, 0) = 0.7;
  pi1.p(0, 1) = 0.3;
  Opponent opp = Opponent::best_response();
  const std::vector<double>& d = opp.act(ctx_at(m, pi1, 1, 1, 0));
  REQUIRE(d[1] == 1.0);

  // same phase: cached even if the learner policy object changes
  StationaryPolicy flipped(Player::one, 1, 2);
  flipped.p(0, 0) = 0.3;
  flipped.p(0, 1) = 0.7;
  REQUIRE(opp.act(ctx_at(m, flipped, 1, 2, 0))[1] == 1.0);
  // new phase: recomputed against the new policy
  REQUIRE(opp.act(ctx_at(m, flipped, 2, 3, 0))[0] == 1.0);
}

TEST_CASE("best-response opponent honors a periodic refresh") {
  SGModel m(1, 2, 2);
  m.r(0, 0, 0) = 1.0;
  m.r(0, 1, 1) = 1.0;
  for (int a1 = 0; a1 < 2; ++a1)
    for (int a2 = 0; a2 < 2; ++a2) m.row(0, a1, a2)[0] = 1.0;
  StationaryPolicy heavy0(Player::one, 1, 2);
  heavy0.p(0, 0) = 0.9;
  heavy0.p(0, 1) = 0.1;
  StationaryPolicy heavy1(Player::one, 1, 2);
  heavy1.p(0, 0) = 0.1;
  heavy1.p(0, 1) = 0.9;
  Opponent opp = Opponent::best_response(10);
  REQUIRE(opp.act(ctx_at(m, heavy0, 1, 1, 0))[1] == 1.0);
  // stale policy view persists until the period elapses
  REQUIRE(opp.act(ctx_at(m, heavy1, 1, 5, 0))[1] == 1.0);
  REQUIRE(opp.act(ctx_at(m, heavy1, 1, 11, 0))[0] == 1.0);
}

TEST_CASE("best-response opponent refuses to act blind") {
  Rng rng(4);
  SGModel m = testutil::random_ergodic_game(rng, 2, 2, 2, 0.2);
  StationaryPolicy none;
  Opponent opp = Opponent::best_response();
  REQUIRE_THROWS_AS(opp.act(ctx_at(m, none, 1, 1, 0)), DimensionMismatch);
}

TEST_CASE("seeded random opponent is reproducible and valid") {
  Rng rng(5);
  SGModel m = testutil::random_ergodic_game(rng, 2, 2, 3, 0.2);
  StationaryPolicy pi1 = StationaryPolicy::uniform(Player::one, 2, 2);
  Opponent a = Opponent::random_seeded(42);
  Opponent b = Opponent::random_seeded(42);
  std::vector<double> first;
  for (int64_t t = 1; t <= 20; ++t) {
    std::vector<double> da = a.act(ctx_at(m, pi1, 1, t, 0));
    std::vector<double> db = b.act(ctx_at(m, pi1, 1, t, 0));
    REQUIRE(da == db);
    double sum = 0.0;
    for (double x : da) {
      REQUIRE(x >= 0.0);
      sum += x;
    }
    REQUIRE(sum == Approx(1.0).margin(1e-12));
    if (t == 1) first = da;
    if (t == 2) REQUIRE(da != first);  // it actually varies over steps
  }
}

TEST_CASE("visit-weighted opponent averages") {
  // hand trajectory on 2 states, A2 = 2
  Trajectory steps(3);
  steps[0].s = 0;
  steps[1].s = 1;
  steps[2].s = 1;
  std::vector<double> pi2_log = {
      0.2, 0.8,   // at state 0
      1.0, 0.0,   // at state 1
      0.5, 0.5};  // at state 1 again
  auto pibar = extract_pibar(steps, 0, 3, pi2_log, 2, 2);
  REQUIRE(pibar.has_value());
  REQUIRE(pibar->p(0, 0) == Approx(0.2).margin(1e-15));
  REQUIRE(pibar->p(0, 1) == Approx(0.8).margin(1e-15));
  REQUIRE(pibar->p(1, 0) == Approx(0.75).margin(1e-15));
  REQUIRE(pibar->p(1, 1) == Approx(0.25).margin(1e-15));
  for (int s = 0; s < 2; ++s)
    REQUIRE(pibar->p(s, 0) + pibar->p(s, 1) == Approx(1.0).margin(1e-12));

  // an unvisited state leaves the average undefined
  auto partial = extract_pibar(steps, 1, 3, pi2_log, 2, 2);
  REQUIRE_FALSE(partial.has_value());
  // malformed slices are rejected
  REQUIRE_THROWS_AS(extract_pibar(steps, 2, 2, pi2_log, 2, 2),
                    DimensionMismatch);
  REQUIRE_THROWS_AS(extract_pibar(steps, 0, 4, pi2_log, 2, 2),
                    DimensionMismatch);
}

TEST_CASE("best-response opponent caps a fixed policy's earnings") {
  Rng rng(6);
  SGModel m = testutil::random_ergodic_game(rng, 3, 2, 2, 0.25);
  StationaryPolicy pi1 = testutil::random_policy(rng, Player::one, 3, 2);
  BestResponse br = exact_best_response(m, pi1);
  Opponent opp = Opponent::best_response();

  Rng sim(7);
  Trajectory history;
  int s = 0;
  double total = 0.0;
  const int64_t T = 100000;
  for (int64_t t = 1; t <= T; ++t) {
    int a1 = sim.categorical(pi1.dist(s), 2);
    const std::vector<double>& d2 = opp.act(ctx_at(m, pi1, 1, t, s));
    int a2 = sim.categorical(d2.data(), 2);
    total += m.r(s, a1, a2);
    s = sim.categorical(m.row(s, a1, a2), 3);
  }
  double floor = *std::min_element(br.gain.begin(), br.gain.end());
  double ceil = *std::max_element(br.gain.begin(), br.gain.end());
  REQUIRE(total / T <= ceil + 0.02);
  REQUIRE(total / T >= floor - 0.02);
}
