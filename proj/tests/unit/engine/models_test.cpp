#include <doctest.h>

#include <cmath>
#include <limits>
#include <stdexcept>

#include "support/gen.hpp"
#include "support/oracles.hpp"
#include "support/scenarios.hpp"
#include "tsim/models.hpp"

using namespace tsim;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

IdmParams random_idm(test::Gen& g) {
  IdmParams p;
  p.v0 = g.uniform(5, 40);
  p.T = g.uniform(0.5, 3);
  p.a_max = g.uniform(0.3, 4);
  p.b = g.uniform(0.5, 5);
  p.delta = g.coin() ? 4.0 : g.uniform(1, 8);
  p.s0 = g.uniform(0.5, 5);
  return p;
}

}  // namespace

TEST_CASE("idm: standing start on a free road accelerates at a_max") {
  const IdmParams p;
  CHECK(idm_accel(0.0, 0.0, kInf, p, 30.0) == p.a_max);
}

TEST_CASE("idm: desired speed on a free road gives zero acceleration") {
  IdmParams p;
  p.v0 = 15.0;
  CHECK(idm_accel(15.0, 0.0, kInf, p, 30.0) == 0.0);
  // The lane cap lowers the desired speed.
  CHECK(idm_accel(12.0, 0.0, kInf, p, 12.0) == 0.0);
}

TEST_CASE("idm: worked case matches a direct evaluation") {
  IdmParams p;
  p.v0 = 15;
  p.T = 1.5;
  p.a_max = 2;
  p.b = 2;
  p.delta = 4;
  p.s0 = 2;
  // s* = 2 + 15 = 17; a = 2 (1 - (10/15)^4 - (17/30)^2)
  const double expected = 2.0 * (1.0 - std::pow(10.0 / 15.0, 4) - (17.0 / 30.0) * (17.0 / 30.0));
  CHECK(std::abs(idm_accel(10, 0, 30, p, 100) - expected) <= 1e-12);
}

TEST_CASE("idm: non-positive gap is a contract violation") {
  const IdmParams p;
  CHECK_THROWS_AS(idm_accel(5, 0, 0.0, p, 20), std::domain_error);
  CHECK_THROWS_AS(idm_accel(5, 0, -1.0, p, 20), std::domain_error);
}

TEST_CASE("property: idm matches the direct formula and never exceeds a_max") {
  test::Gen g(101);
  for (int i = 0; i < 10000; ++i) {
    const IdmParams p = random_idm(g);
    const double cap = g.uniform(3, 40);
    const double v = g.uniform(0, std::min(p.v0, cap));
    const double dv = g.uniform(-20, 20);
    const double gap = g.coin(0.1) ? kInf : g.uniform(0.01, 300);
    const double a = idm_accel(v, dv, gap, p, cap);
    CHECK(std::abs(a - test::idm_direct(v, dv, gap, p, cap)) <= 1e-12);
    CHECK(a <= p.a_max);
    CHECK(std::isfinite(a));
  }
}

TEST_CASE("property: equilibrium gap zeroes the acceleration") {
  test::Gen g(102);
  for (int i = 0; i < 1000; ++i) {
    const IdmParams p = random_idm(g);
    const double cap = g.uniform(3, 40);
    const double v = g.uniform(0.1, 0.95) * std::min(p.v0, cap);
    const double gap = idm_equilibrium_gap(v, p, cap);
    CHECK(gap == doctest::Approx(test::idm_equilibrium_direct(v, p, cap)).epsilon(1e-12));
    CHECK(std::abs(idm_accel(v, 0, gap, p, cap)) < 1e-9);
  }
}

TEST_CASE("platoon on a ring settles at the equilibrium gap") {
  const test::PlatoonResult r = test::run_platoon(25, 250.0, 1500, 1);
  CHECK(r.v_e > 1.0);
  CHECK(r.worst_relative_error < 0.01);
}

TEST_CASE("mobil: blocked lane with an empty neighbor changes when evaluated") {
  const MobilParams mp;
  const IdmParams idm;
  MobilSituation sit;
  sit.me = {0.0, 10.0, 5.0};
  sit.cur_leader = VehicleView{15.0, 0.0, 5.0};  // stopped, 10 m ahead
  sit.cur_cap = sit.tgt_cap = 20.0;
  // Incentive: a_free - a_blocked from the oracle.
  const double gain = test::idm_direct(10, 0, kInf, idm, 20) - test::idm_direct(10, 10, 10, idm, 20);
  REQUIRE(gain > mp.threshold);
  for (double draw : {0.0, 0.3, 0.89}) {
    const MobilResult r = mobil_decide(sit, mp, idm, draw);
    CHECK(r.decision == LaneDecision::change);
    CHECK(r.incentive == doctest::Approx(gain));
  }
  CHECK(mobil_decide(sit, mp, idm, 0.9).decision == LaneDecision::stay);
  CHECK(mobil_decide(sit, mp, idm, 0.99).decision == LaneDecision::stay);
}

TEST_CASE("mobil: a fast follower right behind vetoes the change") {
  const MobilParams mp;
  const IdmParams idm;
  MobilSituation sit;
  sit.me = {50.0, 10.0, 5.0};
  sit.cur_leader = VehicleView{65.0, 0.0, 5.0};
  sit.tgt_follower = VehicleView{44.0, 25.0, 5.0};  // 1 m gap
  sit.cur_cap = sit.tgt_cap = 30.0;
  for (int k = 0; k < 100; ++k)
    CHECK(mobil_decide(sit, mp, idm, k / 100.0).decision == LaneDecision::stay);
}

TEST_CASE("mobil: identical lanes give no incentive") {
  const MobilParams mp;
  const IdmParams idm;
  MobilSituation sit;
  sit.me = {100.0, 12.0, 5.0};
  sit.cur_leader = sit.tgt_leader = VehicleView{140.0, 10.0, 5.0};
  sit.cur_cap = sit.tgt_cap = 20.0;
  const MobilResult r = mobil_decide(sit, mp, idm, 0.0);
  CHECK(r.decision == LaneDecision::stay);
  CHECK(r.incentive == doctest::Approx(0.0));
}

TEST_CASE("property: an accepted change never brakes the new follower beyond b_safe") {
  test::Gen g(103);
  const IdmParams idm;
  int changes = 0;
  for (int i = 0; i < 20000; ++i) {
    MobilParams mp;
    mp.politeness = g.uniform(0, 1);
    mp.b_safe = g.uniform(1, 6);
    mp.threshold = g.uniform(0.01, 0.5);
    MobilSituation sit;
    sit.me = {g.uniform(20, 80), g.uniform(0, 20), 5.0};
    sit.cur_cap = g.uniform(8, 25);
    sit.tgt_cap = g.uniform(8, 25);
    auto around = [&](bool ahead) {
      const double s = ahead ? sit.me.s + g.uniform(5.5, 60) : sit.me.s - g.uniform(5.5, 60);
      return VehicleView{s, g.uniform(0, 20), 5.0};
    };
    if (g.coin(0.8)) sit.cur_leader = around(true);
    if (g.coin(0.5)) sit.cur_follower = around(false);
    if (g.coin(0.5)) sit.tgt_leader = around(true);
    if (g.coin(0.8)) sit.tgt_follower = around(false);
    const double draw = g.uniform(0, 1);
    const MobilResult r = mobil_decide(sit, mp, idm, draw);
    if (r.decision != LaneDecision::change) continue;
    ++changes;
    CHECK(draw < mp.eval_prob);
    CHECK(r.incentive > mp.threshold);
    if (sit.tgt_follower) {
      const double gap = sit.me.s - sit.me.length - sit.tgt_follower->s;
      REQUIRE(gap > 0.0);
      CHECK(test::idm_direct(sit.tgt_follower->v, sit.tgt_follower->v - sit.me.v, gap, idm,
                             sit.tgt_cap) >= -mp.b_safe);
    }
  }
  CHECK(changes > 100);
}
