#include "tsim/models.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "tsim/error.hpp"

namespace tsim {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Acceleration of `follower` behind `leader`; nullopt when they overlap.
std::optional<double> follow_accel(const VehicleView& follower,
                                   const std::optional<VehicleView>& leader,
                                   const IdmParams& p, double cap) {
  if (!leader) return idm_accel(follower.v, 0.0, kInf, p, cap);
  const double gap = leader->s - leader->length - follower.s;
  if (!(gap > 0.0)) return std::nullopt;
  return idm_accel(follower.v, follower.v - leader->v, gap, p, cap);
}

}  // namespace

void IdmParams::validate() const {
  if (!(v0 > 0.0 && T > 0.0 && a_max > 0.0 && b > 0.0 && s0 > 0.0 && delta >= 1.0))
    throw ValidationError("IDM parameters must be positive with delta >= 1");
}

void MobilParams::validate() const {
  if (!(politeness >= 0.0 && politeness <= 1.0))
    throw ValidationError("MOBIL politeness must lie in [0, 1]");
  if (!(threshold > 0.0 && b_safe > 0.0))
    throw ValidationError("MOBIL threshold and b_safe must be positive");
  if (!(eval_prob > 0.0 && eval_prob <= 1.0))
    throw ValidationError("MOBIL eval_prob must lie in (0, 1]");
}

double idm_desired_gap(double v, double delta_v, const IdmParams& p) {
  return p.s0 + std::max(0.0, v * p.T + v * delta_v / (2.0 * std::sqrt(p.a_max * p.b)));
}

double idm_accel(double v, double delta_v, double gap, const IdmParams& p, double v_cap) {
  if (!(gap > 0.0)) throw std::domain_error("idm_accel: gap must be positive");
  const double v_desired = std::min(p.v0, v_cap);
  const double free_term = std::pow(v / v_desired, p.delta);
  const double interaction = gap == kInf ? 0.0 : idm_desired_gap(v, delta_v, p) / gap;
  return p.a_max * (1.0 - free_term - interaction * interaction);
}

double idm_equilibrium_gap(double v, const IdmParams& p, double v_cap) {
  const double v_desired = std::min(p.v0, v_cap);
  return idm_desired_gap(v, 0.0, p) / std::sqrt(1.0 - std::pow(v / v_desired, p.delta));
}

MobilResult mobil_decide(const MobilSituation& sit, const MobilParams& p, const IdmParams& idm,
                         double rng_draw) {
  MobilResult result;
  if (!(rng_draw < p.eval_prob)) return result;

  // Post-change accelerations.
  const auto me_new = follow_accel(sit.me, sit.tgt_leader, idm, sit.tgt_cap);
  if (!me_new) return result;
  std::optional<double> new_follower_after;
  if (sit.tgt_follower) {
    new_follower_after = follow_accel(*sit.tgt_follower, sit.me, idm, sit.tgt_cap);
    if (!new_follower_after) return result;
    // Safety: the new follower must not brake harder than b_safe.
    if (*new_follower_after < -p.b_safe) return result;
  }

  // Current-configuration accelerations. An overlap in the current lane
  // (already resolved by the caller as a hard stop) counts as -b_safe*10 so the
  // incentive to leave stays finite.
  const double hard = -10.0 * p.b_safe;
  const double me_now = follow_accel(sit.me, sit.cur_leader, idm, sit.cur_cap).value_or(hard);

  double others = 0.0;
  if (sit.tgt_follower) {
    const double before =
        follow_accel(*sit.tgt_follower, sit.tgt_leader, idm, sit.tgt_cap).value_or(hard);
    others += *new_follower_after - before;
  }
  if (sit.cur_follower) {
    const double before = follow_accel(*sit.cur_follower, sit.me, idm, sit.cur_cap).value_or(hard);
    const double after =
        follow_accel(*sit.cur_follower, sit.cur_leader, idm, sit.cur_cap).value_or(hard);
    others += after - before;
  }

  result.incentive = (*me_new - me_now) + p.politeness * others;
  if (result.incentive > p.threshold) result.decision = LaneDecision::change;
  return result;
}

}  // namespace tsim
