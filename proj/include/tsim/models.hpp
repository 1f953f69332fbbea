#pragma once

#include <optional>

namespace tsim {

/// Intelligent Driver Model parameters.
struct IdmParams {
  double v0 = 20.0;     // desired speed, m/s (the lane cap applies on top)
  double T = 1.5;       // safe time headway, s
  double a_max = 2.0;   // maximum acceleration, m/s^2
  double b = 2.0;       // comfortable deceleration, m/s^2
  double delta = 4.0;   // acceleration exponent
  double s0 = 2.0;      // jam distance, m

  void validate() const;
};

/// Desired dynamic gap s* = s0 + max(0, v*T + v*dv / (2*sqrt(a_max*b))).
double idm_desired_gap(double v, double delta_v, const IdmParams& p);

/// IDM acceleration. `delta_v` is own speed minus leader speed; pass
/// gap = +infinity when there is no leader. Throws std::domain_error when
/// gap <= 0: overlaps must be resolved by the caller.
double idm_accel(double v, double delta_v, double gap, const IdmParams& p, double v_cap);

/// Equilibrium bumper-to-bumper gap for a homogeneous platoon at speed v.
double idm_equilibrium_gap(double v, const IdmParams& p, double v_cap);

/// Randomized MOBIL lane-change parameters.
struct MobilParams {
  double politeness = 0.2;  // p in [0, 1]
  double threshold = 0.1;   // incentive threshold, m/s^2
  double b_safe = 4.0;      // max deceleration imposed on the new follower, m/s^2
  double eval_prob = 0.9;   // per-step probability of evaluating a change

  void validate() const;
};

/// A vehicle (or a stop line, with length 0 and speed 0) projected onto a
/// common longitudinal axis. `s` is the front position.
struct VehicleView {
  double s = 0.0;
  double v = 0.0;
  double length = 0.0;
};

struct MobilSituation {
  VehicleView me;
  std::optional<VehicleView> cur_leader;
  std::optional<VehicleView> cur_follower;
  std::optional<VehicleView> tgt_leader;
  std::optional<VehicleView> tgt_follower;
  double cur_cap = 0.0;  // lane speed caps seen by vehicles in each lane
  double tgt_cap = 0.0;
};

enum class LaneDecision { stay, change };

struct MobilResult {
  LaneDecision decision = LaneDecision::stay;
  double incentive = 0.0;  // meaningful only when both gates passed
};

/// Randomized MOBIL: the change is evaluated only when rng_draw < eval_prob,
/// then must pass the safety criterion on the new follower and the
/// politeness-weighted incentive criterion.
MobilResult mobil_decide(const MobilSituation& situation, const MobilParams& p,
                         const IdmParams& idm, double rng_draw);

}  // namespace tsim
