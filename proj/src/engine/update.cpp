#include <algorithm>
#include <cmath>
#include <limits>

#include "tsim/engine.hpp"
#include "tsim/rng.hpp"

namespace tsim {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Stream tag separating lane-change draws from any other keyed stream.
constexpr std::uint64_t kMobilStream = 0x4d4f42494cULL;

struct Leader {
  double gap = kInf;  // bumper to bumper; +inf when nothing within the lookahead
  double v = 0.0;
  double length = 0.0;
  bool stop_line = false;

  bool present() const { return gap != kInf; }
};

class Sensor {
 public:
  Sensor(const UpdateContext& ctx, Slot me)
      : ctx_(ctx), me_(me), self_(ctx.vehicles[me]), motion_(ctx.snapshot->motion[me]) {}

  double length_of(Slot s) const { return ctx_.vehicles[s].length; }
  const Motion& motion(Slot s) const { return ctx_.snapshot->motion[s]; }
  const LaneStatic& lane(LaneId id) const { return ctx_.lanes[static_cast<std::size_t>(id)]; }

  // Whether a vehicle `dist` meters before the entry of `next` must treat the
  // entry as a stop line.
  bool must_stop(LaneId next, double dist, double v) const {
    const LaneStatic& ln = lane(next);
    if (ln.closed) return true;
    if (!ln.connector) return false;
    switch (ctx_.lights[static_cast<std::size_t>(next)]) {
      case Light::green:
        return !exit_has_room(next, dist, v);
      case Light::red:
        return true;
      case Light::amber:
        // Too close to stop comfortably: proceed.
        if (v > 0.0 && dist <= v * v / (2.0 * ctx_.config->idm.b)) return false;
        return true;
    }
    return true;
  }

  // Keep the junction clear: enter a connector only when its exit lane will
  // have room behind the vehicles already on the connector by the time we
  // arrive. The exit tail is assumed to brake comfortably from its speed.
  bool exit_has_room(LaneId connector, double dist, double v) const {
    const double s0 = ctx_.config->idm.s0;
    const double b = ctx_.config->idm.b;
    const LaneId out = ctx_.net->lane(connector).successors.front();
    double room = lane(out).length;
    const auto tail = ctx_.index->on_lane(out);
    if (!tail.empty()) {
      const Motion& t = motion(tail.back());
      const double stopping = t.v * t.v / (2.0 * b);
      const double travel = v > 0.0 ? std::min(stopping, t.v * dist / v) : stopping;
      room = std::min(lane(out).length, t.s + travel) - length_of(tail.back());
    }
    for (Slot x : ctx_.index->on_lane(connector)) room -= length_of(x) + s0;
    return room >= self_.length + s0;
  }

  // Vehicles on other lanes merging into `next` that are closer to its entry
  // than we are (ties by id) act as leaders.
  void merge_leaders(LaneId next, LaneId via, double dist, Leader& best) const {
    const Lane& ln = ctx_.net->lane(next);
    if (ln.predecessors.size() < 2) return;
    for (LaneId p : ln.predecessors) {
      if (p == via) continue;
      const double plen = lane(p).length;
      for (Slot x : ctx_.index->on_lane(p)) {
        const double remaining = plen - motion(x).s;
        if (remaining > dist || (remaining == dist && self_.id < ctx_.vehicles[x].id)) break;
        const double gap = dist - remaining - length_of(x);
        if (gap < best.gap) best = Leader{gap, motion(x).v, length_of(x), false};
      }
    }
  }

  // Nearest obstacle ahead of position `s` on `path[0]`, then along the rest
  // of `path`. `first` is the vehicle directly ahead on path[0], if known.
  Leader ahead(std::span<const LaneId> path, double s, double v, std::optional<Slot> first) const {
    const double lookahead = ctx_.config->lookahead;
    if (first) {
      const Leader l{motion(*first).s - length_of(*first) - s, motion(*first).v,
                     length_of(*first), false};
      return l.gap > lookahead ? Leader{} : l;
    }
    double dist = lane(path[0]).length - s;
    for (std::size_t k = 1; k < path.size() && dist < lookahead; ++k) {
      const LaneId next = path[k];
      if (must_stop(next, dist, v)) return Leader{dist, 0.0, 0.0, true};
      Leader best;
      merge_leaders(next, path[k - 1], dist, best);
      const auto occupants = ctx_.index->on_lane(next);
      if (!occupants.empty()) {
        const Slot tail = occupants.back();
        const double gap = dist + motion(tail).s - length_of(tail);
        if (gap < best.gap) best = Leader{gap, motion(tail).v, length_of(tail), false};
      }
      if (best.present()) return best.gap > lookahead ? Leader{} : best;
      dist += lane(next).length;
    }
    return {};
  }

  const UpdateContext& ctx_;
  Slot me_;
  const VehicleState& self_;
  const Motion& motion_;
};

struct Integrated {
  double s = 0.0;
  double v = 0.0;
  double accel = 0.0;
};

Integrated integrate(double s, double v, const Leader& leader, double cap,
                     const EngineConfig& cfg) {
  if (leader.present() && !(leader.gap > 0.0)) return {s, 0.0, 0.0};
  const double a = idm_accel(v, v - leader.v, leader.gap, cfg.idm, cap);
  const double dt = cfg.dt;
  double v_new;
  double disp;
  const double v_raw = v + a * dt;
  if (v_raw <= 0.0) {
    v_new = 0.0;
    disp = a < 0.0 ? v * v / (2.0 * -a) : 0.0;
  } else {
    // Never accelerate past the desired speed within one step.
    const double v_desired = std::min(cfg.idm.v0, cap);
    v_new = std::min(v_raw, std::max(v, v_desired));
    disp = v * dt + 0.5 * (v_new - v) * dt;
  }
  if (leader.stop_line && disp >= leader.gap) {
    disp = leader.gap;
    v_new = 0.0;
  }
  return {s + std::max(0.0, disp), v_new, a};
}

std::optional<VehicleView> as_view(const Leader& l, double s_front) {
  if (!l.present()) return std::nullopt;
  return VehicleView{s_front + l.gap + l.length, l.v, l.length};
}

// Connector leaving `lane` toward a lane of road `road`, smallest id first.
LaneId connector_to_road(const UpdateContext& ctx, LaneId lane, int road) {
  for (LaneId c : ctx.net->lane(lane).successors) {
    const LaneStatic& cs = ctx.lanes[static_cast<std::size_t>(c)];
    if (cs.closed) continue;
    const LaneId out = ctx.net->lane(c).successors.front();
    if (ctx.lanes[static_cast<std::size_t>(out)].road == road) return c;
  }
  return kNoLane;
}

struct Candidate {
  LaneId lane = kNoLane;
  MobilSituation situation;
  Leader leader;  // target-lane leader in target coordinates
  double s_target = 0.0;
  double incentive = 0.0;
};

}  // namespace

VehicleDelta update_vehicle(const UpdateContext& ctx, Slot me) {
  const Sensor sense(ctx, me);
  const VehicleState& self = ctx.vehicles[me];
  const Motion& m = ctx.snapshot->motion[me];
  const EngineConfig& cfg = *ctx.config;
  const LaneStatic& cur = sense.lane(m.lane);

  const auto on_lane = ctx.index->on_lane(m.lane);
  const std::uint32_t rank = ctx.index->rank[me];
  const std::optional<Slot> same_lane_leader =
      rank > 0 ? std::optional<Slot>(on_lane[rank - 1]) : std::nullopt;
  const std::span<const LaneId> path(self.route.data() + self.route_index,
                                     self.route.size() - self.route_index);
  const Leader leader = sense.ahead(path, m.s, m.v, same_lane_leader);
  const Integrated keep = integrate(m.s, m.v, leader, cur.max_speed, cfg);

  VehicleDelta delta;
  delta.s = keep.s;
  delta.v = keep.v;
  delta.accel = keep.accel;

  // Lane changes happen only on road lanes that are not the destination and
  // only while the current configuration is collision free.
  if (cur.connector || path.size() < 3 || (leader.present() && !(leader.gap > 0.0)))
    return delta;
  const double draw = KeyedRng(cfg.seed ^ kMobilStream, static_cast<std::uint64_t>(self.id),
                               ctx.step)
                          .uniform();
  if (!(draw < cfg.mobil.eval_prob)) return delta;

  const int next_road = sense.lane(path[2]).road;
  const VehicleView me_view{m.s, m.v, self.length};
  const std::optional<VehicleView> cur_follower =
      rank + 1 < on_lane.size()
          ? std::optional<VehicleView>(VehicleView{sense.motion(on_lane[rank + 1]).s,
                                                   sense.motion(on_lane[rank + 1]).v,
                                                   sense.length_of(on_lane[rank + 1])})
          : std::nullopt;

  Candidate best;
  for (LaneId target : {cur.left, cur.right}) {
    if (target == kNoLane) continue;
    const LaneStatic& tl = sense.lane(target);
    if (tl.closed) continue;
    const LaneId conn = connector_to_road(ctx, target, next_road);
    if (conn == kNoLane) continue;
    const double ratio = tl.length / cur.length;
    const double s_t = m.s * ratio;
    if (s_t >= tl.length) continue;

    // Split the target lane into the vehicles ahead of and behind us.
    const auto occ = ctx.index->on_lane(target);
    std::size_t split = 0;
    while (split < occ.size() && sense.motion(occ[split]).s > s_t) ++split;
    std::optional<Slot> t_lead;
    if (split > 0) t_lead = occ[split - 1];
    std::optional<VehicleView> t_follow;
    if (split < occ.size()) {
      const Slot f = occ[split];
      t_follow = VehicleView{sense.motion(f).s / ratio, sense.motion(f).v, sense.length_of(f)};
    }
    const LaneId t_path[] = {target, conn, ctx.net->lane(conn).successors.front()};
    const Leader t_leader = sense.ahead(t_path, s_t, m.v, t_lead);

    Candidate c;
    c.lane = target;
    c.s_target = s_t;
    c.leader = t_leader;
    c.situation.me = me_view;
    c.situation.cur_leader = as_view(leader, m.s);
    c.situation.cur_follower = cur_follower;
    // Target-lane leader expressed on the current lane's axis.
    if (t_leader.present())
      c.situation.tgt_leader =
          VehicleView{m.s + t_leader.gap / ratio + t_leader.length, t_leader.v, t_leader.length};
    c.situation.tgt_follower = t_follow;
    c.situation.cur_cap = cur.max_speed;
    c.situation.tgt_cap = tl.max_speed;
    // The gate has already passed; evaluate the deterministic criteria.
    const MobilResult r = mobil_decide(c.situation, cfg.mobil, cfg.idm, 0.0);
    if (r.decision != LaneDecision::change) continue;
    c.incentive = r.incentive;
    if (best.lane == kNoLane || c.incentive > best.incentive) best = c;
  }
  if (best.lane == kNoLane) return delta;

  const LaneStatic& tl = sense.lane(best.lane);
  const Integrated moved = integrate(best.s_target, m.v, best.leader, tl.max_speed, cfg);
  if (moved.s > tl.length) return delta;
  delta.change_lane = best.lane;
  delta.change_s = moved.s;
  delta.change_v = moved.v;
  return delta;
}

}  // namespace tsim
