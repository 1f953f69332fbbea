#include <algorithm>
#include <cmath>

#include "tsim/engine.hpp"
#include "tsim/error.hpp"

namespace tsim {

// Tentative outcome of one driving vehicle during the commit stage. A vehicle
// keeping its lane moves along route[route_index ...]; an accepted lane change
// has the two-lane path (current lane, target lane).
struct Engine::Move {
  double s_old = 0.0;     // snapshot position on the start lane
  double x = 0.0;         // snapshot position in the coordinates of the final lane
  double x_mapped = 0.0;  // lane changes: snapshot position projected onto the target
  double s_new = 0.0;     // tentative front position on the final lane
  double v_new = 0.0;
  LaneId target = kNoLane;
  int new_route = -1;    // index into the accepted lane-change routes
  std::uint32_t n = 1;   // lanes on the path
  std::uint32_t at = 0;  // index of the final lane on the path
  bool finished = false;
};

namespace {

bool ahead_of(double xa, std::int64_t ida, double xb, std::int64_t idb) {
  return xa > xb || (xa == xb && ida < idb);
}

void erase_slot(std::vector<Slot>& v, Slot s) {
  v.erase(std::find(v.begin(), v.end(), s));
}

}  // namespace

void Engine::commit(const Prepared& prepared, std::span<const VehicleDelta> deltas, double t_new,
                    StepReport& report) {
  const Snapshot& snap = prepared.snapshot;
  std::vector<Move> mv(vehicles_.size());
  for (auto& occ : occupants_) occ.clear();

  auto len = [&](LaneId l) { return lanes_[static_cast<std::size_t>(l)].length; };
  auto lane_at = [&](Slot slot, std::uint32_t k) {
    const Move& m = mv[slot];
    if (m.target != kNoLane) return k == 0 ? vehicles_[slot].lane : m.target;
    const VehicleState& v = vehicles_[slot];
    return v.route[v.route_index + k];
  };
  auto x_in = [&](Slot slot, std::uint32_t k) {
    const Move& m = mv[slot];
    if (m.target != kNoLane) return k == 0 ? m.s_old : m.x_mapped;
    double x = m.s_old;
    for (std::uint32_t j = 0; j < k; ++j) x -= len(lane_at(slot, j));
    return x;
  };
  auto id_of = [&](Slot s) { return vehicles_[s].id; };

  // Keep-lane outcome for everyone: carry overshoot along the route.
  for (std::size_t i = 0; i < snap.driving.size(); ++i) {
    const Slot slot = snap.driving[i];
    const VehicleState& veh = vehicles_[slot];
    Move& m = mv[slot];
    m.s_old = snap.motion[slot].s;
    double rem = deltas[i].s;
    std::uint32_t k = 0;
    for (;;) {
      const double l = len(veh.route[veh.route_index + k]);
      if (veh.route_index + k + 1 == veh.route.size()) {
        m.finished = rem >= l;
        break;
      }
      if (!(rem > l)) break;
      rem -= l;
      ++k;
    }
    m.n = k + 1;
    m.at = m.finished ? m.n : k;
    m.s_new = rem;
    m.v_new = deltas[i].v;
    if (!m.finished) {
      m.x = x_in(slot, k);
      occupants_[static_cast<std::size_t>(lane_at(slot, k))].push_back(slot);
    }
  }

  // Lane changes, in ascending vehicle id, re-validated against the
  // tentative positions of everyone already committed to the target lane.
  std::vector<std::pair<std::int64_t, std::size_t>> changers;
  for (std::size_t i = 0; i < snap.driving.size(); ++i)
    if (deltas[i].change_lane != kNoLane) changers.emplace_back(id_of(snap.driving[i]), i);
  std::sort(changers.begin(), changers.end());
  std::vector<std::vector<LaneId>> new_routes;
  for (const auto& [id, i] : changers) {
    const Slot slot = snap.driving[i];
    const VehicleDelta& d = deltas[i];
    const VehicleState& veh = vehicles_[slot];
    Move& m = mv[slot];
    const LaneId target = d.change_lane;
    const double x_c = m.s_old * len(target) / len(veh.lane);
    std::optional<Slot> lead;
    std::optional<Slot> follow;
    for (Slot w : occupants_[static_cast<std::size_t>(target)]) {
      if (ahead_of(mv[w].x, id_of(w), x_c, id)) {
        if (!lead || ahead_of(mv[*lead].x, id_of(*lead), mv[w].x, id_of(w))) lead = w;
      } else if (!follow || ahead_of(mv[w].x, id_of(w), mv[*follow].x, id_of(*follow))) {
        follow = w;
      }
    }
    if (lead && !(mv[*lead].s_new - vehicles_[*lead].length - d.change_s > 0.0)) continue;
    double follower_accel = std::numeric_limits<double>::infinity();
    if (follow) {
      const double gap = d.change_s - veh.length - mv[*follow].s_new;
      if (!(gap > 0.0)) continue;
      const double vf = mv[*follow].v_new;
      follower_accel = idm_accel(vf, vf - d.change_v, gap, config_.idm,
                                 lanes_[static_cast<std::size_t>(target)].max_speed);
      if (follower_accel < -config_.mobil.b_safe) continue;
    }
    Route route;
    try {
      route = router_.route(target, veh.route.back());
    } catch (const NoRouteError&) {
      continue;
    }
    if (!m.finished) erase_slot(occupants_[static_cast<std::size_t>(lane_at(slot, m.at))], slot);
    m.target = target;
    m.n = 2;
    m.at = 1;
    m.finished = false;
    m.x_mapped = x_c;
    m.x = x_c;
    m.s_new = d.change_s;
    m.v_new = d.change_v;
    m.new_route = static_cast<int>(new_routes.size());
    occupants_[static_cast<std::size_t>(target)].push_back(slot);
    new_routes.push_back(std::move(route.lanes));
    ++report.lane_changes;
    report.min_follower_accel = std::min(report.min_follower_accel, follower_accel);
  }

  // Collision guard. Within a lane the committed order follows the snapshot
  // order; a follower is pulled back behind its leader, and a vehicle that
  // cannot fit on its new lane falls back to the previous lane on its path.
  std::vector<char> dirty(lanes_.size(), 0);
  std::vector<LaneId> dirty_list;
  auto mark = [&](LaneId l) {
    if (!dirty[static_cast<std::size_t>(l)]) {
      dirty[static_cast<std::size_t>(l)] = 1;
      dirty_list.push_back(l);
    }
  };
  for (std::size_t l = 0; l < lanes_.size(); ++l)
    if (!occupants_[l].empty()) mark(static_cast<LaneId>(l));

  std::vector<Slot> bounced;
  auto guard = [&](LaneId lane) {
    auto& occ = occupants_[static_cast<std::size_t>(lane)];
    std::sort(occ.begin(), occ.end(), [&](Slot a, Slot b) {
      return ahead_of(mv[a].x, id_of(a), mv[b].x, id_of(b));
    });
    bounced.clear();
    std::optional<Slot> prev;
    for (Slot slot : occ) {
      Move& f = mv[slot];
      if (prev) {
        const Move& l = mv[*prev];
        const double hard = l.s_new - vehicles_[*prev].length;
        const double soft = hard - config_.s0_floor;
        if (f.s_new > soft) {
          double cand = std::max(soft, std::min(f.x, hard));
          if (cand < 0.0 && hard >= 0.0) cand = 0.0;
          if (cand < f.s_new) {
            f.s_new = cand;
            f.v_new = std::min(f.v_new, l.v_new);
            ++report.guard_clamps;
          }
        }
      }
      if (f.s_new < 0.0) {
        if (f.at == 0) {
          // Only reachable from an overlapping initial placement.
          f.s_new = 0.0;
          f.v_new = 0.0;
        } else {
          bounced.push_back(slot);
          continue;
        }
      }
      prev = slot;
    }
    for (Slot slot : bounced) {
      erase_slot(occ, slot);
      Move& f = mv[slot];
      --f.at;
      const LaneId back = lane_at(slot, f.at);
      f.s_new = (f.target != kNoLane) ? f.s_old : len(back);
      f.v_new = 0.0;
      f.x = x_in(slot, f.at);
      occupants_[static_cast<std::size_t>(back)].push_back(slot);
      mark(back);
    }
  };

  for (;;) {
    while (!dirty_list.empty()) {
      const LaneId l = dirty_list.back();
      dirty_list.pop_back();
      dirty[static_cast<std::size_t>(l)] = 0;
      guard(l);
    }
    // No vehicle may pass through a lane where a vehicle that was ahead of
    // it at the snapshot ends the step.
    bool moved = false;
    for (Slot slot : snap.driving) {
      Move& m = mv[slot];
      if (m.target != kNoLane) continue;
      const std::uint32_t last = m.finished ? m.n : m.at;
      for (std::uint32_t k = 0; k < last; ++k) {
        const LaneId lane = lane_at(slot, k);
        const double xb = x_in(slot, k);
        const auto& occ = occupants_[static_cast<std::size_t>(lane)];
        const bool blocked = std::any_of(occ.begin(), occ.end(), [&](Slot w) {
          return ahead_of(mv[w].x, id_of(w), xb, id_of(slot));
        });
        if (!blocked) continue;
        if (!m.finished)
          erase_slot(occupants_[static_cast<std::size_t>(lane_at(slot, m.at))], slot);
        m.finished = false;
        m.at = k;
        m.x = xb;
        m.s_new = len(lane);
        occupants_[static_cast<std::size_t>(lane)].push_back(slot);
        mark(lane);
        moved = true;
        break;
      }
    }
    if (!moved) break;
  }

  // Apply.
  for (Slot slot : snap.driving) {
    Move& m = mv[slot];
    VehicleState& v = vehicles_[slot];
    if (m.finished) {
      v.status = VehicleStatus::finished;
      v.finish_time = t_new;
      v.route_index = v.route.size() - 1;
      v.lane = v.route.back();
      v.s = len(v.lane);
      v.v = m.v_new;
      ++report.finished;
      continue;
    }
    if (m.target != kNoLane) {
      if (m.at == 1) {
        v.route.resize(v.route_index);
        auto& tail = new_routes[static_cast<std::size_t>(m.new_route)];
        v.route.insert(v.route.end(), tail.begin(), tail.end());
      } else {
        --report.lane_changes;
      }
    } else {
      v.route_index += m.at;
    }
    v.lane = v.route[v.route_index];
    v.s = std::clamp(m.s_new, 0.0, len(v.lane));
    v.v = m.v_new;
  }
}

void Engine::inject(double t_new, StepReport& report) {
  auto len = [&](LaneId l) { return lanes_[static_cast<std::size_t>(l)].length; };
  auto open_near = [&](LaneId lane) -> LaneId {
    const LaneStatic& ls = lanes_[static_cast<std::size_t>(lane)];
    if (!ls.closed) return lane;
    const auto& road = net_.roads[static_cast<std::size_t>(ls.road)].lanes;
    const auto pos = std::find(road.begin(), road.end(), lane) - road.begin();
    LaneId best = kNoLane;
    long best_d = 0;
    for (long k = 0; k < static_cast<long>(road.size()); ++k) {
      if (lanes_[static_cast<std::size_t>(road[k])].closed) continue;
      const long d = std::abs(k - pos);
      if (best == kNoLane || d < best_d) {
        best = road[static_cast<std::size_t>(k)];
        best_d = d;
      }
    }
    return best;
  };

  std::vector<Slot> still;
  std::size_t i = 0;
  for (; i < pending_.size(); ++i) {
    const Slot slot = pending_[i];
    VehicleState& veh = vehicles_[slot];
    if (veh.depart_time > t_new) break;
    const LaneId origin = open_near(veh.origin_lane);
    const LaneId dest = open_near(veh.dest_lane);
    if (origin == kNoLane || dest == kNoLane) {
      still.push_back(slot);
      continue;
    }
    // Unreachable trips are dropped as soon as they are due; the route itself
    // is built only once the origin has room.
    if (router_.cost_to(origin, dest) < 0) {
      veh.status = VehicleStatus::dropped;
      warnings_.push_back("trip " + std::to_string(veh.id) + " dropped: no route from lane " +
                          std::to_string(origin) + " to lane " + std::to_string(dest));
      ++report.dropped;
      continue;
    }
    double s = veh.origin_s;
    if (origin != veh.origin_lane) s *= len(origin) / len(veh.origin_lane);
    s = std::clamp(s, 0.0, lanes_[static_cast<std::size_t>(origin)].length);
    auto& occ = occupants_[static_cast<std::size_t>(origin)];
    const bool clear = std::all_of(occ.begin(), occ.end(), [&](Slot w) {
      const double need = config_.idm.s0 + std::max(veh.length, vehicles_[w].length);
      return std::abs(vehicles_[w].s - s) >= need;
    });
    if (!clear) {
      still.push_back(slot);
      continue;
    }
    Route route = router_.route(origin, dest);
    veh.status = VehicleStatus::driving;
    veh.route = std::move(route.lanes);
    veh.route_index = 0;
    veh.lane = origin;
    veh.s = s;
    veh.v = 0.0;
    occ.push_back(slot);
    ++report.injected;
  }
  still.insert(still.end(), pending_.begin() + static_cast<std::ptrdiff_t>(i), pending_.end());
  pending_ = std::move(still);
}

}  // namespace tsim
