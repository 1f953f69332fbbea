#pragma once

// Independent reference computations. None of these call into the code they
// check beyond plain data accessors.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <span>
#include <vector>

#include "tsim/engine.hpp"
#include "tsim/models.hpp"
#include "tsim/network.hpp"
#include "tsim/router.hpp"

namespace tsim::test {

/// IDM acceleration written out term by term.
inline double idm_direct(double v, double dv, double gap, const IdmParams& p, double cap) {
  const double v0 = p.v0 < cap ? p.v0 : cap;
  const double dynamic = v * p.T + (v * dv) / (2.0 * std::sqrt(p.a_max * p.b));
  const double s_star = p.s0 + (dynamic > 0.0 ? dynamic : 0.0);
  const double free_term = std::pow(v / v0, p.delta);
  const double interaction = std::isinf(gap) ? 0.0 : (s_star / gap) * (s_star / gap);
  return p.a_max * (1.0 - free_term - interaction);
}

/// Closed-form equilibrium gap of a homogeneous platoon at speed v.
inline double idm_equilibrium_direct(double v, const IdmParams& p, double cap) {
  const double v0 = std::min(p.v0, cap);
  const double s_star = p.s0 + v * p.T;
  return s_star / std::sqrt(1.0 - std::pow(v / v0, p.delta));
}

/// Per-lane driving vehicles sorted front first, ties by ascending id.
inline std::vector<std::vector<std::int64_t>> sorted_lanes(std::size_t lane_count,
                                                           std::span<const VehicleState> vs) {
  std::vector<std::vector<const VehicleState*>> per(lane_count);
  for (const VehicleState& v : vs)
    if (v.status == VehicleStatus::driving) per[static_cast<std::size_t>(v.lane)].push_back(&v);
  std::vector<std::vector<std::int64_t>> out(lane_count);
  for (std::size_t l = 0; l < lane_count; ++l) {
    std::sort(per[l].begin(), per[l].end(), [](const VehicleState* a, const VehicleState* b) {
      if (a->s != b->s) return a->s > b->s;
      return a->id < b->id;
    });
    for (const VehicleState* v : per[l]) out[l].push_back(v->id);
  }
  return out;
}

/// Bellman-Ford distances to `dest` in lane_cost_us units, counting every lane
/// on the path including the destination. Closed lanes never relay.
inline std::vector<std::int64_t> distances_to(const RoadNetwork& net, LaneId dest) {
  constexpr std::int64_t inf = std::numeric_limits<std::int64_t>::max() / 4;
  std::vector<std::int64_t> d(net.lanes.size(), inf);
  d[static_cast<std::size_t>(dest)] = lane_cost_us(net.lane(dest));
  for (std::size_t round = 0; round < net.lanes.size(); ++round) {
    bool changed = false;
    for (const Lane& l : net.lanes) {
      for (LaneId s : l.successors) {
        const auto si = static_cast<std::size_t>(s);
        if (d[si] >= inf || net.lane(s).restriction == Restriction::closed) continue;
        const std::int64_t c = lane_cost_us(l) + d[si];
        if (c < d[static_cast<std::size_t>(l.id)]) {
          d[static_cast<std::size_t>(l.id)] = c;
          changed = true;
        }
      }
    }
    if (!changed) break;
  }
  for (auto& x : d)
    if (x >= inf) x = -1;
  return d;
}

/// Lexicographically smallest optimal lane sequence, built greedily from the
/// Bellman-Ford distances. Empty when unreachable.
inline std::vector<LaneId> lexmin_route(const RoadNetwork& net, LaneId origin, LaneId dest) {
  const auto d = distances_to(net, dest);
  if (d[static_cast<std::size_t>(origin)] < 0) return {};
  std::vector<LaneId> path{origin};
  LaneId cur = origin;
  while (cur != dest) {
    const std::int64_t remaining = d[static_cast<std::size_t>(cur)] - lane_cost_us(net.lane(cur));
    LaneId best = kNoLane;
    for (LaneId s : net.lane(cur).successors) {
      if (net.lane(s).restriction == Restriction::closed) continue;
      if (d[static_cast<std::size_t>(s)] == remaining && (best == kNoLane || s < best)) best = s;
    }
    path.push_back(best);
    cur = best;
  }
  return path;
}

/// Ranks by pairwise counting: 1 + #smaller + (#equal - 1) / 2.
inline std::vector<double> brute_ranks(std::span<const double> x) {
  std::vector<double> r(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    double less = 0.0;
    double equal = 0.0;
    for (double y : x) {
      if (y < x[i]) less += 1.0;
      if (y == x[i]) equal += 1.0;
    }
    r[i] = 1.0 + less + (equal - 1.0) / 2.0;
  }
  return r;
}

inline double pearson_two_pass(std::span<const double> a, std::span<const double> b) {
  const double n = static_cast<double>(a.size());
  double ma = 0.0;
  double mb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= n;
  mb /= n;
  double sab = 0.0;
  double saa = 0.0;
  double sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

inline double spearman_brute(std::span<const double> x, std::span<const double> y) {
  const auto rx = brute_ranks(x);
  const auto ry = brute_ranks(y);
  return pearson_two_pass(rx, ry);
}

inline double rmse_two_pass(std::span<const double> a, std::span<const double> b) {
  std::vector<double> sq(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) sq[i] = (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(std::accumulate(sq.begin(), sq.end(), 0.0) / static_cast<double>(sq.size()));
}

/// Smallest bumper-to-bumper gap between consecutive vehicles on any lane.
inline double min_lane_gap(const Engine& e) {
  double worst = std::numeric_limits<double>::infinity();
  const auto vs = e.vehicles();
  for (const auto& lane : e.lane_occupants())
    for (std::size_t k = 1; k < lane.size(); ++k) {
      const VehicleState& lead = vs[lane[k - 1]];
      const VehicleState& follow = vs[lane[k]];
      worst = std::min(worst, lead.s - lead.length - follow.s);
    }
  return worst;
}

}  // namespace tsim::test
