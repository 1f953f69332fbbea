#pragma once

#include <cstdint>
#include <unordered_map>
#include <vector>

#include "tsim/network.hpp"

namespace tsim {

/// Free-flow traversal time of a lane in integer microseconds (at least 1).
/// Integer costs make equal-cost paths compare exactly.
std::int64_t lane_cost_us(const Lane& lane);

struct Route {
  std::vector<LaneId> lanes;  // origin ... destination, road lanes and connectors
  std::int64_t cost_us = 0;   // sum of lane_cost_us over every lane in `lanes`

  double cost_seconds() const { return static_cast<double>(cost_us) * 1e-6; }
};

/// Minimum free-flow-time lane path from `origin` to `dest` (both road
/// lanes). Among equal-cost paths the lexicographically smallest lane-id
/// sequence wins. Closed lanes are impassable except for the origin.
/// Throws NoRouteError when the destination is unreachable.
Route find_route(const RoadNetwork& net, LaneId origin, LaneId dest);

/// Routing with a per-destination distance cache. Call `invalidate` after
/// any change to lane speeds or restrictions.
class Router {
 public:
  explicit Router(const RoadNetwork& net) : net_(&net) {}

  Route route(LaneId origin, LaneId dest);
  /// Remaining cost from entering `from` to finishing at `dest`; -1 if none.
  std::int64_t cost_to(LaneId from, LaneId dest);
  void invalidate() { cache_.clear(); }

 private:
  const std::vector<std::int64_t>& distances(LaneId dest);

  const RoadNetwork* net_;
  std::unordered_map<LaneId, std::vector<std::int64_t>> cache_;
};

}  // namespace tsim
