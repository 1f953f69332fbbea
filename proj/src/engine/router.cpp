#include "tsim/router.hpp"

#include <cmath>
#include <functional>
#include <limits>
#include <queue>

#include "tsim/error.hpp"

namespace tsim {

namespace {

constexpr std::int64_t kUnreachable = std::numeric_limits<std::int64_t>::max();

void check_road_lane(const RoadNetwork& net, LaneId id, const char* what) {
  if (id < 0 || static_cast<std::size_t>(id) >= net.lanes.size())
    throw LookupError(std::string("router: unknown ") + what + " lane " + std::to_string(id));
  if (net.lane(id).kind != LaneKind::road)
    throw ValidationError(std::string("router: ") + what + " lane " + std::to_string(id) +
                          " is not a road lane");
}

// dist[x] = cost of the cheapest lane sequence that starts by entering x and
// ends at dest, counting x and dest.
std::vector<std::int64_t> reverse_dijkstra(const RoadNetwork& net, LaneId dest) {
  std::vector<std::int64_t> dist(net.lanes.size(), kUnreachable);
  using Item = std::pair<std::int64_t, LaneId>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
  if (net.lane(dest).restriction == Restriction::open) {
    dist[static_cast<std::size_t>(dest)] = lane_cost_us(net.lane(dest));
    heap.emplace(dist[static_cast<std::size_t>(dest)], dest);
  }
  while (!heap.empty()) {
    const auto [d, lane] = heap.top();
    heap.pop();
    if (d != dist[static_cast<std::size_t>(lane)]) continue;
    for (LaneId p : net.lane(lane).predecessors) {
      const Lane& pl = net.lane(p);
      const std::int64_t nd = d + lane_cost_us(pl);
      // Closed predecessors still get a distance so a vehicle standing on a
      // freshly closed lane can be routed off it; they are never traversed.
      if (nd < dist[static_cast<std::size_t>(p)]) {
        dist[static_cast<std::size_t>(p)] = nd;
        if (pl.restriction == Restriction::open) heap.emplace(nd, p);
      }
    }
  }
  return dist;
}

Route walk(const RoadNetwork& net, const std::vector<std::int64_t>& dist, LaneId origin,
           LaneId dest) {
  if (dist[static_cast<std::size_t>(origin)] == kUnreachable)
    throw NoRouteError("no route from lane " + std::to_string(origin) + " to lane " +
                       std::to_string(dest));
  Route route;
  route.cost_us = dist[static_cast<std::size_t>(origin)];
  LaneId at = origin;
  route.lanes.push_back(at);
  while (at != dest) {
    const std::int64_t here = dist[static_cast<std::size_t>(at)] - lane_cost_us(net.lane(at));
    LaneId next = kNoLane;
    for (LaneId s : net.lane(at).successors) {
      if (net.lane(s).restriction != Restriction::open) continue;
      if (dist[static_cast<std::size_t>(s)] == here && (next == kNoLane || s < next)) next = s;
    }
    route.lanes.push_back(next);
    at = next;
  }
  return route;
}

}  // namespace

std::int64_t lane_cost_us(const Lane& lane) {
  return std::max<std::int64_t>(1, std::llround(lane.length / lane.max_speed * 1e6));
}

Route find_route(const RoadNetwork& net, LaneId origin, LaneId dest) {
  check_road_lane(net, origin, "origin");
  check_road_lane(net, dest, "destination");
  return walk(net, reverse_dijkstra(net, dest), origin, dest);
}

const std::vector<std::int64_t>& Router::distances(LaneId dest) {
  auto it = cache_.find(dest);
  if (it == cache_.end()) it = cache_.emplace(dest, reverse_dijkstra(*net_, dest)).first;
  return it->second;
}

Route Router::route(LaneId origin, LaneId dest) {
  check_road_lane(*net_, origin, "origin");
  check_road_lane(*net_, dest, "destination");
  return walk(*net_, distances(dest), origin, dest);
}

std::int64_t Router::cost_to(LaneId from, LaneId dest) {
  const std::int64_t d = distances(dest)[static_cast<std::size_t>(from)];
  return d == kUnreachable ? -1 : d;
}

}  // namespace tsim
