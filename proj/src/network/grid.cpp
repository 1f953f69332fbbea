#include <algorithm>
#include <map>
#include <string>

#include "tsim/error.hpp"
#include "tsim/network.hpp"

namespace tsim {

namespace {

std::string junction_id(int r, int c) { return "J" + std::to_string(r) + "_" + std::to_string(c); }

std::string road_id(int r0, int c0, int r1, int c1) {
  return "R" + std::to_string(r0) + "_" + std::to_string(c0) + "-" + std::to_string(r1) + "_" +
         std::to_string(c1);
}

constexpr double kLaneWidth = 3.5;

}  // namespace

RawNetwork grid_raw(int rows, int cols, double block_length, int lanes_per_direction,
                    double max_speed) {
  if (rows < 2 || cols < 2) throw ValidationError("grid needs rows >= 2 and cols >= 2");
  if (!(block_length > 0.0) || lanes_per_direction < 1 || !(max_speed > 0.0))
    throw ValidationError("grid needs positive block length, lane count and speed");

  RawNetwork raw;
  auto pos = [&](int r, int c) { return Vec2{c * block_length, r * block_length}; };
  const auto index = [cols](int r, int c) { return static_cast<std::size_t>(r * cols + c); };
  raw.junctions.resize(static_cast<std::size_t>(rows * cols));
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      RawJunction& j = raw.junctions[index(r, c)];
      j.id = junction_id(r, c);
      j.position = pos(r, c);
    }

  // Opposing roads sit side by side, each shifted right of the lattice edge.
  const double shift = 0.5 * lanes_per_direction * kLaneWidth;
  auto add_road = [&](int r0, int c0, int r1, int c1) {
    const Vec2 a = pos(r0, c0);
    const Vec2 b = pos(r1, c1);
    const Vec2 dir = (1.0 / distance(a, b)) * (b - a);
    const Vec2 right{dir.y, -dir.x};
    RawRoad road;
    road.id = road_id(r0, c0, r1, c1);
    road.polyline = {a + shift * right, b + shift * right};
    road.lane_count = lanes_per_direction;
    road.max_speed = max_speed;
    raw.junctions[index(r0, c0)].out_roads.push_back(road.id);
    raw.junctions[index(r1, c1)].in_roads.push_back(road.id);
    raw.roads.push_back(std::move(road));
  };
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      if (c + 1 < cols) {
        add_road(r, c, r, c + 1);
        add_road(r, c + 1, r, c);
      }
      if (r + 1 < rows) {
        add_road(r, c, r + 1, c);
        add_road(r + 1, c, r, c);
      }
    }
  return raw;
}

RoadNetwork generate_grid(int rows, int cols, double block_length, int lanes_per_direction,
                          double max_speed, int zone_block) {
  const RawNetwork raw = grid_raw(rows, cols, block_length, lanes_per_direction, max_speed);
  BuildOptions options;
  options.lane_width = kLaneWidth;
  const double shift = 0.5 * lanes_per_direction * kLaneWidth;
  options.snap_radius = std::max(options.snap_radius, shift + 1.0);
  options.junction_setback = lanes_per_direction * kLaneWidth + 3.0;
  options.signal_min_approaches = 4;
  RoadNetwork net = build_network(raw.roads, raw.junctions, options);

  if (zone_block > 0) {
    // A road belongs to the zone of its start junction; build_network keeps
    // raw road order, so raw index == compiled road index.
    std::map<std::string, std::size_t> road_index;
    for (std::size_t i = 0; i < raw.roads.size(); ++i) road_index.emplace(raw.roads[i].id, i);
    const int zone_cols = (cols + zone_block - 1) / zone_block;
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < cols; ++c) {
        const int zone = (r / zone_block) * zone_cols + c / zone_block;
        for (const auto& rid : raw.junctions[static_cast<std::size_t>(r * cols + c)].out_roads)
          for (LaneId l : net.roads[road_index.at(rid)].lanes) net.zone_hint[l] = zone;
      }
  }
  return net;
}

}  // namespace tsim
