#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "tsim/error.hpp"
#include "tsim/network.hpp"

namespace tsim {

namespace {

constexpr double kMinConnectorLength = 1e-3;

struct Attachment {
  std::optional<std::size_t> start_junction;  // road listed in out_roads
  std::optional<std::size_t> end_junction;    // road listed in in_roads
};

Turn classify_turn(double angle) {
  const double a = std::abs(angle);
  if (a < 30.0) return Turn::straight;
  if (angle >= 30.0 && angle < 150.0) return Turn::right;
  if (angle <= -30.0 && angle > -150.0) return Turn::left;
  return Turn::uturn;
}

double end_heading(const Polyline& p) { return heading_deg(p[p.size() - 1] - p[p.size() - 2]); }
double start_heading(const Polyline& p) { return heading_deg(p[1] - p[0]); }

struct Movement {
  std::size_t in_road;
  std::size_t out_road;
  Turn turn;
};

// Connector (in lane index, out lane index) pairs for one movement.
std::vector<std::pair<int, int>> lane_pairs(Turn turn, int n_in, int n_out) {
  std::vector<std::pair<int, int>> pairs;
  switch (turn) {
    case Turn::straight:
      for (int i = 0; i < n_in; ++i) pairs.emplace_back(i, std::min(i, n_out - 1));
      break;
    case Turn::right:
      for (int o = 0; o < n_out; ++o) pairs.emplace_back(n_in - 1, o);
      break;
    case Turn::left:
    case Turn::uturn:
      for (int o = 0; o < n_out; ++o) pairs.emplace_back(0, o);
      break;
    case Turn::none:
      break;
  }
  return pairs;
}

}  // namespace

double SignalProgram::cycle() const {
  double total = 0.0;
  for (const auto& p : phases) total += p.duration;
  return total;
}

std::optional<std::size_t> RoadNetwork::find_road(std::string_view id) const {
  for (std::size_t i = 0; i < roads.size(); ++i)
    if (roads[i].id == id) return i;
  return std::nullopt;
}

std::optional<std::size_t> RoadNetwork::find_junction(std::string_view id) const {
  for (std::size_t i = 0; i < junctions.size(); ++i)
    if (junctions[i].id == id) return i;
  return std::nullopt;
}

std::vector<int> road_of_lane(const RoadNetwork& net) {
  std::vector<int> out(net.lanes.size(), -1);
  for (std::size_t r = 0; r < net.roads.size(); ++r)
    for (LaneId l : net.roads[r].lanes) out[static_cast<std::size_t>(l)] = static_cast<int>(r);
  return out;
}

RoadNetwork build_network(const std::vector<RawRoad>& roads,
                          const std::vector<RawJunction>& junctions,
                          const BuildOptions& options) {
  if (!(options.lane_width > 0.0)) throw BuildError("lane_width must be positive");

  std::map<std::string, std::size_t> road_index;
  for (std::size_t i = 0; i < roads.size(); ++i) {
    const RawRoad& r = roads[i];
    if (!road_index.emplace(r.id, i).second) throw BuildError("duplicate road id '" + r.id + "'");
    if (r.polyline.size() < 2 || r.lane_count < 1 || !(r.max_speed > 0.0))
      throw BuildError("road '" + r.id + "' violates RawRoad invariants");
    for (std::size_t k = 1; k < r.polyline.size(); ++k)
      if (r.polyline[k] == r.polyline[k - 1])
        throw BuildError("road '" + r.id + "' has consecutive duplicate points");
  }

  std::vector<Attachment> attach(roads.size());
  for (std::size_t j = 0; j < junctions.size(); ++j) {
    const RawJunction& junction = junctions[j];
    auto lookup = [&](const std::string& id) {
      const auto it = road_index.find(id);
      if (it == road_index.end())
        throw BuildError("junction '" + junction.id + "' references missing road '" + id + "'");
      return it->second;
    };
    for (const auto& id : junction.in_roads) {
      auto& slot = attach[lookup(id)].end_junction;
      if (slot) throw BuildError("road '" + id + "' enters more than one junction");
      slot = j;
    }
    for (const auto& id : junction.out_roads) {
      auto& slot = attach[lookup(id)].start_junction;
      if (slot) throw BuildError("road '" + id + "' leaves more than one junction");
      slot = j;
    }
  }

  // Snap check; detached ends become network boundaries.
  for (std::size_t i = 0; i < roads.size(); ++i) {
    const RawRoad& r = roads[i];
    auto check = [&](std::optional<std::size_t>& slot, Vec2 endpoint) {
      if (!slot) return;
      if (distance(endpoint, junctions[*slot].position) <= options.snap_radius) return;
      if (options.allow_boundaries) {
        slot.reset();
        return;
      }
      throw BuildError("road '" + r.id + "' endpoint is farther than " +
                       std::to_string(options.snap_radius) + " m from junction '" +
                       junctions[*slot].id + "'");
    };
    check(attach[i].start_junction, r.polyline.front());
    check(attach[i].end_junction, r.polyline.back());
  }

  RoadNetwork net;
  std::vector<Polyline> trimmed(roads.size());

  for (std::size_t i = 0; i < roads.size(); ++i) {
    const RawRoad& r = roads[i];
    const double len = arc_length(r.polyline);
    const double cut = std::min(options.junction_setback, 0.25 * len);
    const double head = attach[i].start_junction ? cut : 0.0;
    const double tail = attach[i].end_junction ? cut : 0.0;
    trimmed[i] = (head > 0.0 || tail > 0.0) ? trim_polyline(r.polyline, head, tail) : r.polyline;

    Road road;
    road.id = r.id;
    const int n = r.lane_count;
    for (int k = 0; k < n; ++k) {
      Lane lane;
      lane.id = static_cast<LaneId>(net.lanes.size());
      lane.parent = r.id;
      lane.kind = LaneKind::road;
      lane.centerline =
          offset_polyline(trimmed[i], (k + 0.5 - 0.5 * n) * options.lane_width);
      lane.length = arc_length(lane.centerline);
      lane.max_speed = r.max_speed;
      road.lanes.push_back(lane.id);
      net.lanes.push_back(std::move(lane));
    }
    for (int k = 0; k < n; ++k) {
      Lane& lane = net.lane(road.lanes[static_cast<std::size_t>(k)]);
      if (k > 0) lane.left = road.lanes[static_cast<std::size_t>(k - 1)];
      if (k + 1 < n) lane.right = road.lanes[static_cast<std::size_t>(k + 1)];
    }
    net.roads.push_back(std::move(road));
  }

  std::vector<std::size_t> lane_road(net.lanes.size());
  for (std::size_t r = 0; r < net.roads.size(); ++r)
    for (LaneId l : net.roads[r].lanes) lane_road[static_cast<std::size_t>(l)] = r;

  for (std::size_t j = 0; j < junctions.size(); ++j) {
    const RawJunction& raw = junctions[j];
    Junction junction;
    junction.id = raw.id;
    junction.position = raw.position;

    std::vector<std::size_t> ins;
    std::vector<std::size_t> outs;
    for (const auto& id : raw.in_roads) {
      const std::size_t r = road_index.at(id);
      if (attach[r].end_junction == j) ins.push_back(r);
    }
    for (const auto& id : raw.out_roads) {
      const std::size_t r = road_index.at(id);
      if (attach[r].start_junction == j) outs.push_back(r);
    }

    std::vector<Movement> movements;
    for (std::size_t in : ins) {
      std::vector<Movement> uturns;
      bool any = false;
      for (std::size_t out : outs) {
        const Turn turn = classify_turn(
            turn_angle_deg(end_heading(trimmed[in]), start_heading(trimmed[out])));
        if (turn == Turn::uturn && !options.allow_uturns) {
          uturns.push_back({in, out, turn});
          continue;
        }
        movements.push_back({in, out, turn});
        any = true;
      }
      // A dead end keeps its U-turn so no incoming lane is stranded.
      if (!any) movements.insert(movements.end(), uturns.begin(), uturns.end());
    }

    // (in lane, out lane, turn), deduplicated and ordered deterministically.
    std::map<std::pair<LaneId, LaneId>, Turn> pairs;
    std::map<std::size_t, std::set<int>> served;  // in road -> lane indices with a connector
    for (const Movement& m : movements) {
      const auto& in_lanes = net.roads[m.in_road].lanes;
      const auto& out_lanes = net.roads[m.out_road].lanes;
      for (auto [a, b] : lane_pairs(m.turn, static_cast<int>(in_lanes.size()),
                                    static_cast<int>(out_lanes.size()))) {
        pairs.emplace(std::make_pair(in_lanes[static_cast<std::size_t>(a)],
                                     out_lanes[static_cast<std::size_t>(b)]),
                      m.turn);
        served[m.in_road].insert(a);
      }
    }
    // Lanes left without a movement link to every lane of every target, like
    // a designated turn lane. Index-aligned links here would chain the same
    // lane index around the grid boundary into a closed loop.
    for (const Movement& m : movements) {
      const auto& in_lanes = net.roads[m.in_road].lanes;
      const auto& out_lanes = net.roads[m.out_road].lanes;
      for (int a = 0; a < static_cast<int>(in_lanes.size()); ++a) {
        if (served[m.in_road].contains(a)) continue;
        for (LaneId out : out_lanes)
          pairs.emplace(std::make_pair(in_lanes[static_cast<std::size_t>(a)], out), m.turn);
      }
    }
    if (pairs.empty()) throw BuildError("junction '" + raw.id + "' has no feasible connector");

    std::map<std::size_t, std::vector<LaneId>> by_approach;  // in road -> connectors
    for (const auto& [key, turn] : pairs) {
      const auto [from, to] = key;
      Lane c;
      c.id = static_cast<LaneId>(net.lanes.size());
      c.parent = raw.id;
      c.kind = LaneKind::connector;
      c.turn = turn;
      c.centerline = {net.lane(from).centerline.back(), net.lane(to).centerline.front()};
      c.length = arc_length(c.centerline);
      if (c.length < kMinConnectorLength)
        throw BuildError("junction '" + raw.id + "' produces a degenerate connector");
      c.max_speed = std::min(net.lane(from).max_speed, net.lane(to).max_speed);
      c.predecessors = {from};
      c.successors = {to};
      net.lane(from).successors.push_back(c.id);
      net.lane(to).predecessors.push_back(c.id);
      junction.connectors.push_back(c.id);
      by_approach[lane_road[static_cast<std::size_t>(from)]].push_back(c.id);
      net.lanes.push_back(std::move(c));
    }

    const int approaches = static_cast<int>(by_approach.size());
    if (approaches >= options.signal_min_approaches) {
      junction.signalized = true;
      // Pair approaches whose headings are most nearly opposite.
      std::vector<std::size_t> order;
      for (std::size_t r : ins)
        if (by_approach.contains(r)) order.push_back(r);
      std::vector<bool> used(order.size(), false);
      std::vector<std::vector<std::size_t>> groups;
      for (std::size_t a = 0; a < order.size(); ++a) {
        if (used[a]) continue;
        used[a] = true;
        std::vector<std::size_t> group = {order[a]};
        std::optional<std::size_t> best;
        double best_err = 45.0;
        for (std::size_t b = a + 1; b < order.size(); ++b) {
          if (used[b]) continue;
          const double err = 180.0 - std::abs(turn_angle_deg(end_heading(trimmed[order[a]]),
                                                             end_heading(trimmed[order[b]])));
          if (err <= best_err) {
            best_err = err;
            best = b;
          }
        }
        if (best) {
          used[*best] = true;
          group.push_back(order[*best]);
        }
        groups.push_back(std::move(group));
      }
      for (const auto& group : groups) {
        SignalPhase through;
        SignalPhase left;
        for (std::size_t r : group)
          for (LaneId c : by_approach[r]) {
            const Turn t = net.lane(c).turn;
            (t == Turn::left || t == Turn::uturn ? left : through).green.push_back(c);
          }
        for (SignalPhase* p : {&through, &left}) {
          if (p->green.empty()) continue;
          std::sort(p->green.begin(), p->green.end());
          p->all_red = options.phase_all_red;
          p->duration = options.phase_green + options.phase_all_red;
          junction.program.phases.push_back(std::move(*p));
        }
      }
    } else {
      SignalPhase all;
      all.green = junction.connectors;
      all.duration = options.phase_green;
      all.all_red = 0.0;
      junction.program.phases.push_back(std::move(all));
    }
    net.junctions.push_back(std::move(junction));
  }

  for (Lane& lane : net.lanes) {
    std::sort(lane.successors.begin(), lane.successors.end());
    std::sort(lane.predecessors.begin(), lane.predecessors.end());
  }
  return net;
}

}  // namespace tsim
