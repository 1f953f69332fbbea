#include <algorithm>
#include <cmath>
#include <set>

#include "tsim/error.hpp"
#include "tsim/network.hpp"

namespace tsim {

namespace {

constexpr double kLengthTolerance = 1e-6;

std::string lane_label(LaneId id) { return "lane " + std::to_string(id); }

bool contains(const std::vector<LaneId>& v, LaneId x) {
  return std::find(v.begin(), v.end(), x) != v.end();
}

}  // namespace

std::string_view to_string(IssueKind kind) {
  switch (kind) {
    case IssueKind::bad_id: return "bad_id";
    case IssueKind::bad_geometry: return "bad_geometry";
    case IssueKind::length_mismatch: return "length_mismatch";
    case IssueKind::bad_speed: return "bad_speed";
    case IssueKind::dangling_reference: return "dangling_reference";
    case IssueKind::asymmetric_topology: return "asymmetric_topology";
    case IssueKind::bad_connector: return "bad_connector";
    case IssueKind::asymmetric_adjacency: return "asymmetric_adjacency";
    case IssueKind::bad_road: return "bad_road";
    case IssueKind::bad_signal: return "bad_signal";
  }
  return "unknown";
}

std::string_view to_string(LaneKind kind) {
  return kind == LaneKind::road ? "road" : "junction-connector";
}

std::string_view to_string(Restriction r) { return r == Restriction::open ? "open" : "closed"; }

std::string_view to_string(Turn t) {
  switch (t) {
    case Turn::none: return "none";
    case Turn::straight: return "straight";
    case Turn::right: return "right";
    case Turn::left: return "left";
    case Turn::uturn: return "uturn";
  }
  return "none";
}

LaneKind lane_kind_from_string(std::string_view s) {
  if (s == "road") return LaneKind::road;
  if (s == "junction-connector") return LaneKind::connector;
  throw SchemaError("unknown lane kind '" + std::string(s) + "'");
}

Restriction restriction_from_string(std::string_view s) {
  if (s == "open") return Restriction::open;
  if (s == "closed") return Restriction::closed;
  throw SchemaError("unknown lane restriction '" + std::string(s) + "'");
}

Turn turn_from_string(std::string_view s) {
  for (Turn t : {Turn::none, Turn::straight, Turn::right, Turn::left, Turn::uturn})
    if (to_string(t) == s) return t;
  throw SchemaError("unknown turn '" + std::string(s) + "'");
}

std::vector<Issue> validate_network(const RoadNetwork& net) {
  std::vector<Issue> issues;
  const auto n = static_cast<LaneId>(net.lanes.size());
  auto valid = [n](LaneId id) { return id >= 0 && id < n; };
  auto add = [&](std::string entity, IssueKind kind, std::string msg) {
    issues.push_back({std::move(entity), kind, std::move(msg)});
  };

  for (LaneId i = 0; i < n; ++i) {
    const Lane& lane = net.lanes[static_cast<std::size_t>(i)];
    const std::string label = lane_label(i);
    if (lane.id != i) add(label, IssueKind::bad_id, "lane id does not match its position");
    bool geometry_ok = lane.centerline.size() >= 2;
    for (std::size_t k = 1; k < lane.centerline.size(); ++k)
      if (lane.centerline[k] == lane.centerline[k - 1]) geometry_ok = false;
    if (!geometry_ok) {
      add(label, IssueKind::bad_geometry, "centerline needs >= 2 distinct consecutive points");
    } else if (std::abs(arc_length(lane.centerline) - lane.length) > kLengthTolerance) {
      add(label, IssueKind::length_mismatch, "length differs from centerline arc length");
    }
    if (!(lane.max_speed > 0.0)) add(label, IssueKind::bad_speed, "max_speed must be positive");

    for (LaneId s : lane.successors) {
      if (!valid(s)) {
        add(label, IssueKind::dangling_reference, "successor " + std::to_string(s) + " is absent");
      } else if (!contains(net.lane(s).predecessors, i)) {
        add(label, IssueKind::asymmetric_topology,
            "successor " + std::to_string(s) + " does not list this lane as predecessor");
      }
    }
    for (LaneId p : lane.predecessors) {
      if (!valid(p)) {
        add(label, IssueKind::dangling_reference,
            "predecessor " + std::to_string(p) + " is absent");
      } else if (!contains(net.lane(p).successors, i)) {
        add(label, IssueKind::asymmetric_topology,
            "predecessor " + std::to_string(p) + " does not list this lane as successor");
      }
    }

    if (lane.kind == LaneKind::connector) {
      const bool shape = lane.predecessors.size() == 1 && lane.successors.size() == 1;
      const bool ends_are_roads =
          shape && valid(lane.predecessors[0]) && valid(lane.successors[0]) &&
          net.lane(lane.predecessors[0]).kind == LaneKind::road &&
          net.lane(lane.successors[0]).kind == LaneKind::road;
      if (!ends_are_roads)
        add(label, IssueKind::bad_connector,
            "connector needs exactly one road-lane predecessor and one road-lane successor");
      if (lane.left != kNoLane || lane.right != kNoLane)
        add(label, IssueKind::asymmetric_adjacency, "connectors have no lateral neighbors");
    }

    for (const auto& [side, other, back] :
         {std::tuple{"left", lane.left, &Lane::right}, std::tuple{"right", lane.right, &Lane::left}}) {
      if (other == kNoLane) continue;
      if (!valid(other)) {
        add(label, IssueKind::dangling_reference,
            std::string(side) + " neighbor " + std::to_string(other) + " is absent");
        continue;
      }
      const Lane& o = net.lane(other);
      if (o.*back != i || o.parent != lane.parent || o.kind != LaneKind::road)
        add(label, IssueKind::asymmetric_adjacency,
            std::string(side) + " neighbor " + std::to_string(other) +
                " is not a symmetric neighbor on the same road");
    }
  }

  std::set<LaneId> owned;
  for (const Road& road : net.roads) {
    const std::string label = "road " + road.id;
    if (road.lanes.empty()) add(label, IssueKind::bad_road, "road has no lanes");
    for (LaneId l : road.lanes) {
      if (!valid(l)) {
        add(label, IssueKind::dangling_reference, "lane " + std::to_string(l) + " is absent");
        continue;
      }
      if (!owned.insert(l).second)
        add(label, IssueKind::bad_road, "lane " + std::to_string(l) + " listed twice");
      const Lane& lane = net.lane(l);
      if (lane.kind != LaneKind::road || lane.parent != road.id)
        add(label, IssueKind::bad_road, "lane " + std::to_string(l) + " does not belong here");
    }
  }

  for (const Junction& j : net.junctions) {
    const std::string label = "junction " + j.id;
    std::set<LaneId> connectors;
    for (LaneId c : j.connectors) {
      if (!valid(c)) {
        add(label, IssueKind::dangling_reference, "connector " + std::to_string(c) + " is absent");
        continue;
      }
      if (net.lane(c).kind != LaneKind::connector || net.lane(c).parent != j.id)
        add(label, IssueKind::bad_connector,
            "lane " + std::to_string(c) + " is not a connector of this junction");
      connectors.insert(c);
    }
    if (j.program.phases.empty()) add(label, IssueKind::bad_signal, "signal program has no phases");
    std::set<LaneId> served;
    for (const SignalPhase& p : j.program.phases) {
      if (!(p.duration > 0.0) || p.all_red < 0.0 || !(p.all_red < p.duration))
        add(label, IssueKind::bad_signal, "phase durations must be positive with green time");
      for (LaneId c : p.green) {
        if (!connectors.contains(c))
          add(label, IssueKind::bad_signal,
              "phase greens lane " + std::to_string(c) + " which is not a connector here");
        served.insert(c);
      }
    }
    for (LaneId c : connectors)
      if (!served.contains(c))
        add(label, IssueKind::bad_signal,
            "connector " + std::to_string(c) + " is not green in any phase");
  }

  for (const auto& [lane, zone] : net.zone_hint) {
    if (!valid(lane) || net.lane(lane).kind != LaneKind::road)
      add("zone_hint", IssueKind::dangling_reference,
          "lane " + std::to_string(lane) + " is not a road lane");
  }
  return issues;
}

}  // namespace tsim
