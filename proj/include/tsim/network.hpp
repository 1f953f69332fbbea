#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tsim/geometry.hpp"

namespace tsim {

using LaneId = std::int32_t;
inline constexpr LaneId kNoLane = -1;

// ---------------------------------------------------------------------------
// Raw (first-level) description

struct RawRoad {
  std::string id;
  Polyline polyline;  // meters, local planar frame
  int lane_count = 1;
  double max_speed = 0.0;  // m/s

  friend bool operator==(const RawRoad&, const RawRoad&) = default;
};

struct RawJunction {
  std::string id;
  std::vector<std::string> in_roads;
  std::vector<std::string> out_roads;
  Vec2 position;

  friend bool operator==(const RawJunction&, const RawJunction&) = default;
};

struct RawNetwork {
  std::vector<RawRoad> roads;
  std::vector<RawJunction> junctions;
  std::vector<std::string> warnings;
};

/// Parses a GeoJSON-compatible feature collection. Coordinates are treated as
/// (lon, lat) degrees and projected to a local azimuthal-equidistant frame
/// unless the collection carries `"units": "meters"`.
RawNetwork parse_raw(std::string_view document);

// ---------------------------------------------------------------------------
// Compiled (second-level) network

enum class LaneKind { road, connector };
enum class Restriction { open, closed };
enum class Turn { none, straight, right, left, uturn };

struct Lane {
  LaneId id = kNoLane;
  std::string parent;  // road id or junction id
  LaneKind kind = LaneKind::road;
  Polyline centerline;
  double length = 0.0;
  double max_speed = 0.0;
  std::vector<LaneId> predecessors;
  std::vector<LaneId> successors;
  Restriction restriction = Restriction::open;
  LaneId left = kNoLane;   // lateral neighbors, road lanes only
  LaneId right = kNoLane;
  Turn turn = Turn::none;  // connectors only

  friend bool operator==(const Lane&, const Lane&) = default;
};

struct SignalPhase {
  double duration = 0.0;  // seconds, includes the trailing all-red interval
  double all_red = 0.0;   // seconds at the end of the phase with no green
  std::vector<LaneId> green;  // connector lane ids, sorted

  double green_time() const { return duration - all_red; }

  friend bool operator==(const SignalPhase&, const SignalPhase&) = default;
};

struct SignalProgram {
  std::vector<SignalPhase> phases;
  double offset = 0.0;

  double cycle() const;

  friend bool operator==(const SignalProgram&, const SignalProgram&) = default;
};

struct Road {
  std::string id;
  std::vector<LaneId> lanes;  // leftmost first

  friend bool operator==(const Road&, const Road&) = default;
};

struct Junction {
  std::string id;
  Vec2 position;
  std::vector<LaneId> connectors;
  SignalProgram program;
  bool signalized = false;  // false: single always-green phase

  friend bool operator==(const Junction&, const Junction&) = default;
};

struct RoadNetwork {
  std::vector<Lane> lanes;  // lanes[i].id == i
  std::vector<Road> roads;
  std::vector<Junction> junctions;
  std::map<LaneId, int> zone_hint;

  const Lane& lane(LaneId id) const { return lanes.at(static_cast<std::size_t>(id)); }
  Lane& lane(LaneId id) { return lanes.at(static_cast<std::size_t>(id)); }
  std::optional<std::size_t> find_road(std::string_view id) const;
  std::optional<std::size_t> find_junction(std::string_view id) const;

  friend bool operator==(const RoadNetwork&, const RoadNetwork&) = default;
};

struct BuildOptions {
  double lane_width = 3.5;
  double snap_radius = 5.0;
  bool allow_boundaries = false;
  // Road ends attached to a junction are pulled back this far so connectors
  // get non-degenerate geometry. Never trims more than a quarter of a road.
  double junction_setback = 5.0;
  bool allow_uturns = false;
  // Junctions with fewer incoming approaches are left unsignalized.
  int signal_min_approaches = 3;
  double phase_green = 30.0;
  double phase_all_red = 3.0;
};

RoadNetwork build_network(const std::vector<RawRoad>& roads,
                          const std::vector<RawJunction>& junctions,
                          const BuildOptions& options = {});

/// Raw description of a Manhattan grid, before compilation.
RawNetwork grid_raw(int rows, int cols, double block_length, int lanes_per_direction,
                    double max_speed);

/// Manhattan grid of rows x cols junctions with a pair of opposing roads on
/// every lattice edge. Interior junctions get a signal program; junctions on
/// the grid boundary are unsignalized. Road lanes carry a zone hint grouping
/// `zone_block` x `zone_block` junction cells.
RoadNetwork generate_grid(int rows, int cols, double block_length, int lanes_per_direction,
                          double max_speed, int zone_block = 2);

enum class IssueKind {
  bad_id,
  bad_geometry,
  length_mismatch,
  bad_speed,
  dangling_reference,
  asymmetric_topology,
  bad_connector,
  asymmetric_adjacency,
  bad_road,
  bad_signal,
};

std::string_view to_string(IssueKind kind);

struct Issue {
  std::string entity;  // e.g. "lane 12", "junction J3"
  IssueKind kind;
  std::string message;
};

std::vector<Issue> validate_network(const RoadNetwork& net);

/// Index of the road owning each road lane; connectors map to -1.
std::vector<int> road_of_lane(const RoadNetwork& net);

std::string_view to_string(LaneKind kind);
std::string_view to_string(Restriction r);
std::string_view to_string(Turn t);
LaneKind lane_kind_from_string(std::string_view s);
Restriction restriction_from_string(std::string_view s);
Turn turn_from_string(std::string_view s);

}  // namespace tsim
