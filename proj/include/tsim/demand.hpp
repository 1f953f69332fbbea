#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "tsim/geometry.hpp"
#include "tsim/network.hpp"
#include "tsim/rng.hpp"

namespace tsim {

struct Zone {
  int id = 0;
  Vec2 centroid;
  double mass = 0.0;
  std::vector<LaneId> lanes;  // road lanes inside the zone

  friend bool operator==(const Zone&, const Zone&) = default;
};

using ZoneSet = std::vector<Zone>;

/// Zones derived from a network's zone hint: centroid is the mean lane
/// midpoint, mass is the number of lanes.
ZoneSet zones_from_hint(const RoadNetwork& net);

struct ODMatrix {
  ZoneSet zones;
  std::vector<double> counts;  // row-major |zones| x |zones|

  std::size_t size() const { return zones.size(); }
  double at(std::size_t i, std::size_t j) const { return counts[i * zones.size() + j]; }
  double& at(std::size_t i, std::size_t j) { return counts[i * zones.size() + j]; }
  double total() const;

  friend bool operator==(const ODMatrix&, const ODMatrix&) = default;
};

struct Trip {
  std::int64_t id = 0;
  LaneId origin_lane = kNoLane;
  double origin_s = 0.0;
  LaneId dest_lane = kNoLane;
  double departure = 0.0;

  friend bool operator==(const Trip&, const Trip&) = default;
};

struct DepartureProfile {
  enum class Kind { uniform, peaked };
  Kind kind = Kind::uniform;
  double t_start = 0.0;
  double t_end = 3600.0;
  double peak_mean = 0.0;
  double peak_stddev = 0.0;

  static DepartureProfile uniform(double t_start, double t_end);
  static DepartureProfile peaked(double t_start, double t_end, double mean, double stddev);
};

/// Power-law gravity model: T_ij = K * m_i * m_j * d_ij^-gamma, i != j,
/// with K chosen so the matrix sums to `total_trips`.
ODMatrix gravity_od(const ZoneSet& zones, double total_trips, double gamma);

/// Radiation model with per-origin production `out_trips`; each row is
/// renormalized to sum to its production over finite destinations.
ODMatrix radiation_od(const ZoneSet& zones, const std::vector<double>& out_trips);

struct TripOptions {
  double mode_share = 1.0;  // fraction of OD flow that travels by car
};

/// Expands an OD matrix into timed trips. Fractional cells are rounded
/// stochastically; every draw is keyed by (seed, cell index, trip ordinal) so
/// the result does not depend on iteration order.
std::vector<Trip> od_to_trips(const ODMatrix& od, const RoadNetwork& net,
                              const DepartureProfile& profile, std::uint64_t seed,
                              const TripOptions& options = {});

/// `count` trips between uniformly chosen road lanes on different roads.
/// Used by benchmark scenarios that specify a trip count rather than a matrix.
std::vector<Trip> random_trips(const RoadNetwork& net, std::size_t count,
                               const DepartureProfile& profile, std::uint64_t seed);

/// Draws a departure time from the profile.
double sample_departure(const DepartureProfile& profile, KeyedRng& rng);

}  // namespace tsim
