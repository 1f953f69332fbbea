#include <algorithm>
#include <cmath>
#include <numbers>

#include "tsim/demand.hpp"
#include "tsim/error.hpp"
#include "tsim/rng.hpp"

namespace tsim {

namespace {

// Stream tags keep draws for different purposes disjoint.
constexpr std::uint64_t kRoundingOrdinal = ~0ULL;
constexpr std::uint64_t kRandomTripStream = 0x7269707354524950ULL;
constexpr int kMaxPeakRejections = 10000;

double clamp_below(double t, double lo, double hi) {
  if (t >= hi) return std::nextafter(hi, lo);
  return std::max(t, lo);
}

void check_lanes(const Zone& zone, const RoadNetwork& net) {
  if (zone.lanes.empty())
    throw ValidationError("zone " + std::to_string(zone.id) + " has an empty lane set");
  for (LaneId l : zone.lanes)
    if (l < 0 || static_cast<std::size_t>(l) >= net.lanes.size() ||
        net.lane(l).kind != LaneKind::road)
      throw ValidationError("zone " + std::to_string(zone.id) + " lists lane " +
                            std::to_string(l) + " which is not a road lane of the network");
}

void sort_trips(std::vector<Trip>& trips) {
  std::sort(trips.begin(), trips.end(), [](const Trip& a, const Trip& b) {
    return a.departure != b.departure ? a.departure < b.departure : a.id < b.id;
  });
}

}  // namespace

double KeyedRng::normal() {
  const double u1 = 1.0 - uniform();  // (0, 1]
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

DepartureProfile DepartureProfile::uniform(double t_start, double t_end) {
  if (!(t_start < t_end) || t_start < 0.0)
    throw ValidationError("departure window must satisfy 0 <= t_start < t_end");
  return {Kind::uniform, t_start, t_end, 0.0, 0.0};
}

DepartureProfile DepartureProfile::peaked(double t_start, double t_end, double mean,
                                          double stddev) {
  DepartureProfile p = uniform(t_start, t_end);
  if (!(stddev > 0.0)) throw ValidationError("peaked profile needs a positive stddev");
  p.kind = Kind::peaked;
  p.peak_mean = mean;
  p.peak_stddev = stddev;
  return p;
}

double sample_departure(const DepartureProfile& profile, KeyedRng& rng) {
  if (profile.kind == DepartureProfile::Kind::peaked) {
    for (int attempt = 0; attempt < kMaxPeakRejections; ++attempt) {
      const double t = profile.peak_mean + profile.peak_stddev * rng.normal();
      if (t >= profile.t_start && t < profile.t_end) return t;
    }
    // Peak far outside the window; fall back to the window itself.
  }
  return clamp_below(rng.uniform(profile.t_start, profile.t_end), profile.t_start,
                     profile.t_end);
}

std::vector<Trip> od_to_trips(const ODMatrix& od, const RoadNetwork& net,
                              const DepartureProfile& profile, std::uint64_t seed,
                              const TripOptions& options) {
  const std::size_t n = od.size();
  if (od.counts.size() != n * n) throw ValidationError("OD matrix shape mismatch");
  if (!(options.mode_share >= 0.0 && options.mode_share <= 1.0))
    throw ValidationError("mode_share must lie in [0, 1]");
  for (std::size_t i = 0; i < n; ++i) {
    bool used = false;
    for (std::size_t j = 0; j < n; ++j) used = used || od.at(i, j) > 0.0 || od.at(j, i) > 0.0;
    if (used) check_lanes(od.zones[i], net);
  }

  std::vector<Trip> trips;
  std::int64_t next_id = 0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      const double expected = od.at(i, j) * options.mode_share;
      if (!(expected > 0.0)) continue;
      const std::uint64_t cell = i * n + j;
      const double whole = std::floor(expected);
      KeyedRng round_rng(seed, cell, kRoundingOrdinal);
      const auto count =
          static_cast<std::uint64_t>(whole) + (round_rng.uniform() < expected - whole ? 1 : 0);
      const Zone& from = od.zones[i];
      const Zone& to = od.zones[j];
      for (std::uint64_t k = 0; k < count; ++k) {
        KeyedRng rng(seed, cell, k);
        Trip t;
        t.id = next_id++;
        t.origin_lane = from.lanes[rng.below(from.lanes.size())];
        t.origin_s = rng.uniform(0.0, 0.5 * net.lane(t.origin_lane).length);
        t.dest_lane = to.lanes[rng.below(to.lanes.size())];
        t.departure = sample_departure(profile, rng);
        trips.push_back(t);
      }
    }
  sort_trips(trips);
  return trips;
}

std::vector<Trip> random_trips(const RoadNetwork& net, std::size_t count,
                               const DepartureProfile& profile, std::uint64_t seed) {
  const std::vector<int> road = road_of_lane(net);
  std::vector<LaneId> road_lanes;
  for (const Lane& l : net.lanes)
    if (l.kind == LaneKind::road) road_lanes.push_back(l.id);
  if (net.roads.size() < 2) throw ValidationError("random trips need at least two roads");

  std::vector<Trip> trips(count);
  for (std::size_t k = 0; k < count; ++k) {
    KeyedRng rng(seed, kRandomTripStream, k);
    Trip& t = trips[k];
    t.id = static_cast<std::int64_t>(k);
    t.origin_lane = road_lanes[rng.below(road_lanes.size())];
    do {
      t.dest_lane = road_lanes[rng.below(road_lanes.size())];
    } while (road[static_cast<std::size_t>(t.dest_lane)] ==
             road[static_cast<std::size_t>(t.origin_lane)]);
    t.origin_s = rng.uniform(0.0, 0.5 * net.lane(t.origin_lane).length);
    t.departure = sample_departure(profile, rng);
  }
  sort_trips(trips);
  return trips;
}

}  // namespace tsim
