#include <cmath>
#include <limits>
#include <map>
#include <set>

#include "tsim/demand.hpp"
#include "tsim/error.hpp"

namespace tsim {

namespace {

void check_zones(const ZoneSet& zones) {
  if (zones.size() < 2) throw ValidationError("OD model needs at least 2 zones");
  std::set<int> ids;
  for (const Zone& z : zones) {
    if (!(z.mass >= 0.0) || !std::isfinite(z.mass))
      throw ValidationError("zone " + std::to_string(z.id) + " has negative or invalid mass");
    if (!ids.insert(z.id).second)
      throw ValidationError("duplicate zone id " + std::to_string(z.id));
  }
}

// Rejects coincident centroids among zones that carry mass.
void check_distances(const ZoneSet& zones) {
  for (std::size_t i = 0; i < zones.size(); ++i)
    for (std::size_t j = i + 1; j < zones.size(); ++j)
      if (zones[i].mass > 0.0 && zones[j].mass > 0.0 &&
          !(distance(zones[i].centroid, zones[j].centroid) > 0.0))
        throw ValidationError("zones " + std::to_string(zones[i].id) + " and " +
                              std::to_string(zones[j].id) +
                              " have coincident centroids (degenerate distance)");
}

}  // namespace

double ODMatrix::total() const {
  double t = 0.0;
  for (double c : counts) t += c;
  return t;
}

ZoneSet zones_from_hint(const RoadNetwork& net) {
  std::map<int, Zone> by_id;
  for (const auto& [lane, zone] : net.zone_hint) {
    Zone& z = by_id[zone];
    z.id = zone;
    z.lanes.push_back(lane);
  }
  ZoneSet out;
  for (auto& [id, z] : by_id) {
    Vec2 sum;
    for (LaneId l : z.lanes) {
      const Lane& lane = net.lane(l);
      sum = sum + point_at(lane.centerline, 0.5 * lane.length);
    }
    z.centroid = (1.0 / static_cast<double>(z.lanes.size())) * sum;
    z.mass = static_cast<double>(z.lanes.size());
    out.push_back(std::move(z));
  }
  return out;
}

ODMatrix gravity_od(const ZoneSet& zones, double total_trips, double gamma) {
  check_zones(zones);
  if (!(total_trips > 0.0)) throw ValidationError("gravity: total_trips must be positive");
  if (!(gamma > 0.0)) throw ValidationError("gravity: gamma must be positive");
  std::size_t massive = 0;
  for (const Zone& z : zones) massive += z.mass > 0.0 ? 1 : 0;
  if (massive == 0) throw ValidationError("gravity: all zone masses are zero");
  if (massive < 2) throw ValidationError("gravity: need at least 2 zones with positive mass");
  check_distances(zones);

  const std::size_t n = zones.size();
  ODMatrix od{zones, std::vector<double>(n * n, 0.0)};
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j || zones[i].mass == 0.0 || zones[j].mass == 0.0) continue;
      const double d = distance(zones[i].centroid, zones[j].centroid);
      const double w = zones[i].mass * zones[j].mass * std::pow(d, -gamma);
      od.at(i, j) = w;
      sum += w;
    }
  if (!(sum > 0.0) || !std::isfinite(sum))
    throw ValidationError("gravity: flow weights underflow or overflow; adjust gamma");
  const double k = total_trips / sum;
  for (double& c : od.counts) c *= k;
  return od;
}

ODMatrix radiation_od(const ZoneSet& zones, const std::vector<double>& out_trips) {
  check_zones(zones);
  const std::size_t n = zones.size();
  if (out_trips.size() != n) throw ValidationError("radiation: out_trips size != zone count");
  for (double t : out_trips)
    if (!(t >= 0.0) || !std::isfinite(t))
      throw ValidationError("radiation: out_trips must be non-negative");
  std::size_t massive = 0;
  for (const Zone& z : zones) massive += z.mass > 0.0 ? 1 : 0;
  if (massive < 2) throw ValidationError("radiation: need at least 2 zones with positive mass");
  check_distances(zones);

  ODMatrix od{zones, std::vector<double>(n * n, 0.0)};
  std::vector<double> row(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (out_trips[i] == 0.0) continue;
    const double mi = zones[i].mass;
    double row_sum = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      row[j] = 0.0;
      if (j == i) continue;
      const double dij = distance(zones[i].centroid, zones[j].centroid);
      // Intervening opportunities: mass strictly inside the disk of radius d_ij.
      double s = 0.0;
      for (std::size_t k = 0; k < n; ++k)
        if (k != i && k != j && distance(zones[i].centroid, zones[k].centroid) < dij)
          s += zones[k].mass;
      const double mj = zones[j].mass;
      const double p = (mi * mj) / ((mi + s) * (mi + mj + s));
      if (!std::isfinite(p)) continue;
      row[j] = p;
      row_sum += p;
    }
    if (!(row_sum > 0.0)) continue;
    for (std::size_t j = 0; j < n; ++j) od.at(i, j) = out_trips[i] * row[j] / row_sum;
  }
  return od;
}

}  // namespace tsim
