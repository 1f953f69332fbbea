#include "tsim/analysis.hpp"

#include <algorithm>
#include <limits>
#include <map>
#include <unordered_map>

#include "tsim/error.hpp"

namespace tsim {

TravelTimes travel_times_from_records(const RecordStream& stream, std::span<const Trip> trips) {
  struct Seen {
    double first = 0.0;
    double last = 0.0;
  };
  std::unordered_map<std::int64_t, Seen> seen;
  double horizon = stream.info.start_time;
  for (const VehicleRecord& r : stream.records) {
    auto [it, fresh] = seen.try_emplace(r.id, Seen{r.t, r.t});
    if (!fresh) it->second.last = r.t;
    horizon = std::max(horizon, r.t);
  }
  if (stream.t_end) horizon = *stream.t_end;

  TravelTimes out;
  for (const Trip& t : trips) {
    const double depart = stream.info.start_time + t.departure;
    const auto it = seen.find(t.id);
    if (it == seen.end()) {
      ++out.unserved;
      if (depart < horizon) out.unfinished_elapsed.push_back(horizon - depart);
    } else if (it->second.last < horizon) {
      out.durations.push_back(it->second.last + stream.info.dt - depart);
    } else {
      ++out.unfinished;
      out.unfinished_elapsed.push_back(horizon - depart);
    }
  }
  return out;
}

ODMatrix od_from_trips(std::span<const Trip> trips, const ZoneSet& zones) {
  std::unordered_map<LaneId, std::size_t> zone_of;
  for (std::size_t z = 0; z < zones.size(); ++z)
    for (LaneId l : zones[z].lanes) zone_of.try_emplace(l, z);
  ODMatrix od;
  od.zones = zones;
  od.counts.assign(zones.size() * zones.size(), 0.0);
  for (const Trip& t : trips) {
    const auto o = zone_of.find(t.origin_lane);
    const auto d = zone_of.find(t.dest_lane);
    if (o == zone_of.end() || d == zone_of.end()) continue;
    od.at(o->second, d->second) += 1.0;
  }
  return od;
}

Report analyze(const AnalysisInputs& in) {
  if (!in.records) throw ValidationError("analysis needs a vehicle record stream");
  Report r;
  r.trips = in.trips.size();
  const TravelTimes tt = travel_times_from_records(*in.records, in.trips);
  r.finished = tt.durations.size();
  r.unfinished = tt.unfinished;
  r.unserved = tt.unserved;
  if (!tt.durations.empty()) r.att = att(tt);
  if (!tt.durations.empty() || !tt.unfinished_elapsed.empty()) r.att_penalized = att_penalized(tt);

  const SpeedSeries sim = speed_series(in.road_speeds);
  for (const auto& [road, points] : sim.roads) {
    double sum = 0.0;
    for (const SpeedPoint& p : points) sum += p.mean_speed;
    r.roads.push_back(
        RoadSpeedSummary{road, sum / static_cast<double>(points.size()), points.size()});
  }

  if (in.real_speeds) {
    // Restrict both series to their common (road, window) entries.
    const SpeedSeries real = speed_series(*in.real_speeds);
    std::vector<double> a;
    std::vector<double> b;
    for (const auto& [road, points] : sim.roads) {
      const auto it = real.roads.find(road);
      if (it == real.roads.end()) continue;
      std::map<std::pair<double, double>, double> ref;
      for (const SpeedPoint& p : it->second) ref[{p.window_start, p.window_end}] = p.mean_speed;
      for (const SpeedPoint& p : points) {
        const auto m = ref.find({p.window_start, p.window_end});
        if (m == ref.end()) continue;
        a.push_back(p.mean_speed);
        b.push_back(m->second);
      }
    }
    if (a.empty()) throw ValidationError("speed comparison: no (road, window) entries in common");
    r.comparison.speed_rmse = rmse(std::span<const double>(a), std::span<const double>(b));
    try {
      r.comparison.speed_spearman = spearman(a, b);
    } catch (const MetricError&) {
      // Constant series have no rank correlation; leave it absent.
    }
  }

  if (in.real_od) {
    const ODMatrix sim_od = od_from_trips(in.trips, in.real_od->zones);
    r.comparison.od_cpc = cpc(sim_od, *in.real_od);
    r.comparison.od_rmse = rmse(sim_od, *in.real_od);
  }
  return r;
}

}  // namespace tsim
