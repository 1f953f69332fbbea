#pragma once

#include <optional>
#include <span>

#include "tsim/io.hpp"

namespace tsim {

/// Travel times reconstructed from a recorded stream and the trip list. A
/// vehicle last recorded at t finished at t + dt unless t is the end of the
/// record; trips never recorded count as unserved.
TravelTimes travel_times_from_records(const RecordStream& stream, std::span<const Trip> trips);

/// Trip counts between the zones of `zones`, matched through origin and
/// destination lanes. Trips touching lanes outside every zone are skipped.
ODMatrix od_from_trips(std::span<const Trip> trips, const ZoneSet& zones);

struct AnalysisInputs {
  const RecordStream* records = nullptr;
  std::span<const RoadSpeedWindow> road_speeds;
  std::span<const Trip> trips;
  std::optional<std::vector<RoadSpeedWindow>> real_speeds;
  std::optional<ODMatrix> real_od;
};

/// Builds the analysis report. Speed comparisons use the (road, window)
/// entries present in both series; the OD comparison counts the trip list on
/// the reference matrix's zones.
Report analyze(const AnalysisInputs& in);

}  // namespace tsim
