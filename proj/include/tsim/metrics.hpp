#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "tsim/demand.hpp"
#include "tsim/engine.hpp"

namespace tsim {

/// Common part of commuting: 2 * sum(min(A, B)) / (sum(A) + sum(B)).
/// Both matrices must share the zone ids. Throws MetricError when both are
/// all zero.
double cpc(const ODMatrix& a, const ODMatrix& b);

/// Root mean square of element-wise differences. Throws MetricError on empty
/// input and ValidationError on a length mismatch.
double rmse(std::span<const double> a, std::span<const double> b);

/// RMSE over all cells of two matrices with the same zone ids, diagonal
/// included.
double rmse(const ODMatrix& a, const ODMatrix& b);

struct SpeedPoint {
  double window_start = 0.0;
  double window_end = 0.0;
  double mean_speed = 0.0;

  friend bool operator==(const SpeedPoint&, const SpeedPoint&) = default;
};

/// Per-road windowed mean speeds; windows sorted and non-overlapping.
struct SpeedSeries {
  std::map<std::string, std::vector<SpeedPoint>> roads;

  std::size_t size() const;
  friend bool operator==(const SpeedSeries&, const SpeedSeries&) = default;
};

/// Groups windows by road and sorts them. Throws ValidationError when two
/// windows of one road overlap.
SpeedSeries speed_series(std::span<const RoadSpeedWindow> windows);

/// RMSE over matched (road, window) entries. The two series must cover the
/// same index set exactly.
double rmse(const SpeedSeries& a, const SpeedSeries& b);

/// Ranks starting at 1; tied values share the average of their ranks.
std::vector<double> average_ranks(std::span<const double> x);

/// Spearman rank correlation with average ranks for ties. Throws
/// MetricError when either input is constant.
double spearman(std::span<const double> x, std::span<const double> y);

/// Travel times of finished trips plus bookkeeping for the rest.
struct TravelTimes {
  std::vector<double> durations;  // finish - depart, finished trips only
  // Every trip due before the horizon that did not arrive, driving or still
  // waiting to enter: horizon - depart.
  std::vector<double> unfinished_elapsed;
  std::size_t unfinished = 0;  // driving at the horizon
  std::size_t unserved = 0;    // never entered the network
  std::size_t dropped = 0;     // no route
};

/// Builds travel times from trip outcomes at simulation time `horizon`.
TravelTimes travel_times(std::span<const TripOutcome> trips, double horizon);

/// Mean duration of finished trips. Throws MetricError when none finished.
double att(const TravelTimes& t);

/// Mean over finished and unfinished trips, where an unfinished trip counts
/// its elapsed time up to the horizon.
double att_penalized(const TravelTimes& t);

}  // namespace tsim
