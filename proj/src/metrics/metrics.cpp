#include "tsim/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "tsim/error.hpp"

namespace tsim {

namespace {

void check_same_zones(const ODMatrix& a, const ODMatrix& b) {
  if (a.size() != b.size()) throw ValidationError("OD matrices have different zone counts");
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a.zones[i].id != b.zones[i].id)
      throw ValidationError("OD matrices differ at zone position " + std::to_string(i));
  const std::size_t cells = a.size() * a.size();
  if (a.counts.size() != cells || b.counts.size() != cells)
    throw ValidationError("OD matrix count array does not match its zone set");
}

}  // namespace

double cpc(const ODMatrix& a, const ODMatrix& b) {
  check_same_zones(a, b);
  double common = 0.0;
  double sum_a = 0.0;
  double sum_b = 0.0;
  for (std::size_t k = 0; k < a.counts.size(); ++k) {
    common += std::min(a.counts[k], b.counts[k]);
    sum_a += a.counts[k];
    sum_b += b.counts[k];
  }
  const double total = sum_a + sum_b;
  if (!(total > 0.0)) throw MetricError("cpc is undefined for two all-zero matrices");
  return 2.0 * common / total;
}

double rmse(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ValidationError("rmse inputs differ in length");
  if (a.empty()) throw MetricError("rmse of an empty index set");
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    sum += d * d;
  }
  return std::sqrt(sum / static_cast<double>(a.size()));
}

double rmse(const ODMatrix& a, const ODMatrix& b) {
  check_same_zones(a, b);
  return rmse(std::span<const double>(a.counts), std::span<const double>(b.counts));
}

std::size_t SpeedSeries::size() const {
  std::size_t n = 0;
  for (const auto& [_, points] : roads) n += points.size();
  return n;
}

SpeedSeries speed_series(std::span<const RoadSpeedWindow> windows) {
  SpeedSeries out;
  for (const RoadSpeedWindow& w : windows) {
    if (!(w.window_start < w.window_end))
      throw ValidationError("road " + w.road + ": empty speed window");
    out.roads[w.road].push_back(SpeedPoint{w.window_start, w.window_end, w.mean_speed});
  }
  for (auto& [road, points] : out.roads) {
    std::sort(points.begin(), points.end(), [](const SpeedPoint& x, const SpeedPoint& y) {
      return x.window_start < y.window_start;
    });
    for (std::size_t i = 1; i < points.size(); ++i)
      if (points[i].window_start < points[i - 1].window_end)
        throw ValidationError("road " + road + ": overlapping speed windows");
  }
  return out;
}

double rmse(const SpeedSeries& a, const SpeedSeries& b) {
  std::vector<double> xa;
  std::vector<double> xb;
  if (a.roads.size() != b.roads.size())
    throw ValidationError("speed series cover different road sets");
  for (const auto& [road, pa] : a.roads) {
    const auto it = b.roads.find(road);
    if (it == b.roads.end()) throw ValidationError("road " + road + " missing from one series");
    const auto& pb = it->second;
    if (pa.size() != pb.size())
      throw ValidationError("road " + road + ": series have different windows");
    for (std::size_t i = 0; i < pa.size(); ++i) {
      if (pa[i].window_start != pb[i].window_start || pa[i].window_end != pb[i].window_end)
        throw ValidationError("road " + road + ": series have different windows");
      xa.push_back(pa[i].mean_speed);
      xb.push_back(pb[i].mean_speed);
    }
  }
  return rmse(std::span<const double>(xa), std::span<const double>(xb));
}

std::vector<double> average_ranks(std::span<const double> x) {
  std::vector<std::size_t> order(x.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t i, std::size_t j) { return x[i] < x[j]; });
  std::vector<double> ranks(x.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i + 1;
    while (j < order.size() && x[order[j]] == x[order[i]]) ++j;
    // Positions i..j-1 hold ranks i+1..j.
    const double rank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) ranks[order[k]] = rank;
    i = j;
  }
  return ranks;
}

double spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw ValidationError("spearman inputs differ in length");
  if (x.size() < 2) throw MetricError("spearman needs at least two observations");
  const std::vector<double> rx = average_ranks(x);
  const std::vector<double> ry = average_ranks(y);
  const double n = static_cast<double>(x.size());
  const double mean = (n + 1.0) / 2.0;  // average ranks always sum to n(n+1)/2
  double sxy = 0.0;
  double sxx = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    const double dx = rx[i] - mean;
    const double dy = ry[i] - mean;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) throw MetricError("spearman is undefined for a constant input");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

TravelTimes travel_times(std::span<const TripOutcome> trips, double horizon) {
  TravelTimes out;
  for (const TripOutcome& t : trips) {
    switch (t.status) {
      case VehicleStatus::finished:
        out.durations.push_back(*t.finish_time - t.depart_time);
        break;
      case VehicleStatus::driving:
        ++out.unfinished;
        out.unfinished_elapsed.push_back(horizon - t.depart_time);
        break;
      case VehicleStatus::waiting:
        ++out.unserved;
        if (t.depart_time < horizon) out.unfinished_elapsed.push_back(horizon - t.depart_time);
        break;
      case VehicleStatus::dropped:
        ++out.dropped;
        break;
    }
  }
  return out;
}

double att(const TravelTimes& t) {
  if (t.durations.empty()) throw MetricError("att is undefined without finished trips");
  return std::accumulate(t.durations.begin(), t.durations.end(), 0.0) /
         static_cast<double>(t.durations.size());
}

double att_penalized(const TravelTimes& t) {
  const std::size_t n = t.durations.size() + t.unfinished_elapsed.size();
  if (n == 0) throw MetricError("att is undefined without any departed trip");
  const double sum = std::accumulate(t.durations.begin(), t.durations.end(), 0.0) +
                     std::accumulate(t.unfinished_elapsed.begin(), t.unfinished_elapsed.end(), 0.0);
  return sum / static_cast<double>(n);
}

}  // namespace tsim
