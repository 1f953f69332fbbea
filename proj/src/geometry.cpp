#include "tsim/geometry.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <numbers>

namespace tsim {

namespace {

constexpr double kEarthRadius = 6371008.8;
constexpr double kMaxMiterFactor = 4.0;

Vec2 unit(Vec2 v) {
  const double n = norm(v);
  return {v.x / n, v.y / n};
}

// Right-hand normal of a direction in a y-up frame.
Vec2 right_normal(Vec2 dir) { return {dir.y, -dir.x}; }

double deg(double rad) { return rad * 180.0 / std::numbers::pi; }
double rad(double deg) { return deg * std::numbers::pi / 180.0; }

}  // namespace

double norm(Vec2 v) { return std::hypot(v.x, v.y); }

double distance(Vec2 a, Vec2 b) { return norm(b - a); }

double arc_length(std::span<const Vec2> line) {
  double total = 0.0;
  for (std::size_t i = 1; i < line.size(); ++i) total += distance(line[i - 1], line[i]);
  return total;
}

Vec2 point_at(std::span<const Vec2> line, double s) {
  assert(!line.empty());
  if (s <= 0.0 || line.size() == 1) return line.front();
  for (std::size_t i = 1; i < line.size(); ++i) {
    const double seg = distance(line[i - 1], line[i]);
    if (s <= seg) {
      const double t = seg > 0.0 ? s / seg : 0.0;
      return line[i - 1] + t * (line[i] - line[i - 1]);
    }
    s -= seg;
  }
  return line.back();
}

double heading_deg(Vec2 d) {
  double h = deg(std::atan2(d.x, d.y));
  if (h < 0.0) h += 360.0;
  if (h >= 360.0) h -= 360.0;
  return h;
}

double heading_deg_at(std::span<const Vec2> line, double s) {
  assert(line.size() >= 2);
  std::size_t seg = 1;
  double acc = 0.0;
  for (; seg + 1 < line.size(); ++seg) {
    const double len = distance(line[seg - 1], line[seg]);
    if (s < acc + len) break;
    acc += len;
  }
  return heading_deg(line[seg] - line[seg - 1]);
}

double turn_angle_deg(double from, double to) {
  double d = std::fmod(to - from, 360.0);
  if (d <= -180.0) d += 360.0;
  if (d > 180.0) d -= 360.0;
  return d;
}

Polyline offset_polyline(std::span<const Vec2> line, double offset) {
  assert(line.size() >= 2);
  Polyline out;
  out.reserve(line.size());
  if (offset == 0.0) {
    out.assign(line.begin(), line.end());
    return out;
  }
  const std::size_t n = line.size();
  out.push_back(line[0] + offset * right_normal(unit(line[1] - line[0])));
  for (std::size_t i = 1; i + 1 < n; ++i) {
    const Vec2 n_in = right_normal(unit(line[i] - line[i - 1]));
    const Vec2 n_out = right_normal(unit(line[i + 1] - line[i]));
    const Vec2 sum = n_in + n_out;
    const double len = norm(sum);
    if (len < 1e-9) {
      // Full reversal; no meaningful miter.
      out.push_back(line[i] + offset * n_in);
      continue;
    }
    const Vec2 miter = unit(sum);
    const double cos_half = miter.x * n_in.x + miter.y * n_in.y;
    const double factor = std::min(1.0 / cos_half, kMaxMiterFactor);
    out.push_back(line[i] + (offset * factor) * miter);
  }
  out.push_back(line[n - 1] + offset * right_normal(unit(line[n - 1] - line[n - 2])));
  return out;
}

Polyline trim_polyline(std::span<const Vec2> line, double from_start, double from_end) {
  const double total = arc_length(line);
  assert(from_start + from_end < total);
  const double begin = from_start;
  const double end = total - from_end;
  Polyline out;
  out.push_back(point_at(line, begin));
  double acc = 0.0;
  for (std::size_t i = 1; i + 1 < line.size(); ++i) {
    acc += distance(line[i - 1], line[i]);
    if (acc > begin && acc < end) out.push_back(line[i]);
  }
  const Vec2 last = point_at(line, end);
  if (!(last == out.back())) out.push_back(last);
  return out;
}

AzimuthalEquidistant::AzimuthalEquidistant(double center_lon_deg, double center_lat_deg)
    : lon0_(rad(center_lon_deg)),
      sin_lat0_(std::sin(rad(center_lat_deg))),
      cos_lat0_(std::cos(rad(center_lat_deg))) {}

Vec2 AzimuthalEquidistant::forward(Vec2 lon_lat) const {
  const double lam = rad(lon_lat.x) - lon0_;
  const double phi = rad(lon_lat.y);
  const double sin_phi = std::sin(phi);
  const double cos_phi = std::cos(phi);
  const double cos_lam = std::cos(lam);
  // Great-circle angular distance via atan2 for stability near the center.
  const double east = cos_phi * std::sin(lam);
  const double north = cos_lat0_ * sin_phi - sin_lat0_ * cos_phi * cos_lam;
  const double cos_c = sin_lat0_ * sin_phi + cos_lat0_ * cos_phi * cos_lam;
  const double sin_c = std::hypot(east, north);
  const double c = std::atan2(sin_c, cos_c);
  if (sin_c < 1e-15) return {0.0, 0.0};
  const double k = kEarthRadius * c / sin_c;
  return {k * east, k * north};
}

}  // namespace tsim
