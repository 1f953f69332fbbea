#pragma once

#include <span>
#include <vector>

namespace tsim {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Vec2&, const Vec2&) = default;
};

inline Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
inline Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
inline Vec2 operator*(double k, Vec2 a) { return {k * a.x, k * a.y}; }

double norm(Vec2 v);
double distance(Vec2 a, Vec2 b);

using Polyline = std::vector<Vec2>;

double arc_length(std::span<const Vec2> line);

/// Point on the polyline at arc length `s`, clamped to the ends.
Vec2 point_at(std::span<const Vec2> line, double s);

/// Tangent heading at arc length `s`, in degrees clockwise from north (+y),
/// normalized to [0, 360).
double heading_deg_at(std::span<const Vec2> line, double s);

/// Heading of the vector `d` in degrees clockwise from north, in [0, 360).
double heading_deg(Vec2 d);

/// Signed turn from heading `from` to heading `to`, in (-180, 180].
/// Positive values are clockwise (right turns).
double turn_angle_deg(double from, double to);

/// Parallel offset with miter joins. Positive offsets move to the right of
/// the direction of travel. Miter length is capped at 4x the offset.
Polyline offset_polyline(std::span<const Vec2> line, double offset);

/// Removes `from_start` meters from the head and `from_end` meters from the
/// tail of the polyline. Requires from_start + from_end < arc_length(line).
Polyline trim_polyline(std::span<const Vec2> line, double from_start, double from_end);

/// Local azimuthal-equidistant projection of geographic coordinates
/// (longitude, latitude in degrees) around a fixed center.
class AzimuthalEquidistant {
 public:
  AzimuthalEquidistant(double center_lon_deg, double center_lat_deg);

  /// (lon, lat) in degrees -> (x east, y north) in meters.
  Vec2 forward(Vec2 lon_lat) const;

 private:
  double lon0_;
  double sin_lat0_;
  double cos_lat0_;
};

}  // namespace tsim
