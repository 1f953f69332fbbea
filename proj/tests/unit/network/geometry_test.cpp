#include <doctest.h>

#include "support/gen.hpp"
#include "tsim/geometry.hpp"

using namespace tsim;

TEST_CASE("headings are clockwise from north") {
  CHECK(heading_deg({0, 1}) == doctest::Approx(0.0));
  CHECK(heading_deg({1, 0}) == doctest::Approx(90.0));
  CHECK(heading_deg({0, -1}) == doctest::Approx(180.0));
  CHECK(heading_deg({-1, 0}) == doctest::Approx(270.0));
  CHECK(turn_angle_deg(0.0, 90.0) == doctest::Approx(90.0));
  CHECK(turn_angle_deg(90.0, 0.0) == doctest::Approx(-90.0));
  CHECK(turn_angle_deg(350.0, 10.0) == doctest::Approx(20.0));
}

TEST_CASE("point_at clamps and interpolates") {
  const Polyline line = {{0, 0}, {10, 0}, {10, 10}};
  CHECK(arc_length(line) == doctest::Approx(20.0));
  CHECK(point_at(line, -5).x == doctest::Approx(0.0));
  CHECK(point_at(line, 15).y == doctest::Approx(5.0));
  CHECK(point_at(line, 99).y == doctest::Approx(10.0));
  CHECK(heading_deg_at(line, 12) == doctest::Approx(0.0));
}

TEST_CASE("trim_polyline removes the requested lengths") {
  const Polyline line = {{0, 0}, {10, 0}, {10, 10}};
  const Polyline t = trim_polyline(line, 3, 4);
  CHECK(arc_length(t) == doctest::Approx(13.0));
  CHECK(t.front().x == doctest::Approx(3.0));
  CHECK(t.back().y == doctest::Approx(6.0));
}

TEST_CASE("property: offset of a straight segment keeps its length and distance") {
  test::Gen g(5);
  for (int i = 0; i < 200; ++i) {
    const Vec2 a{g.uniform(-100, 100), g.uniform(-100, 100)};
    const Vec2 b{g.uniform(-100, 100), g.uniform(-100, 100)};
    if (distance(a, b) < 1.0) continue;
    const double off = g.uniform(-5, 5);
    const Polyline line = {a, b};
    const Polyline o = offset_polyline(line, off);
    CHECK(arc_length(o) == doctest::Approx(arc_length(line)));
    CHECK(distance(o[0], a) == doctest::Approx(std::abs(off)));
    // Positive offsets go to the right of travel.
    const double cross = (b.x - a.x) * (o[0].y - a.y) - (b.y - a.y) * (o[0].x - a.x);
    if (off > 1e-9) CHECK(cross < 0.0);
  }
}
