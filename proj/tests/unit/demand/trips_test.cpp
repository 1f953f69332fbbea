#include <doctest.h>

#include <algorithm>
#include <set>

#include "support/gen.hpp"
#include "tsim/demand.hpp"
#include "tsim/error.hpp"
#include "tsim/rng.hpp"

using namespace tsim;

namespace {

const RoadNetwork& grid() {
  static const RoadNetwork net = generate_grid(4, 4, 200, 1, 16.67);
  return net;
}

ODMatrix two_zone_od(double a, double b) {
  ZoneSet zones = zones_from_hint(grid());
  zones.resize(2);
  ODMatrix od;
  od.zones = zones;
  od.counts = {0, a, b, 0};
  return od;
}

}  // namespace

TEST_CASE("KeyedRng draws are pure functions of their keys") {
  KeyedRng a(42, 1, 2);
  KeyedRng b(42, 1, 2);
  KeyedRng c(42, 2, 1);
  bool differs = false;
  for (int i = 0; i < 100; ++i) {
    const double x = a.uniform();
    CHECK(x == b.uniform());
    CHECK(x >= 0.0);
    CHECK(x < 1.0);
    differs |= x != c.uniform();
  }
  CHECK(differs);
}

TEST_CASE("zones_from_hint covers the hinted lanes") {
  const ZoneSet zones = zones_from_hint(grid());
  CHECK(zones.size() == 4);
  std::size_t lanes = 0;
  for (const Zone& z : zones) {
    CHECK(!z.lanes.empty());
    CHECK(z.mass == static_cast<double>(z.lanes.size()));
    lanes += z.lanes.size();
  }
  CHECK(lanes == grid().zone_hint.size());
}

TEST_CASE("integer matrix yields exactly its total for any seed") {
  const ODMatrix od = two_zone_od(3, 2);
  for (std::uint64_t seed : {1ULL, 2ULL, 99ULL, 123456789ULL}) {
    const auto trips = od_to_trips(od, grid(), DepartureProfile::uniform(0, 3600), seed);
    CHECK(trips.size() == 5);
    int forward = 0;
    for (const Trip& t : trips)
      forward += std::count(od.zones[0].lanes.begin(), od.zones[0].lanes.end(), t.origin_lane) > 0;
    CHECK(forward == 3);
  }
}

TEST_CASE("fractional cells round stochastically to the right mean") {
  const ODMatrix od = two_zone_od(2.5, 0);
  double sum = 0.0;
  const int seeds = 10000;
  for (int s = 0; s < seeds; ++s)
    sum += static_cast<double>(od_to_trips(od, grid(), DepartureProfile::uniform(0, 100), s).size());
  // Bernoulli(0.5) standard error over 1e4 draws is 0.005; allow 5 sigma.
  CHECK(std::abs(sum / seeds - 2.5) < 0.025);
}

TEST_CASE("uniform departures pass a chi-square flatness test") {
  // Pooled over seeds so the verdict is not hostage to one draw.
  const ODMatrix od = two_zone_od(1200, 800);
  std::vector<double> bins(36, 0.0);
  double n = 0.0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto trips = od_to_trips(od, grid(), DepartureProfile::uniform(0, 3600), seed);
    REQUIRE(trips.size() == 2000);
    for (const Trip& t : trips) bins[static_cast<std::size_t>(t.departure / 100.0)] += 1.0;
    n += static_cast<double>(trips.size());
  }
  const double expected = n / 36.0;
  double chi2 = 0.0;
  for (double b : bins) chi2 += (b - expected) * (b - expected) / expected;
  // 35 degrees of freedom, p = 0.001 critical value.
  CHECK(chi2 < 66.619);
}

TEST_CASE("property: trips satisfy their invariants and the output is pure") {
  test::Gen g(3);
  const RoadNetwork& net = grid();
  const ZoneSet zones = zones_from_hint(net);
  for (int trial = 0; trial < 20; ++trial) {
    const ODMatrix od = test::random_od(g, zones, 0.8, 20.0);
    const double t0 = g.uniform(0, 1000);
    const double t1 = t0 + g.uniform(1, 3000);
    const DepartureProfile profile =
        g.coin() ? DepartureProfile::uniform(t0, t1)
                 : DepartureProfile::peaked(t0, t1, g.uniform(t0, t1), g.uniform(10, 2000));
    const std::uint64_t seed = g.engine()();
    const auto trips = od_to_trips(od, net, profile, seed);
    CHECK(trips == od_to_trips(od, net, profile, seed));
    std::set<std::int64_t> ids;
    for (std::size_t k = 0; k < trips.size(); ++k) {
      const Trip& t = trips[k];
      CHECK(ids.insert(t.id).second);
      CHECK(t.departure >= t0);
      CHECK(t.departure < t1);
      CHECK(t.origin_s >= 0.0);
      CHECK(t.origin_s <= 0.5 * net.lane(t.origin_lane).length);
      CHECK(net.lane(t.dest_lane).kind == LaneKind::road);
      if (k > 0) {
        const Trip& p = trips[k - 1];
        CHECK((p.departure < t.departure || (p.departure == t.departure && p.id < t.id)));
      }
    }
  }
}

TEST_CASE("mode share thins the matrix") {
  const ODMatrix od = two_zone_od(1000, 1000);
  TripOptions half;
  half.mode_share = 0.5;
  const auto trips = od_to_trips(od, grid(), DepartureProfile::uniform(0, 3600), 7, half);
  CHECK(trips.size() == 1000);
}

TEST_CASE("od_to_trips names a zone without lanes") {
  ODMatrix od = two_zone_od(1, 1);
  od.zones[1].lanes.clear();
  try {
    od_to_trips(od, grid(), DepartureProfile::uniform(0, 10), 1);
    FAIL("expected a validation error");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("zone " + std::to_string(od.zones[1].id)) != std::string::npos);
  }
}

TEST_CASE("departure profiles validate their windows") {
  CHECK_THROWS_AS(DepartureProfile::uniform(10, 10), ValidationError);
  CHECK_THROWS_AS(DepartureProfile::peaked(0, 10, 5, 0), ValidationError);
}

TEST_CASE("random_trips pairs lanes of different roads") {
  const auto owner = road_of_lane(grid());
  const auto trips = random_trips(grid(), 500, DepartureProfile::uniform(0, 1800), 9);
  CHECK(trips.size() == 500);
  for (const Trip& t : trips)
    CHECK(owner[static_cast<std::size_t>(t.origin_lane)] != owner[static_cast<std::size_t>(t.dest_lane)]);
  CHECK(trips == random_trips(grid(), 500, DepartureProfile::uniform(0, 1800), 9));
}
