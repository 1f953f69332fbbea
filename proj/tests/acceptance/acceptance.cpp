// Acceptance runner: one PASS/FAIL line per headline criterion. Exit status is
// nonzero when any line fails.
//
//   acceptance                  run everything
//   acceptance --only router    run criteria whose name contains "router"
//   acceptance --update-golden  rewrite tests/golden from the current build

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "cli/cli.hpp"
#include "cli/commands.hpp"
#include "support/gen.hpp"
#include "support/oracles.hpp"
#include "support/scenarios.hpp"
#include "tsim/demand.hpp"
#include "tsim/engine.hpp"
#include "tsim/error.hpp"
#include "tsim/executor.hpp"
#include "tsim/io.hpp"
#include "tsim/metrics.hpp"
#include "tsim/router.hpp"

using namespace tsim;
namespace fs = std::filesystem;

namespace {

// Tolerances, fixed here and nowhere else.
constexpr double kGapFloor = -1e-6;          // m
constexpr double kIdmTol = 1e-12;            // m/s^2, absolute
constexpr double kPlatoonTol = 0.01;         // relative
constexpr double kOdTotalTol = 1e-9;         // relative
constexpr double kOdScaleTol = 1e-9;         // absolute per cell, relative above 1
constexpr double kOdHandTol = 1e-9;          // absolute per cell
constexpr double kMetricTol = 1e-12;         // absolute
constexpr double kSignalMargin = 0.0;        // ATT(fixed) - ATT(max pressure) must be >= this
constexpr double kThroughputRatio = 2.5;     // 10k vs 5k mean step time

const fs::path kSource = TSIM_SOURCE_DIR;
const fs::path kFixtures = kSource / "tests" / "fixtures";
const fs::path kGolden = kSource / "tests" / "golden";

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// Criteria ------------------------------------------------------------------

Verdict no_collision() {
  const RoadNetwork net = generate_grid(8, 8, 200, 1, 16.67);
  const auto trips = random_trips(net, 10000, DepartureProfile::uniform(0, 3600), 42);
  EngineConfig cfg;
  cfg.seed = 42;
  cfg.controller = ControllerKind::fixed;
  Engine e(net, cfg);
  e.add_trips(trips);
  double worst = std::numeric_limits<double>::infinity();
  std::size_t violations = 0;
  std::size_t peak = 0;
  for (int t = 0; t < 3600; ++t) {
    const StepReport r = e.step();
    peak = std::max(peak, r.driving);
    const auto vs = e.vehicles();
    for (const auto& lane : e.lane_occupants())
      for (std::size_t k = 1; k < lane.size(); ++k) {
        const VehicleState& lead = vs[lane[k - 1]];
        const VehicleState& follow = vs[lane[k]];
        const double gap = lead.s - lead.length - follow.s;
        worst = std::min(worst, gap);
        if (gap < kGapFloor) ++violations;
      }
  }
  return {violations == 0, fmt("min gap %.4f m, %zu violations, peak %zu driving, %zu finished", worst,
                               violations, peak, e.count(VehicleStatus::finished))};
}

std::uint64_t stream_hash(int threads) {
  const RoadNetwork net = generate_grid(8, 8, 200, 1, 16.67);
  const auto trips = random_trips(net, 5000, DepartureProfile::uniform(0, 1800), 42);
  EngineConfig cfg;
  cfg.seed = 42;
  cfg.threads = threads;
  Engine e(net, cfg);
  e.add_trips(trips);
  RecordWriter writer(nullptr, RecordStreamInfo{cfg.dt, 0.0});
  e.run(1800, &writer);
  return writer.hash();
}

Verdict determinism() {
  const std::uint64_t a = stream_hash(1);
  const std::uint64_t b = stream_hash(1);
  const std::uint64_t c = stream_hash(8);
  return {a == b && a == c, fmt("hashes %016llx %016llx %016llx (1, 1, 8 threads)", (unsigned long long)a,
                                (unsigned long long)b, (unsigned long long)c)};
}

Verdict idm_oracle() {
  test::Gen g(7001);
  double worst = 0.0;
  for (int i = 0; i < 10000; ++i) {
    IdmParams p;
    p.v0 = g.uniform(5, 40);
    p.T = g.uniform(0.5, 3);
    p.a_max = g.uniform(0.3, 4);
    p.b = g.uniform(0.5, 5);
    p.delta = g.coin() ? 4.0 : g.uniform(1, 8);
    p.s0 = g.uniform(0.5, 5);
    const double cap = g.uniform(3, 40);
    const double v = g.uniform(0, std::min(p.v0, cap));
    const double dv = g.uniform(-20, 20);
    const double gap = g.coin(0.1) ? std::numeric_limits<double>::infinity() : g.uniform(0.01, 300);
    worst = std::max(worst, std::abs(idm_accel(v, dv, gap, p, cap) - test::idm_direct(v, dv, gap, p, cap)));
  }
  const test::PlatoonResult platoon = test::run_platoon(25, 250.0, 1500, 1);
  const bool pass = worst <= kIdmTol && platoon.worst_relative_error <= kPlatoonTol;
  return {pass, fmt("max |a - direct| %.3g over 10000 tuples; platoon worst gap error %.3g%% at v_e %.2f m/s",
                    worst, 100.0 * platoon.worst_relative_error, platoon.v_e)};
}

Verdict index_oracle() {
  const RoadNetwork net = generate_grid(3, 3, 150, 2, 12.0);
  test::Gen g(7002);
  Executor one(1);
  Executor four(4);
  int mismatches = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const auto vs = test::random_world(g, net, static_cast<std::size_t>(g.integer(0, 1000)));
    const auto expected = test::sorted_lanes(net.lanes.size(), vs);
    for (Executor* exec : {&one, &four}) {
      const Prepared p = prepare(net.lanes.size(), vs, *exec);
      for (std::size_t l = 0; l < net.lanes.size(); ++l) {
        std::vector<std::int64_t> ids;
        for (Slot s : p.index.on_lane(static_cast<LaneId>(l))) ids.push_back(vs[s].id);
        if (ids != expected[l]) ++mismatches;
      }
    }
  }
  return {mismatches == 0, fmt("%d lane mismatches over 1000 states, 1 and 4 workers", mismatches)};
}

Verdict router_oracle() {
  const RoadNetwork net = generate_grid(5, 5, 200, 1, 16.67);
  std::vector<LaneId> roads;
  for (const Lane& l : net.lanes)
    if (l.kind == LaneKind::road) roads.push_back(l.id);
  test::Gen g(7003);
  int cost_bad = 0;
  int tie_bad = 0;
  for (int pair = 0; pair < 200; ++pair) {
    const LaneId o = g.pick(roads);
    const LaneId d = g.pick(roads);
    const Route r = find_route(net, o, d);
    std::int64_t best = lane_cost_us(net.lane(o));
    if (o != d) {
      const auto dist = test::distances_to(net, d);
      best = -1;
      for (LaneId s : net.lane(o).successors) {
        const std::int64_t ds = dist[static_cast<std::size_t>(s)];
        if (ds >= 0 && (best < 0 || lane_cost_us(net.lane(o)) + ds < best)) best = lane_cost_us(net.lane(o)) + ds;
      }
    }
    if (r.cost_us != best) ++cost_bad;
    if (r.lanes != test::lexmin_route(net, o, d)) ++tie_bad;
  }
  return {cost_bad == 0 && tie_bad == 0,
          fmt("200 pairs: %d cost mismatches, %d tie-break mismatches", cost_bad, tie_bad)};
}

Verdict od_suite() {
  test::Gen g(7004);
  double worst_total = 0.0;
  double worst_scale = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const ZoneSet zones = test::random_zones(g, static_cast<std::size_t>(g.integer(2, 12)));
    const double total = g.uniform(1, 1e6);
    const double gamma = g.uniform(0.5, 3.0);
    const ODMatrix od = gravity_od(zones, total, gamma);
    worst_total = std::max(worst_total, std::abs(od.total() - total) / total);
    ZoneSet scaled = zones;
    const double k = g.uniform(0.01, 100.0);
    for (Zone& z : scaled) z.mass *= k;
    const ODMatrix od2 = gravity_od(scaled, total, gamma);
    for (std::size_t c = 0; c < od.counts.size(); ++c)
      worst_scale = std::max(worst_scale, std::abs(od2.counts[c] - od.counts[c]) / std::max(1.0, od.counts[c]));
  }
  auto zone = [](int id, Vec2 c, double m) { return Zone{id, c, m, {id}}; };
  // Two zones: each row goes entirely to the other zone.
  const ODMatrix two = radiation_od({zone(0, {0, 0}, 2), zone(1, {100, 0}, 5)}, {70, 30});
  const bool two_ok = two.counts == std::vector<double>{0, 70, 30, 0};
  // Three collinear unit masses. From an end zone, s = 0 for the neighbour and
  // s = 1 for the far zone: weights 1/2 and 1/6, normalized to 3/4 and 1/4.
  const ODMatrix three =
      radiation_od({zone(0, {0, 0}, 1), zone(1, {1, 0}, 1), zone(2, {2, 0}, 1)}, {100, 60, 40});
  const std::vector<double> hand = {0, 75, 25, 30, 0, 30, 10, 30, 0};
  double worst_hand = 0.0;
  for (std::size_t c = 0; c < hand.size(); ++c) worst_hand = std::max(worst_hand, std::abs(three.counts[c] - hand[c]));
  const bool pass = worst_total < kOdTotalTol && worst_scale <= kOdScaleTol && two_ok && worst_hand <= kOdHandTol;
  return {pass, fmt("gravity total err %.3g, scaling err %.3g; radiation 2-zone %s, 3-zone err %.3g", worst_total,
                    worst_scale, two_ok ? "exact" : "WRONG", worst_hand)};
}

Verdict metric_suite() {
  auto matrix = [](std::size_t n, std::vector<double> counts) {
    ODMatrix od;
    for (std::size_t i = 0; i < n; ++i) od.zones.push_back(Zone{static_cast<int>(i), {double(i), 0.0}, 1.0, {}});
    od.counts = std::move(counts);
    return od;
  };
  const ODMatrix a = matrix(2, {0, 4, 0, 0});
  const bool self = cpc(a, a) == 1.0;
  const bool disjoint = cpc(matrix(2, {0, 3, 0, 0}), matrix(2, {0, 0, 5, 0})) == 0.0;
  const bool half = cpc(a, matrix(2, {0, 2, 2, 0})) == 0.5;

  test::Gen g(7005);
  double worst_rmse = 0.0;
  double worst_rho = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const auto n = static_cast<std::size_t>(g.integer(2, 60));
    const auto x = test::random_vector(g, n, -100, 100);
    const auto y = test::random_vector(g, n, -100, 100);
    worst_rmse = std::max(worst_rmse, std::abs(rmse(x, y) - test::rmse_two_pass(x, y)));
    const auto tx = test::tied_vector(g, n, g.integer(2, 6));
    const auto ty = g.coin() ? test::tied_vector(g, n, g.integer(2, 6)) : y;
    const bool constant = std::all_of(tx.begin(), tx.end(), [&](double v) { return v == tx[0]; }) ||
                          std::all_of(ty.begin(), ty.end(), [&](double v) { return v == ty[0]; });
    if (constant) continue;
    worst_rho = std::max(worst_rho, std::abs(spearman(tx, ty) - test::spearman_brute(tx, ty)));
  }
  const bool pass = self && disjoint && half && worst_rmse <= kMetricTol && worst_rho <= kMetricTol;
  return {pass, fmt("cpc self %s, disjoint %s, worked 0.5 %s; rmse err %.3g, spearman err %.3g",
                    self ? "1" : "WRONG", disjoint ? "0" : "WRONG", half ? "ok" : "WRONG", worst_rmse, worst_rho)};
}

Verdict signal_check() {
  const RoadNetwork net = generate_grid(4, 4, 200, 1, 16.67);
  double sum_fixed = 0.0;
  double sum_mp = 0.0;
  std::string per_seed;
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const auto trips = random_trips(net, 500, DepartureProfile::uniform(0, 1800), seed);
    double result[2] = {0, 0};
    std::size_t finished[2] = {0, 0};
    int k = 0;
    for (ControllerKind ctrl : {ControllerKind::fixed, ControllerKind::max_pressure}) {
      EngineConfig cfg;
      cfg.seed = seed;
      cfg.controller = ctrl;
      Engine e(net, cfg);
      e.add_trips(trips);
      const SimulationOutput out = e.run(3600);
      const TravelTimes t = travel_times(out.trips, out.end_time);
      result[k] = att(t);
      finished[k] = t.durations.size();
      ++k;
    }
    sum_fixed += result[0];
    sum_mp += result[1];
    per_seed += fmt(" s%llu %.1f/%.1f (%zu/%zu done)", (unsigned long long)seed, result[0], result[1], finished[0],
                    finished[1]);
  }
  const double fixed = sum_fixed / 3.0;
  const double mp = sum_mp / 3.0;
  return {fixed - mp >= kSignalMargin,
          fmt("mean ATT fixed %.1f s, max pressure %.1f s;", fixed, mp) + per_seed};
}

Verdict throughput() {
  cli::BenchOptions o;
  o.scenarios = {cli::parse_scenario("8x8:5000"), cli::parse_scenario("8x8:10000")};
  o.repeats = 3;
  o.steps = 3600;
  o.window = "0:1800";
  o.threads = 0;
  const auto rows = cli::run_bench(o);
  const double ratio = rows[1].mean_step_ms / rows[0].mean_step_ms;
  const bool pass = ratio <= kThroughputRatio && rows[0].hashes_agree && rows[1].hashes_agree &&
                    rows[1].vehicle_updates_per_second > 0.0;
  return {pass, fmt("step ms %.3f -> %.3f, ratio %.3f; %.0f vs %.0f vehicle updates/s", rows[0].mean_step_ms,
                    rows[1].mean_step_ms, ratio, rows[0].vehicle_updates_per_second,
                    rows[1].vehicle_updates_per_second)};
}

// Pipeline golden ---------------------------------------------------------

const std::vector<std::string> kGoldenFiles = {"net.json",   "od.json",    "trips.json",
                                                "rec.jsonl", "roads.json", "report.json"};

// Runs the five-stage pipeline into `dir`; returns an error message or "".
std::string run_pipeline(const fs::path& dir) {
  auto p = [&](const char* name) { return (dir / name).string(); };
  const std::string fx = kFixtures.string();
  const std::vector<std::vector<std::string>> stages = {
      {"build-map", "--input", fx + "/town.geojson", "--output", p("net.json")},
      {"gen-od", "--net", p("net.json"), "--zones", fx + "/town_zones.json", "--model", "gravity", "--total", "40",
       "--gamma", "1.5", "--output", p("od.json")},
      {"gen-demand", "--od", p("od.json"), "--net", p("net.json"), "--window", "0:300", "--seed", "7", "--output",
       p("trips.json")},
      {"simulate", "--net", p("net.json"), "--trips", p("trips.json"), "--steps", "600", "--seed", "7",
       "--stats-window", "120", "--threads", "1", "--record", p("rec.jsonl"), "--roads", p("roads.json")},
      {"analyze", "--record", p("rec.jsonl"), "--roads", p("roads.json"), "--trips", p("trips.json"), "--compare-od",
       p("od.json"), "--compare-speeds", fx + "/town_speeds_ref.json", "--report", p("report.json")},
  };
  for (const auto& args : stages) {
    std::ostringstream out;
    std::ostringstream err;
    const int code = cli::run(args, out, err);
    if (code != cli::kExitOk) return args.front() + " exited " + std::to_string(code) + ": " + err.str();
  }
  return "";
}

fs::path scratch_dir() {
  const fs::path dir = fs::temp_directory_path() / "tsim_acceptance_pipeline";
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

Verdict pipeline_golden() {
  const fs::path dir = scratch_dir();
  const std::string failure = run_pipeline(dir);
  if (!failure.empty()) return {false, failure};
  std::string mismatched;
  for (const std::string& f : kGoldenFiles) {
    const fs::path golden = kGolden / f;
    if (!fs::exists(golden) || read_text_file(golden) != read_text_file(dir / f)) mismatched += " " + f;
  }
  fs::remove_all(dir);
  if (!mismatched.empty()) return {false, "differs from golden:" + mismatched};
  return {true, fmt("%zu files byte-identical", kGoldenFiles.size())};
}

int update_golden() {
  const fs::path dir = scratch_dir();
  const std::string failure = run_pipeline(dir);
  if (!failure.empty()) {
    std::cerr << failure << "\n";
    return 1;
  }
  fs::create_directories(kGolden);
  for (const std::string& f : kGoldenFiles) {
    fs::copy_file(dir / f, kGolden / f, fs::copy_options::overwrite_existing);
    std::cout << "wrote " << (kGolden / f).string() << "\n";
  }
  fs::remove_all(dir);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  std::string only;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--update-golden") return update_golden();
    if (a == "--only" && i + 1 < argc) {
      only = argv[++i];
    } else {
      std::cerr << "usage: acceptance [--only NAME] [--update-golden]\n";
      return 2;
    }
  }

  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria = {
      {"no-collision", no_collision}, {"determinism", determinism},     {"idm-oracle", idm_oracle},
      {"index-oracle", index_oracle}, {"router-oracle", router_oracle}, {"od-suite", od_suite},
      {"metric-suite", metric_suite}, {"signal-check", signal_check},   {"throughput", throughput},
      {"pipeline-golden", pipeline_golden},
  };
  int failed = 0;
  for (const auto& [name, check] : criteria) {
    if (!only.empty() && name.find(only) == std::string::npos) continue;
    const auto start = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = check();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    const std::chrono::duration<double> wall = std::chrono::steady_clock::now() - start;
    if (!v.pass) ++failed;
    std::printf("%s  %-16s %s  [%.1f s]\n", v.pass ? "PASS" : "FAIL", name.c_str(), v.detail.c_str(), wall.count());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
