#include "cli/commands.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <ostream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "tsim/analysis.hpp"
#include "tsim/demand.hpp"
#include "tsim/engine.hpp"
#include "tsim/error.hpp"
#include "tsim/io.hpp"

namespace tsim::cli {

namespace {

double parse_double(const std::string& text, const std::string& what) {
  double x = 0.0;
  const char* end = text.data() + text.size();
  const auto r = std::from_chars(text.data(), end, x);
  if (r.ec != std::errc() || r.ptr != end)
    throw ValidationError(what + ": '" + text + "' is not a number");
  return x;
}

DepartureProfile make_profile(const std::string& kind, const std::string& window,
                              const std::optional<std::string>& peak) {
  const auto [t0, t1] = parse_window(window);
  if (kind == "uniform") {
    if (peak) throw ValidationError("--peak applies only to the peaked profile");
    return DepartureProfile::uniform(t0, t1);
  }
  if (kind == "peaked") {
    if (!peak) throw ValidationError("the peaked profile needs --peak mean:stddev");
    const auto [mean, stddev] = parse_window(*peak);
    return DepartureProfile::peaked(t0, t1, mean, stddev);
  }
  throw ValidationError("unknown departure profile '" + kind + "'");
}

}  // namespace

std::pair<double, double> parse_window(const std::string& text) {
  const auto colon = text.find(':');
  if (colon == std::string::npos) throw ValidationError("expected 'a:b', got '" + text + "'");
  return {parse_double(text.substr(0, colon), "range start"),
          parse_double(text.substr(colon + 1), "range end")};
}

CommandResult build_map(const BuildMapOptions& o) {
  CommandResult result;
  RawNetwork raw = load_raw(o.input);
  result.warnings = raw.warnings;
  const RoadNetwork net = build_network(raw.roads, raw.junctions, o.build);
  save_compiled(o.output, net);
  return result;
}

CommandResult gen_grid(const GenGridOptions& o) {
  save_compiled(o.output, generate_grid(o.rows, o.cols, o.block, o.lanes, o.speed, o.zone_block));
  return {};
}

CommandResult gen_od(const GenOdOptions& o) {
  const RoadNetwork net = load_compiled(o.net);
  const ZoneSet zones = o.zones ? load_zones(*o.zones) : zones_from_hint(net);
  for (const Zone& z : zones)
    for (LaneId l : z.lanes)
      if (l < 0 || static_cast<std::size_t>(l) >= net.lanes.size() ||
          net.lane(l).kind != LaneKind::road)
        throw ValidationError("zone " + std::to_string(z.id) + ": lane " + std::to_string(l) +
                              " is not a road lane of the network");
  ODMatrix od;
  if (o.model == "gravity") {
    od = gravity_od(zones, o.total, o.gamma);
  } else if (o.model == "radiation") {
    // Production proportional to zone mass.
    double mass = 0.0;
    for (const Zone& z : zones) mass += z.mass;
    if (!(mass > 0.0)) throw ValidationError("radiation model: all zone masses are zero");
    std::vector<double> out_trips;
    for (const Zone& z : zones) out_trips.push_back(o.total * z.mass / mass);
    od = radiation_od(zones, out_trips);
  } else {
    throw ValidationError("unknown OD model '" + o.model + "'");
  }
  save_od(o.output, od);
  return {};
}

CommandResult gen_demand(const GenDemandOptions& o) {
  const ODMatrix od = load_od(o.od);
  const RoadNetwork net = load_compiled(o.net);
  const DepartureProfile profile = make_profile(o.profile, o.window, o.peak);
  TripOptions options;
  options.mode_share = o.mode_share;
  const std::vector<Trip> trips = od_to_trips(od, net, profile, o.seed, options);
  save_trips(o.output, trips);
  return {};
}

CommandResult simulate(const SimulateOptions& o, std::ostream& log) {
  RoadNetwork net = load_compiled(o.net);
  const std::vector<Trip> trips = load_trips(o.trips);
  EngineConfig cfg;
  cfg.dt = o.dt;
  cfg.seed = o.seed;
  cfg.threads = o.threads;
  cfg.stats_window = o.stats_window;
  if (o.controller == "fixed") {
    cfg.controller = ControllerKind::fixed;
  } else if (o.controller == "maxpressure") {
    cfg.controller = ControllerKind::max_pressure;
  } else {
    throw ValidationError("unknown controller '" + o.controller + "'");
  }

  Engine engine(std::move(net), cfg);
  engine.add_trips(trips);

  std::ofstream record(o.record, std::ios::binary | std::ios::trunc);
  if (!record) throw std::runtime_error("cannot open " + o.record.string() + " for writing");
  RecordWriter writer(&record, RecordStreamInfo{cfg.dt, engine.time()});
  const SimulationOutput out = engine.run(o.steps, &writer);
  record.close();
  if (out.partial)
    throw std::runtime_error("recording failed after " + std::to_string(out.steps) +
                             " steps: " + out.error);
  save_road_speeds(o.roads, out.road_speeds);

  CommandResult result;
  result.steps = out.steps;
  result.vehicle_updates = out.records;
  result.warnings = engine.warnings();
  log << "simulated " << out.steps << " steps to t=" << out.end_time << ": "
      << engine.count(VehicleStatus::finished) << " finished, "
      << engine.count(VehicleStatus::driving) << " driving, "
      << engine.count(VehicleStatus::waiting) << " waiting, "
      << engine.count(VehicleStatus::dropped) << " dropped\n";
  return result;
}

CommandResult analyze(const AnalyzeOptions& o, std::ostream& log) {
  const RecordStream stream = load_records(o.record);
  const std::vector<RoadSpeedWindow> roads = load_road_speeds(o.roads);
  const std::vector<Trip> trips = load_trips(o.trips);
  AnalysisInputs in;
  in.records = &stream;
  in.road_speeds = roads;
  in.trips = trips;
  if (o.compare_speeds) in.real_speeds = load_road_speeds(*o.compare_speeds);
  if (o.compare_od) in.real_od = load_od(*o.compare_od);
  const Report report = tsim::analyze(in);
  save_report(o.report, report);

  CommandResult result;
  if (stream.truncated)
    result.warnings.push_back("vehicle record stream is truncated; analyzed " +
                              std::to_string(stream.records.size()) + " complete records");
  log << "analyzed " << stream.records.size() << " records: " << report.finished << " of "
      << report.trips << " trips finished";
  if (report.att) log << ", att " << *report.att << " s";
  log << "\n";
  return result;
}

// ---------------------------------------------------------------------------
// bench

BenchScenario parse_scenario(const std::string& text) {
  BenchScenario s;
  const auto x = text.find('x');
  const auto colon = text.find(':');
  if (x == std::string::npos || colon == std::string::npos || colon < x)
    throw ValidationError("scenario must look like RxC:TRIPS, got '" + text + "'");
  auto parse_int = [&](std::string_view part, auto& out) {
    const auto r = std::from_chars(part.data(), part.data() + part.size(), out);
    if (r.ec != std::errc() || r.ptr != part.data() + part.size())
      throw ValidationError("scenario must look like RxC:TRIPS, got '" + text + "'");
  };
  const std::string_view v(text);
  parse_int(v.substr(0, x), s.rows);
  parse_int(v.substr(x + 1, colon - x - 1), s.cols);
  parse_int(v.substr(colon + 1), s.trips);
  if (s.rows < 2 || s.cols < 2) throw ValidationError("scenario grid must be at least 2x2");
  return s;
}

std::vector<BenchRow> run_bench(const BenchOptions& o) {
  if (o.repeats < 1) throw ValidationError("--repeats must be at least 1");
  if (o.scenarios.empty()) throw ValidationError("bench needs at least one --scenario");
  const auto [t0, t1] = parse_window(o.window);
  const DepartureProfile profile = DepartureProfile::uniform(t0, t1);

  std::vector<BenchScenario> scenarios = o.scenarios;
  std::stable_sort(scenarios.begin(), scenarios.end(),
                   [](const BenchScenario& a, const BenchScenario& b) { return a.trips < b.trips; });

  std::vector<BenchRow> rows;
  for (const BenchScenario& sc : scenarios) {
    const RoadNetwork net = generate_grid(sc.rows, sc.cols, o.block, o.lanes, o.speed);
    const std::vector<Trip> trips = random_trips(net, sc.trips, profile, o.seed);
    EngineConfig cfg;
    cfg.dt = o.dt;
    cfg.seed = o.seed;
    cfg.threads = o.threads;

    BenchRow row;
    row.scenario = sc;
    row.repeats = o.repeats;
    for (int r = 0; r < o.repeats; ++r) {
      Engine engine(net, cfg);
      engine.add_trips(trips);
      RecordWriter sink(nullptr, RecordStreamInfo{cfg.dt, engine.time()});
      const auto start = std::chrono::steady_clock::now();
      const SimulationOutput out = engine.run(o.steps, &sink);
      const std::chrono::duration<double> wall = std::chrono::steady_clock::now() - start;
      row.wall_seconds.push_back(wall.count());
      row.vehicle_updates = out.records;
      if (r == 0)
        row.record_hash = sink.hash_hex();
      else if (sink.hash_hex() != row.record_hash)
        row.hashes_agree = false;
    }
    row.mean_wall_seconds = std::accumulate(row.wall_seconds.begin(), row.wall_seconds.end(), 0.0) /
                            static_cast<double>(row.wall_seconds.size());
    row.mean_step_ms = o.steps > 0 ? 1e3 * row.mean_wall_seconds / static_cast<double>(o.steps) : 0.0;
    row.vehicle_updates_per_second =
        row.mean_wall_seconds > 0.0 ? static_cast<double>(row.vehicle_updates) / row.mean_wall_seconds
                                    : 0.0;
    if (!rows.empty() && rows.back().mean_wall_seconds > 0.0)
      row.ratio_to_previous = row.mean_wall_seconds / rows.back().mean_wall_seconds;
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string bench_table_text(const std::vector<BenchRow>& rows) {
  std::ostringstream os;
  os << "grid     trips    repeats  mean_wall_s  step_ms   veh_updates  updates_per_s  ratio  hash\n";
  for (const BenchRow& r : rows) {
    char line[256];
    std::snprintf(line, sizeof line, "%-8s %-8zu %-8d %-12.3f %-9.3f %-12llu %-14.0f %-6.2f %s%s\n",
                  (std::to_string(r.scenario.rows) + "x" + std::to_string(r.scenario.cols)).c_str(),
                  r.scenario.trips, r.repeats, r.mean_wall_seconds, r.mean_step_ms,
                  static_cast<unsigned long long>(r.vehicle_updates), r.vehicle_updates_per_second,
                  r.ratio_to_previous, r.record_hash.c_str(), r.hashes_agree ? "" : " (MISMATCH)");
    os << line;
  }
  return os.str();
}

std::string serialize_bench(const std::vector<BenchRow>& rows, const BenchOptions& o) {
  nlohmann::ordered_json doc;
  const DocumentHeader h = current_header(schema::bench);
  doc["header"] = {{"schema", h.schema}, {"version", h.version}, {"producer", h.producer}};
  doc["steps"] = o.steps;
  doc["dt"] = o.dt;
  doc["threads"] = o.threads;
  doc["seed"] = o.seed;
  nlohmann::ordered_json table = nlohmann::ordered_json::array();
  for (const BenchRow& r : rows) {
    nlohmann::ordered_json j;
    j["grid"] = std::to_string(r.scenario.rows) + "x" + std::to_string(r.scenario.cols);
    j["trips"] = r.scenario.trips;
    j["repeats"] = r.repeats;
    j["wall_seconds"] = r.wall_seconds;
    j["mean_wall_seconds"] = r.mean_wall_seconds;
    j["mean_step_ms"] = r.mean_step_ms;
    j["vehicle_updates"] = r.vehicle_updates;
    j["vehicle_updates_per_second"] = r.vehicle_updates_per_second;
    j["ratio_to_previous"] = r.ratio_to_previous;
    j["record_hash"] = r.record_hash;
    j["hashes_agree"] = r.hashes_agree;
    table.push_back(std::move(j));
  }
  doc["rows"] = std::move(table);
  return doc.dump(2) + "\n";
}

CommandResult bench(const BenchOptions& o, std::ostream& log) {
  const std::vector<BenchRow> rows = run_bench(o);
  log << bench_table_text(rows);
  if (o.output) write_text_file(*o.output, serialize_bench(rows, o));
  CommandResult result;
  for (const BenchRow& r : rows) {
    result.steps += o.steps * static_cast<std::uint64_t>(r.repeats);
    result.vehicle_updates += r.vehicle_updates * static_cast<std::uint64_t>(r.repeats);
    if (!r.hashes_agree)
      result.warnings.push_back("record hashes differ across repeats for " +
                                std::to_string(r.scenario.rows) + "x" +
                                std::to_string(r.scenario.cols) + ":" +
                                std::to_string(r.scenario.trips));
  }
  return result;
}

}  // namespace tsim::cli
