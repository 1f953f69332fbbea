#include <algorithm>
#include <set>

#include "json_util.hpp"
#include "tsim/error.hpp"
#include "tsim/io.hpp"

namespace tsim {

using namespace io_detail;

namespace {

ordered_json lane_ids(const std::vector<LaneId>& ids) {
  ordered_json a = ordered_json::array();
  for (LaneId l : ids) a.push_back(l);
  return a;
}

std::vector<LaneId> read_lane_ids(const json& v, const std::string& where) {
  std::vector<LaneId> out;
  const json& a = as_array(v, where);
  for (std::size_t i = 0; i < a.size(); ++i) {
    const std::int64_t id = as_int(a[i], at(where, i));
    if (id < 0 || id > INT32_MAX) throw SchemaError(at(where, i) + ": lane id out of range");
    out.push_back(static_cast<LaneId>(id));
  }
  return out;
}

LaneId read_lane_id(const json& v, const std::string& where) {
  const std::int64_t id = as_int(v, where);
  if (id < 0 || id > INT32_MAX) throw SchemaError(where + ": lane id out of range");
  return static_cast<LaneId>(id);
}

ordered_json optional_lane(LaneId l) { return l == kNoLane ? ordered_json(nullptr) : ordered_json(l); }

LaneId read_optional_lane(const json& v, const std::string& where) {
  return v.is_null() ? kNoLane : read_lane_id(v, where);
}

template <class F>
auto with_context(const std::string& where, F&& f) {
  try {
    return f();
  } catch (const SchemaError& e) {
    throw SchemaError(where + ": " + e.what());
  }
}

ordered_json zone_json(const Zone& z, const std::string& where) {
  ordered_json j;
  j["id"] = z.id;
  j["centroid"] = point({finite(z.centroid.x, where), finite(z.centroid.y, where)});
  j["mass"] = finite(z.mass, where);
  j["lanes"] = lane_ids(z.lanes);
  return j;
}

ZoneSet read_zones(const json& v, const std::string& where) {
  ZoneSet zones;
  std::set<int> ids;
  const json& a = as_array(v, where);
  for (std::size_t i = 0; i < a.size(); ++i) {
    const std::string w = at(where, i);
    const json& zj = as_object(a[i], w);
    Zone z;
    const std::int64_t id = as_int(field(zj, "id", w), dot(w, "id"));
    if (id < INT32_MIN || id > INT32_MAX) throw SchemaError(dot(w, "id") + ": out of range");
    z.id = static_cast<int>(id);
    const std::string wz = where + "[id=" + std::to_string(z.id) + "]";
    if (!ids.insert(z.id).second) throw SchemaError(wz + ": duplicate zone id");
    z.centroid = as_point(field(zj, "centroid", wz), dot(wz, "centroid"));
    z.mass = as_finite(field(zj, "mass", wz), dot(wz, "mass"));
    if (z.mass < 0.0) throw SchemaError(dot(wz, "mass") + ": must be non-negative");
    z.lanes = read_lane_ids(field(zj, "lanes", wz), dot(wz, "lanes"));
    if (z.lanes.empty()) throw SchemaError(dot(wz, "lanes") + ": must not be empty");
    zones.push_back(std::move(z));
  }
  return zones;
}

}  // namespace

// ---------------------------------------------------------------------------
// Raw network

std::string serialize_raw(const RawNetwork& raw) {
  ordered_json doc;
  doc["header"] = header_json(schema::raw_network);
  doc["type"] = "FeatureCollection";
  doc["units"] = "meters";
  ordered_json features = ordered_json::array();
  for (const RawRoad& r : raw.roads) {
    const std::string w = "road '" + r.id + "'";
    ordered_json coords = ordered_json::array();
    for (Vec2 p : r.polyline) coords.push_back(point({finite(p.x, w), finite(p.y, w)}));
    ordered_json f;
    f["type"] = "Feature";
    f["geometry"] = {{"type", "LineString"}, {"coordinates", coords}};
    f["properties"] = {{"id", r.id}, {"lanes", r.lane_count}, {"max_speed", finite(r.max_speed, w)}};
    features.push_back(std::move(f));
  }
  for (const RawJunction& j : raw.junctions) {
    const std::string w = "junction '" + j.id + "'";
    ordered_json f;
    f["type"] = "Feature";
    f["geometry"] = {{"type", "Point"},
                     {"coordinates", point({finite(j.position.x, w), finite(j.position.y, w)})}};
    f["properties"] = {{"id", j.id}, {"in_roads", j.in_roads}, {"out_roads", j.out_roads}};
    features.push_back(std::move(f));
  }
  doc["features"] = std::move(features);
  return dump(doc);
}

RawNetwork deserialize_raw(std::string_view text) {
  const json doc = parse_json(text, "raw network");
  check_header(doc, schema::raw_network, /*optional=*/true);
  return parse_raw(text);
}

// ---------------------------------------------------------------------------
// Compiled network

std::string serialize_compiled(const RoadNetwork& net) {
  ordered_json doc;
  doc["header"] = header_json(schema::network);
  ordered_json lanes = ordered_json::array();
  for (const Lane& l : net.lanes) {
    const std::string w = "lane " + std::to_string(l.id);
    ordered_json j;
    j["id"] = l.id;
    j["parent"] = l.parent;
    j["kind"] = to_string(l.kind);
    ordered_json line = ordered_json::array();
    for (Vec2 p : l.centerline) line.push_back(point({finite(p.x, w), finite(p.y, w)}));
    j["centerline"] = std::move(line);
    j["length"] = finite(l.length, w);
    j["max_speed"] = finite(l.max_speed, w);
    j["predecessors"] = lane_ids(l.predecessors);
    j["successors"] = lane_ids(l.successors);
    j["restriction"] = to_string(l.restriction);
    j["left"] = optional_lane(l.left);
    j["right"] = optional_lane(l.right);
    j["turn"] = to_string(l.turn);
    lanes.push_back(std::move(j));
  }
  doc["lanes"] = std::move(lanes);

  ordered_json roads = ordered_json::array();
  for (const Road& r : net.roads) roads.push_back({{"id", r.id}, {"lanes", lane_ids(r.lanes)}});
  doc["roads"] = std::move(roads);

  ordered_json junctions = ordered_json::array();
  for (const Junction& jn : net.junctions) {
    const std::string w = "junction " + jn.id;
    ordered_json phases = ordered_json::array();
    for (const SignalPhase& ph : jn.program.phases)
      phases.push_back({{"duration", finite(ph.duration, w)},
                        {"all_red", finite(ph.all_red, w)},
                        {"green", lane_ids(ph.green)}});
    ordered_json j;
    j["id"] = jn.id;
    j["position"] = point({finite(jn.position.x, w), finite(jn.position.y, w)});
    j["connectors"] = lane_ids(jn.connectors);
    j["signalized"] = jn.signalized;
    j["program"] = {{"offset", finite(jn.program.offset, w)}, {"phases", std::move(phases)}};
    junctions.push_back(std::move(j));
  }
  doc["junctions"] = std::move(junctions);

  ordered_json hint = ordered_json::array();
  for (const auto& [lane, zone] : net.zone_hint) hint.push_back({lane, zone});
  doc["zone_hint"] = std::move(hint);
  return dump(doc);
}

RoadNetwork deserialize_compiled(std::string_view text) {
  const json doc = parse_json(text, "network");
  check_header(doc, schema::network);
  RoadNetwork net;

  const json& lanes = as_array(field(doc, "lanes", "network"), "lanes");
  for (std::size_t i = 0; i < lanes.size(); ++i) {
    const std::string w = "lanes[" + std::to_string(i) + "]";
    const json& j = as_object(lanes[i], w);
    Lane l;
    l.id = read_lane_id(field(j, "id", w), dot(w, "id"));
    if (static_cast<std::size_t>(l.id) != i)
      throw SchemaError(dot(w, "id") + ": lane ids must equal their array position");
    l.parent = as_string(field(j, "parent", w), dot(w, "parent"));
    const std::string kind = as_string(field(j, "kind", w), dot(w, "kind"));
    l.kind = with_context(dot(w, "kind"), [&] { return lane_kind_from_string(kind); });
    const json& line = as_array(field(j, "centerline", w), dot(w, "centerline"));
    for (std::size_t k = 0; k < line.size(); ++k)
      l.centerline.push_back(as_point(line[k], at(dot(w, "centerline"), k)));
    l.length = as_finite(field(j, "length", w), dot(w, "length"));
    l.max_speed = as_finite(field(j, "max_speed", w), dot(w, "max_speed"));
    l.predecessors = read_lane_ids(field(j, "predecessors", w), dot(w, "predecessors"));
    l.successors = read_lane_ids(field(j, "successors", w), dot(w, "successors"));
    const std::string restriction = as_string(field(j, "restriction", w), dot(w, "restriction"));
    l.restriction =
        with_context(dot(w, "restriction"), [&] { return restriction_from_string(restriction); });
    l.left = read_optional_lane(field(j, "left", w), dot(w, "left"));
    l.right = read_optional_lane(field(j, "right", w), dot(w, "right"));
    const std::string turn = as_string(field(j, "turn", w), dot(w, "turn"));
    l.turn = with_context(dot(w, "turn"), [&] { return turn_from_string(turn); });
    net.lanes.push_back(std::move(l));
  }

  const json& roads = as_array(field(doc, "roads", "network"), "roads");
  for (std::size_t i = 0; i < roads.size(); ++i) {
    const std::string w = at("roads", i);
    const json& j = as_object(roads[i], w);
    Road r;
    r.id = as_string(field(j, "id", w), dot(w, "id"));
    r.lanes = read_lane_ids(field(j, "lanes", w), dot(w, "lanes"));
    net.roads.push_back(std::move(r));
  }

  const json& junctions = as_array(field(doc, "junctions", "network"), "junctions");
  for (std::size_t i = 0; i < junctions.size(); ++i) {
    const std::string w = at("junctions", i);
    const json& j = as_object(junctions[i], w);
    Junction jn;
    jn.id = as_string(field(j, "id", w), dot(w, "id"));
    const std::string wj = "junction '" + jn.id + "'";
    jn.position = as_point(field(j, "position", wj), dot(wj, "position"));
    jn.connectors = read_lane_ids(field(j, "connectors", wj), dot(wj, "connectors"));
    jn.signalized = as_bool(field(j, "signalized", wj), dot(wj, "signalized"));
    const json& prog = as_object(field(j, "program", wj), dot(wj, "program"));
    jn.program.offset = as_finite(field(prog, "offset", wj), dot(wj, "program.offset"));
    const json& phases = as_array(field(prog, "phases", wj), dot(wj, "program.phases"));
    for (std::size_t k = 0; k < phases.size(); ++k) {
      const std::string wp = at(dot(wj, "program.phases"), k);
      const json& pj = as_object(phases[k], wp);
      SignalPhase ph;
      ph.duration = as_finite(field(pj, "duration", wp), dot(wp, "duration"));
      ph.all_red = as_finite(field(pj, "all_red", wp), dot(wp, "all_red"));
      ph.green = read_lane_ids(field(pj, "green", wp), dot(wp, "green"));
      jn.program.phases.push_back(std::move(ph));
    }
    net.junctions.push_back(std::move(jn));
  }

  const json& hint = as_array(field(doc, "zone_hint", "network"), "zone_hint");
  for (std::size_t i = 0; i < hint.size(); ++i) {
    const std::string w = at("zone_hint", i);
    const json& pair = as_array(hint[i], w);
    if (pair.size() != 2) throw SchemaError(w + ": expected [lane, zone]");
    const LaneId lane = read_lane_id(pair[0], at(w, 0));
    const std::int64_t zone = as_int(pair[1], at(w, 1));
    if (zone < INT32_MIN || zone > INT32_MAX) throw SchemaError(at(w, 1) + ": out of range");
    if (!net.zone_hint.emplace(lane, static_cast<int>(zone)).second)
      throw SchemaError(w + ": duplicate lane " + std::to_string(lane));
  }

  const auto issues = validate_network(net);
  if (!issues.empty()) {
    std::string msg = "network fails validation (" + std::to_string(issues.size()) + " issue" +
                      (issues.size() == 1 ? "" : "s") + "): ";
    msg += issues.front().entity + ": " + std::string(to_string(issues.front().kind)) + ": " +
           issues.front().message;
    throw SchemaError(msg);
  }
  return net;
}

// ---------------------------------------------------------------------------
// Zones and OD matrices

std::string serialize_zones(const ZoneSet& zones) {
  ordered_json doc;
  doc["header"] = header_json(schema::zones);
  ordered_json a = ordered_json::array();
  for (const Zone& z : zones) a.push_back(zone_json(z, "zone " + std::to_string(z.id)));
  doc["zones"] = std::move(a);
  return dump(doc);
}

ZoneSet deserialize_zones(std::string_view text) {
  const json doc = parse_json(text, "zones");
  check_header(doc, schema::zones);
  return read_zones(field(doc, "zones", "zones"), "zones");
}

std::string serialize_od(const ODMatrix& od) {
  if (od.counts.size() != od.size() * od.size())
    throw ValidationError("OD matrix count array does not match its zone set");
  ordered_json doc;
  doc["header"] = header_json(schema::od_matrix);
  ordered_json zones = ordered_json::array();
  for (const Zone& z : od.zones) zones.push_back(zone_json(z, "zone " + std::to_string(z.id)));
  doc["zones"] = std::move(zones);
  ordered_json counts = ordered_json::array();
  for (std::size_t k = 0; k < od.counts.size(); ++k)
    counts.push_back(finite(od.counts[k], "counts[" + std::to_string(k) + "]"));
  doc["counts"] = std::move(counts);
  return dump(doc);
}

ODMatrix deserialize_od(std::string_view text) {
  const json doc = parse_json(text, "OD matrix");
  check_header(doc, schema::od_matrix);
  ODMatrix od;
  od.zones = read_zones(field(doc, "zones", "od_matrix"), "zones");
  const json& counts = as_array(field(doc, "counts", "od_matrix"), "counts");
  const std::size_t n = od.zones.size();
  if (counts.size() != n * n)
    throw SchemaError("counts: expected " + std::to_string(n * n) + " entries (row-major " +
                      std::to_string(n) + "x" + std::to_string(n) + "), found " +
                      std::to_string(counts.size()));
  for (std::size_t k = 0; k < counts.size(); ++k) {
    const std::string w = "counts[" + std::to_string(k) + "] (zone " +
                          std::to_string(od.zones[k / n].id) + " -> zone " +
                          std::to_string(od.zones[k % n].id) + ")";
    const double c = as_finite(counts[k], w);
    if (c < 0.0) throw SchemaError(w + ": must be non-negative");
    od.counts.push_back(c);
  }
  return od;
}

// ---------------------------------------------------------------------------
// Trips

std::string serialize_trips(std::span<const Trip> trips) {
  ordered_json doc;
  doc["header"] = header_json(schema::trips);
  ordered_json a = ordered_json::array();
  for (const Trip& t : trips) {
    const std::string w = "trip " + std::to_string(t.id);
    ordered_json j;
    j["id"] = t.id;
    j["origin_lane"] = t.origin_lane;
    j["origin_s"] = finite(t.origin_s, w);
    j["dest_lane"] = t.dest_lane;
    j["departure"] = finite(t.departure, w);
    a.push_back(std::move(j));
  }
  doc["trips"] = std::move(a);
  return dump(doc);
}

std::vector<Trip> deserialize_trips(std::string_view text) {
  const json doc = parse_json(text, "trips");
  check_header(doc, schema::trips);
  const json& a = as_array(field(doc, "trips", "trips"), "trips");
  std::vector<Trip> trips;
  std::set<std::int64_t> ids;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const std::string w0 = at("trips", i);
    const json& j = as_object(a[i], w0);
    Trip t;
    t.id = as_int(field(j, "id", w0), dot(w0, "id"));
    const std::string w = "trip " + std::to_string(t.id);
    if (!ids.insert(t.id).second) throw SchemaError(w + ": duplicate trip id");
    t.origin_lane = read_lane_id(field(j, "origin_lane", w), dot(w, "origin_lane"));
    t.origin_s = as_finite(field(j, "origin_s", w), dot(w, "origin_s"));
    if (t.origin_s < 0.0) throw SchemaError(dot(w, "origin_s") + ": must be non-negative");
    t.dest_lane = read_lane_id(field(j, "dest_lane", w), dot(w, "dest_lane"));
    t.departure = as_finite(field(j, "departure", w), dot(w, "departure"));
    if (t.departure < 0.0) throw SchemaError(dot(w, "departure") + ": must be non-negative");
    trips.push_back(t);
  }
  return trips;
}

// ---------------------------------------------------------------------------
// Road speed windows

std::string serialize_road_speeds(std::span<const RoadSpeedWindow> windows) {
  ordered_json doc;
  doc["header"] = header_json(schema::road_speeds);
  ordered_json a = ordered_json::array();
  for (const RoadSpeedWindow& r : windows) {
    const std::string w = "road " + r.road;
    ordered_json j;
    j["road"] = r.road;
    j["window_start"] = finite(r.window_start, w);
    j["window_end"] = finite(r.window_end, w);
    j["mean_speed"] = finite(r.mean_speed, w);
    a.push_back(std::move(j));
  }
  doc["windows"] = std::move(a);
  return dump(doc);
}

std::vector<RoadSpeedWindow> deserialize_road_speeds(std::string_view text) {
  const json doc = parse_json(text, "road speeds");
  check_header(doc, schema::road_speeds);
  const json& a = as_array(field(doc, "windows", "road_speeds"), "windows");
  std::vector<RoadSpeedWindow> out;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const std::string w = at("windows", i);
    const json& j = as_object(a[i], w);
    RoadSpeedWindow r;
    r.road = as_string(field(j, "road", w), dot(w, "road"));
    r.window_start = as_finite(field(j, "window_start", w), dot(w, "window_start"));
    r.window_end = as_finite(field(j, "window_end", w), dot(w, "window_end"));
    if (!(r.window_start < r.window_end))
      throw SchemaError(w + " (road " + r.road + "): window_start must precede window_end");
    r.mean_speed = as_finite(field(j, "mean_speed", w), dot(w, "mean_speed"));
    if (r.mean_speed < 0.0) throw SchemaError(dot(w, "mean_speed") + ": must be non-negative");
    out.push_back(std::move(r));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Report

namespace {

ordered_json optional_number(const std::optional<double>& x, const std::string& where) {
  return x ? ordered_json(finite(*x, where)) : ordered_json(nullptr);
}

std::optional<double> read_optional_number(const json& obj, std::string_view key,
                                           const std::string& where) {
  const json& v = field(obj, key, where);
  if (v.is_null()) return std::nullopt;
  return as_finite(v, dot(where, key));
}

std::size_t read_count(const json& obj, std::string_view key, const std::string& where) {
  const std::int64_t n = as_int(field(obj, key, where), dot(where, key));
  if (n < 0) throw SchemaError(dot(where, key) + ": must be non-negative");
  return static_cast<std::size_t>(n);
}

}  // namespace

std::string serialize_report(const Report& report) {
  ordered_json doc;
  doc["header"] = header_json(schema::report);
  doc["trips"] = report.trips;
  doc["finished"] = report.finished;
  doc["unfinished"] = report.unfinished;
  doc["unserved"] = report.unserved;
  doc["att"] = optional_number(report.att, "att");
  doc["att_penalized"] = optional_number(report.att_penalized, "att_penalized");
  ordered_json roads = ordered_json::array();
  for (const RoadSpeedSummary& r : report.roads)
    roads.push_back({{"road", r.road},
                     {"mean_speed", finite(r.mean_speed, "road " + r.road)},
                     {"windows", r.windows}});
  doc["roads"] = std::move(roads);
  const Comparison& c = report.comparison;
  doc["comparison"] = {{"speed_rmse", optional_number(c.speed_rmse, "speed_rmse")},
                       {"speed_spearman", optional_number(c.speed_spearman, "speed_spearman")},
                       {"od_cpc", optional_number(c.od_cpc, "od_cpc")},
                       {"od_rmse", optional_number(c.od_rmse, "od_rmse")}};
  return dump(doc);
}

Report deserialize_report(std::string_view text) {
  const json doc = parse_json(text, "report");
  check_header(doc, schema::report);
  Report r;
  r.trips = read_count(doc, "trips", "report");
  r.finished = read_count(doc, "finished", "report");
  r.unfinished = read_count(doc, "unfinished", "report");
  r.unserved = read_count(doc, "unserved", "report");
  r.att = read_optional_number(doc, "att", "report");
  r.att_penalized = read_optional_number(doc, "att_penalized", "report");
  const json& roads = as_array(field(doc, "roads", "report"), "roads");
  for (std::size_t i = 0; i < roads.size(); ++i) {
    const std::string w = at("roads", i);
    const json& j = as_object(roads[i], w);
    RoadSpeedSummary s;
    s.road = as_string(field(j, "road", w), dot(w, "road"));
    s.mean_speed = as_finite(field(j, "mean_speed", w), dot(w, "mean_speed"));
    s.windows = read_count(j, "windows", w);
    r.roads.push_back(std::move(s));
  }
  const json& c = as_object(field(doc, "comparison", "report"), "comparison");
  r.comparison.speed_rmse = read_optional_number(c, "speed_rmse", "comparison");
  r.comparison.speed_spearman = read_optional_number(c, "speed_spearman", "comparison");
  r.comparison.od_cpc = read_optional_number(c, "od_cpc", "comparison");
  r.comparison.od_rmse = read_optional_number(c, "od_rmse", "comparison");
  return r;
}

// ---------------------------------------------------------------------------
// Files

void save_raw(const std::filesystem::path& p, const RawNetwork& raw) {
  write_text_file(p, serialize_raw(raw));
}
RawNetwork load_raw(const std::filesystem::path& p) { return deserialize_raw(read_text_file(p)); }
void save_compiled(const std::filesystem::path& p, const RoadNetwork& net) {
  write_text_file(p, serialize_compiled(net));
}
RoadNetwork load_compiled(const std::filesystem::path& p) {
  return deserialize_compiled(read_text_file(p));
}
void save_zones(const std::filesystem::path& p, const ZoneSet& zones) {
  write_text_file(p, serialize_zones(zones));
}
ZoneSet load_zones(const std::filesystem::path& p) { return deserialize_zones(read_text_file(p)); }
void save_od(const std::filesystem::path& p, const ODMatrix& od) {
  write_text_file(p, serialize_od(od));
}
ODMatrix load_od(const std::filesystem::path& p) { return deserialize_od(read_text_file(p)); }
void save_trips(const std::filesystem::path& p, std::span<const Trip> trips) {
  write_text_file(p, serialize_trips(trips));
}
std::vector<Trip> load_trips(const std::filesystem::path& p) {
  return deserialize_trips(read_text_file(p));
}
void save_road_speeds(const std::filesystem::path& p, std::span<const RoadSpeedWindow> windows) {
  write_text_file(p, serialize_road_speeds(windows));
}
std::vector<RoadSpeedWindow> load_road_speeds(const std::filesystem::path& p) {
  return deserialize_road_speeds(read_text_file(p));
}
void save_report(const std::filesystem::path& p, const Report& report) {
  write_text_file(p, serialize_report(report));
}
Report load_report(const std::filesystem::path& p) { return deserialize_report(read_text_file(p)); }
RecordStream load_records(const std::filesystem::path& p) {
  return deserialize_records(read_text_file(p));
}

}  // namespace tsim
