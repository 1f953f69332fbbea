#include <algorithm>
#include <limits>
#include <set>

#include <nlohmann/json.hpp>

#include "tsim/error.hpp"
#include "tsim/network.hpp"

namespace tsim {

namespace {

using nlohmann::json;

std::string line_context(std::string_view doc, std::size_t byte) {
  byte = std::min(byte, doc.size());
  std::size_t line = 1;
  std::size_t col = 1;
  for (std::size_t i = 0; i < byte; ++i) {
    if (doc[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

std::string feature_label(const json& feature, std::size_t index) {
  const auto props = feature.find("properties");
  if (props != feature.end() && props->is_object()) {
    const auto id = props->find("id");
    if (id != props->end() && id->is_string()) return "feature '" + id->get<std::string>() + "'";
  }
  return "feature #" + std::to_string(index);
}

const json& require(const json& obj, const char* key, const std::string& label) {
  const auto it = obj.find(key);
  if (it == obj.end()) throw SchemaError(label + ": missing required property '" + key + "'");
  return *it;
}

Vec2 read_coord(const json& c, const std::string& label) {
  if (!c.is_array() || c.size() < 2 || !c[0].is_number() || !c[1].is_number())
    throw SchemaError(label + ": coordinate must be an array [x, y]");
  return {c[0].get<double>(), c[1].get<double>()};
}

std::vector<std::string> read_string_list(const json& v, const std::string& label,
                                          const char* key) {
  if (!v.is_array()) throw SchemaError(label + ": '" + key + "' must be an array of road ids");
  std::vector<std::string> out;
  for (const auto& e : v) {
    if (!e.is_string()) throw SchemaError(label + ": '" + key + "' must contain strings");
    out.push_back(e.get<std::string>());
  }
  return out;
}

const std::set<std::string> kRoadProps = {"id", "lanes", "max_speed"};
const std::set<std::string> kJunctionProps = {"id", "in_roads", "out_roads"};

}  // namespace

RawNetwork parse_raw(std::string_view document) {
  json doc;
  try {
    doc = json::parse(document.begin(), document.end());
  } catch (const json::parse_error& e) {
    throw ParseError("malformed raw network at " + line_context(document, e.byte) + ": " +
                     e.what());
  }
  if (!doc.is_object() || doc.value("type", "") != "FeatureCollection")
    throw SchemaError("raw network: top level must be a FeatureCollection object");
  const auto features_it = doc.find("features");
  if (features_it == doc.end() || !features_it->is_array())
    throw SchemaError("raw network: 'features' must be an array");

  const std::string units = doc.value("units", "degrees");
  if (units != "degrees" && units != "meters")
    throw SchemaError("raw network: 'units' must be \"degrees\" or \"meters\"");

  RawNetwork out;
  const json& features = *features_it;
  if (features.empty()) out.warnings.push_back("raw network has no features");

  // Projection center: bounding-box centroid over every coordinate.
  std::optional<AzimuthalEquidistant> projection;
  if (units == "degrees" && !features.empty()) {
    double min_x = std::numeric_limits<double>::infinity();
    double min_y = min_x;
    double max_x = -min_x;
    double max_y = -min_x;
    auto visit = [&](const json& c) {
      if (c.is_array() && c.size() >= 2 && c[0].is_number() && c[1].is_number()) {
        min_x = std::min(min_x, c[0].get<double>());
        max_x = std::max(max_x, c[0].get<double>());
        min_y = std::min(min_y, c[1].get<double>());
        max_y = std::max(max_y, c[1].get<double>());
      }
    };
    for (const auto& f : features) {
      if (!f.is_object() || !f.contains("geometry")) continue;
      const auto& g = f["geometry"];
      if (!g.is_object() || !g.contains("coordinates")) continue;
      const auto& c = g["coordinates"];
      if (g.value("type", "") == "Point") {
        visit(c);
      } else if (c.is_array()) {
        for (const auto& p : c) visit(p);
      }
    }
    if (min_x <= max_x) projection.emplace(0.5 * (min_x + max_x), 0.5 * (min_y + max_y));
  }
  auto to_local = [&](Vec2 p) { return projection ? projection->forward(p) : p; };

  for (std::size_t i = 0; i < features.size(); ++i) {
    const json& f = features[i];
    const std::string label = feature_label(f, i);
    if (!f.is_object()) throw SchemaError(label + ": feature must be an object");
    const json& geometry = require(f, "geometry", label);
    const json& props = require(f, "properties", label);
    if (!geometry.is_object() || !props.is_object())
      throw SchemaError(label + ": geometry and properties must be objects");
    const std::string gtype = geometry.value("type", "");
    const json& coords = require(geometry, "coordinates", label);

    const json& id = require(props, "id", label);
    if (!id.is_string()) throw SchemaError(label + ": 'id' must be a string");

    if (gtype == "LineString") {
      RawRoad road;
      road.id = id.get<std::string>();
      if (!coords.is_array() || coords.size() < 2)
        throw SchemaError(label + ": LineString needs at least 2 coordinates");
      for (const auto& c : coords) road.polyline.push_back(to_local(read_coord(c, label)));
      for (std::size_t k = 1; k < road.polyline.size(); ++k)
        if (road.polyline[k] == road.polyline[k - 1])
          throw SchemaError(label + ": consecutive duplicate coordinates");
      const json& lanes = require(props, "lanes", label);
      if (!lanes.is_number_integer() || lanes.get<long long>() < 1)
        throw SchemaError(label + ": 'lanes' must be a positive integer");
      road.lane_count = lanes.get<int>();
      const json& speed = require(props, "max_speed", label);
      if (!speed.is_number() || !(speed.get<double>() > 0.0))
        throw SchemaError(label + ": 'max_speed' must be a positive number");
      road.max_speed = speed.get<double>();
      for (const auto& [key, _] : props.items())
        if (!kRoadProps.contains(key))
          out.warnings.push_back(label + ": ignoring unknown property '" + key + "'");
      out.roads.push_back(std::move(road));
    } else if (gtype == "Point") {
      RawJunction junction;
      junction.id = id.get<std::string>();
      junction.position = to_local(read_coord(coords, label));
      junction.in_roads = read_string_list(require(props, "in_roads", label), label, "in_roads");
      junction.out_roads =
          read_string_list(require(props, "out_roads", label), label, "out_roads");
      for (const auto& [key, _] : props.items())
        if (!kJunctionProps.contains(key))
          out.warnings.push_back(label + ": ignoring unknown property '" + key + "'");
      out.junctions.push_back(std::move(junction));
    } else {
      throw SchemaError(label + ": unsupported geometry type '" + gtype + "'");
    }
  }

  std::set<std::string> road_ids;
  for (const auto& r : out.roads)
    if (!road_ids.insert(r.id).second) throw SchemaError("feature '" + r.id + "': duplicate road id");
  std::set<std::string> junction_ids;
  for (const auto& j : out.junctions) {
    if (!junction_ids.insert(j.id).second)
      throw SchemaError("feature '" + j.id + "': duplicate junction id");
    for (const auto* list : {&j.in_roads, &j.out_roads})
      for (const auto& r : *list)
        if (!road_ids.contains(r))
          throw SchemaError("feature '" + j.id + "': references missing road '" + r + "'");
  }
  return out;
}

}  // namespace tsim
