#include "json_util.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "tsim/error.hpp"
#include "tsim/io.hpp"

namespace tsim {

namespace io_detail {

namespace {

std::string line_column(std::string_view text, std::size_t byte) {
  byte = std::min(byte, text.size());
  std::size_t line = 1;
  std::size_t col = 1;
  for (std::size_t i = 0; i < byte; ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

}  // namespace

json parse_json(std::string_view text, std::string_view what) {
  try {
    return json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw ParseError("malformed " + std::string(what) + " at " + line_column(text, e.byte) +
                     ": " + e.what());
  }
}

void check_header(const json& doc, std::string_view schema_name, bool optional) {
  if (!doc.is_object()) throw SchemaError(std::string(schema_name) + ": top level must be an object");
  const auto it = doc.find("header");
  if (it == doc.end()) {
    if (optional) return;
    throw SchemaError(std::string(schema_name) + ": missing header");
  }
  const json& h = as_object(*it, "header");
  const std::string name = as_string(field(h, "schema", "header"), "header.schema");
  if (name != schema_name)
    throw SchemaError("expected a '" + std::string(schema_name) + "' document, found '" + name +
                      "'");
  const std::int64_t version = as_int(field(h, "version", "header"), "header.version");
  const int supported = schema_version(schema_name);
  if (version != supported)
    throw VersionError("schema '" + name + "' version " + std::to_string(version) +
                       " is not supported (expected " + std::to_string(supported) + ")");
  as_string(field(h, "producer", "header"), "header.producer");
}

ordered_json header_json(std::string_view schema_name) {
  const DocumentHeader h = current_header(schema_name);
  ordered_json j;
  j["schema"] = h.schema;
  j["version"] = h.version;
  j["producer"] = h.producer;
  return j;
}

const json& field(const json& obj, std::string_view key, const std::string& where) {
  const auto it = obj.find(key);
  if (it == obj.end())
    throw SchemaError(where + ": missing required field '" + std::string(key) + "'");
  return *it;
}

const json& as_object(const json& v, const std::string& where) {
  if (!v.is_object()) throw SchemaError(where + ": expected an object");
  return v;
}

const json& as_array(const json& v, const std::string& where) {
  if (!v.is_array()) throw SchemaError(where + ": expected an array");
  return v;
}

double as_number(const json& v, const std::string& where) {
  if (!v.is_number()) throw SchemaError(where + ": expected a number");
  return v.get<double>();
}

double as_finite(const json& v, const std::string& where) {
  const double x = as_number(v, where);
  if (!std::isfinite(x)) throw SchemaError(where + ": expected a finite number");
  return x;
}

std::int64_t as_int(const json& v, const std::string& where) {
  if (!v.is_number_integer()) throw SchemaError(where + ": expected an integer");
  if (v.is_number_unsigned() && v.get<std::uint64_t>() > static_cast<std::uint64_t>(INT64_MAX))
    throw SchemaError(where + ": integer out of range");
  return v.get<std::int64_t>();
}

bool as_bool(const json& v, const std::string& where) {
  if (!v.is_boolean()) throw SchemaError(where + ": expected true or false");
  return v.get<bool>();
}

std::string as_string(const json& v, const std::string& where) {
  if (!v.is_string()) throw SchemaError(where + ": expected a string");
  return v.get<std::string>();
}

Vec2 as_point(const json& v, const std::string& where) {
  if (!v.is_array() || v.size() != 2) throw SchemaError(where + ": expected [x, y]");
  return {as_finite(v[0], at(where, 0)), as_finite(v[1], at(where, 1))};
}

double finite(double x, const std::string& where) {
  if (!std::isfinite(x)) throw ValidationError(where + ": value is not finite");
  return x;
}

ordered_json point(Vec2 p) { return ordered_json::array({p.x, p.y}); }

std::string dump(const ordered_json& doc) { return doc.dump(2) + "\n"; }

}  // namespace io_detail

int schema_version(std::string_view schema_name) {
  for (std::string_view s :
       {schema::raw_network, schema::network, schema::zones, schema::od_matrix, schema::trips,
        schema::vehicle_records, schema::road_speeds, schema::report, schema::run_manifest,
        schema::bench})
    if (s == schema_name) return 1;
  throw SchemaError("unknown schema '" + std::string(schema_name) + "'");
}

DocumentHeader current_header(std::string_view schema_name) {
  return DocumentHeader{std::string(schema_name), schema_version(schema_name),
                        std::string(kProducer)};
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string() + " for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw std::runtime_error("error reading " + path.string());
  return std::move(ss).str();
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    out.flush();
    if (!out) throw std::runtime_error("error writing " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace tsim
