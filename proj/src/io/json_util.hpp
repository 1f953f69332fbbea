#pragma once

// Strict accessors shared by the document readers. Every failure names the
// JSON path of the offending value.

#include <cstdint>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "tsim/geometry.hpp"

namespace tsim::io_detail {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

/// Parses `text` as one JSON document; syntax errors become ParseError with
/// line and column.
json parse_json(std::string_view text, std::string_view what);

/// Checks the "header" member against `schema_name`. When `optional` is set a
/// missing header is accepted.
void check_header(const json& doc, std::string_view schema_name, bool optional = false);

ordered_json header_json(std::string_view schema_name);

const json& field(const json& obj, std::string_view key, const std::string& where);
const json& as_object(const json& v, const std::string& where);
const json& as_array(const json& v, const std::string& where);
double as_number(const json& v, const std::string& where);
double as_finite(const json& v, const std::string& where);
std::int64_t as_int(const json& v, const std::string& where);
bool as_bool(const json& v, const std::string& where);
std::string as_string(const json& v, const std::string& where);
Vec2 as_point(const json& v, const std::string& where);

/// Rejects NaN and infinities before they reach a document.
double finite(double x, const std::string& where);
ordered_json point(Vec2 p);

std::string dump(const ordered_json& doc);

inline std::string at(const std::string& base, std::size_t i) {
  return base + "[" + std::to_string(i) + "]";
}
inline std::string dot(const std::string& base, std::string_view key) {
  return base + "." + std::string(key);
}

}  // namespace tsim::io_detail
