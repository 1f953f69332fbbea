#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tsim/demand.hpp"
#include "tsim/engine.hpp"
#include "tsim/metrics.hpp"
#include "tsim/network.hpp"

namespace tsim {

inline constexpr std::string_view kProducer = "tsim 0.1.0";

/// Schema names. Every document starts with a header naming one of these.
namespace schema {
inline constexpr std::string_view raw_network = "raw_network";
inline constexpr std::string_view network = "network";
inline constexpr std::string_view zones = "zones";
inline constexpr std::string_view od_matrix = "od_matrix";
inline constexpr std::string_view trips = "trips";
inline constexpr std::string_view vehicle_records = "vehicle_records";
inline constexpr std::string_view road_speeds = "road_speeds";
inline constexpr std::string_view report = "report";
inline constexpr std::string_view run_manifest = "run_manifest";
inline constexpr std::string_view bench = "bench";
}  // namespace schema

/// Supported version of a schema; throws SchemaError for an unknown name.
int schema_version(std::string_view schema_name);

struct DocumentHeader {
  std::string schema;
  int version = 0;
  std::string producer;

  friend bool operator==(const DocumentHeader&, const DocumentHeader&) = default;
};

/// Header this build writes for `schema_name`.
DocumentHeader current_header(std::string_view schema_name);

std::string read_text_file(const std::filesystem::path& path);
/// Writes through a temporary file in the same directory and renames it, so
/// readers never observe a half-written document.
void write_text_file(const std::filesystem::path& path, std::string_view text);

// ---------------------------------------------------------------------------
// Documents. `serialize_*` returns the exact bytes written to disk;
// `deserialize_*` validates the header and the body and throws ParseError,
// SchemaError or VersionError with the offending entity named.

/// Raw network: a GeoJSON FeatureCollection in planar meters. The header is
/// optional on input because raw files usually come from external tools; when
/// present it must match.
std::string serialize_raw(const RawNetwork& raw);
RawNetwork deserialize_raw(std::string_view text);

std::string serialize_compiled(const RoadNetwork& net);
/// Also rejects networks that fail validate_network.
RoadNetwork deserialize_compiled(std::string_view text);

std::string serialize_zones(const ZoneSet& zones);
ZoneSet deserialize_zones(std::string_view text);

std::string serialize_od(const ODMatrix& od);
ODMatrix deserialize_od(std::string_view text);

std::string serialize_trips(std::span<const Trip> trips);
std::vector<Trip> deserialize_trips(std::string_view text);

std::string serialize_road_speeds(std::span<const RoadSpeedWindow> windows);
std::vector<RoadSpeedWindow> deserialize_road_speeds(std::string_view text);

struct RoadSpeedSummary {
  std::string road;
  double mean_speed = 0.0;  // unweighted mean over the road's windows
  std::size_t windows = 0;

  friend bool operator==(const RoadSpeedSummary&, const RoadSpeedSummary&) = default;
};

struct Comparison {
  std::optional<double> speed_rmse;
  std::optional<double> speed_spearman;
  std::optional<double> od_cpc;
  std::optional<double> od_rmse;

  friend bool operator==(const Comparison&, const Comparison&) = default;
};

struct Report {
  std::size_t trips = 0;
  std::size_t finished = 0;
  std::size_t unfinished = 0;  // driving at the end of the record
  std::size_t unserved = 0;    // never seen in the record
  std::optional<double> att;   // absent when no trip finished
  std::optional<double> att_penalized;
  std::vector<RoadSpeedSummary> roads;
  Comparison comparison;

  friend bool operator==(const Report&, const Report&) = default;
};

std::string serialize_report(const Report& report);
Report deserialize_report(std::string_view text);

// ---------------------------------------------------------------------------
// Vehicle record stream: line-delimited JSON. The first line is the header,
// then one line per vehicle per step sorted by (t, id), then a footer line.

struct RecordStreamInfo {
  double dt = 1.0;
  double start_time = 0.0;
};

/// Formats one record line (without the trailing newline). Numbers use the
/// shortest representation that reads back to the same double.
void append_record_line(std::string& out, const VehicleRecord& r);

/// 64-bit FNV-1a.
class Fnv1a {
 public:
  void update(std::string_view bytes);
  std::uint64_t digest() const { return h_; }
  std::string hex() const;

 private:
  std::uint64_t h_ = 0xcbf29ce484222325ULL;
};

/// RecordSink writing the line-delimited stream to `out` (may be null to only
/// hash). The running hash covers every byte of the stream.
class RecordWriter : public RecordSink {
 public:
  RecordWriter(std::ostream* out, RecordStreamInfo info);

  void write_step(double t, std::span<const VehicleRecord> vehicles,
                  std::span<const RoadSample> roads) override;
  void finish(double t_end) override;

  std::uint64_t hash() const { return hash_.digest(); }
  std::string hash_hex() const { return hash_.hex(); }
  std::size_t records() const { return records_; }
  std::size_t steps() const { return steps_; }

 private:
  void emit(std::string_view bytes);

  std::ostream* out_;
  Fnv1a hash_;
  std::string buf_;
  std::size_t records_ = 0;
  std::size_t steps_ = 0;
};

struct RecordStream {
  RecordStreamInfo info;
  std::vector<VehicleRecord> records;
  bool complete = false;   // the footer was present
  bool truncated = false;  // the stream ended early; `records` holds every complete record
  std::optional<double> t_end;  // from the footer
  std::size_t footer_steps = 0;
};

/// Parses a record stream. A stream cut off at or inside its last line is
/// accepted with `truncated` set; malformed lines elsewhere are errors.
RecordStream deserialize_records(std::string_view text);

// ---------------------------------------------------------------------------
// File wrappers

void save_raw(const std::filesystem::path& p, const RawNetwork& raw);
RawNetwork load_raw(const std::filesystem::path& p);
void save_compiled(const std::filesystem::path& p, const RoadNetwork& net);
RoadNetwork load_compiled(const std::filesystem::path& p);
void save_zones(const std::filesystem::path& p, const ZoneSet& zones);
ZoneSet load_zones(const std::filesystem::path& p);
void save_od(const std::filesystem::path& p, const ODMatrix& od);
ODMatrix load_od(const std::filesystem::path& p);
void save_trips(const std::filesystem::path& p, std::span<const Trip> trips);
std::vector<Trip> load_trips(const std::filesystem::path& p);
void save_road_speeds(const std::filesystem::path& p, std::span<const RoadSpeedWindow> windows);
std::vector<RoadSpeedWindow> load_road_speeds(const std::filesystem::path& p);
void save_report(const std::filesystem::path& p, const Report& report);
Report load_report(const std::filesystem::path& p);
RecordStream load_records(const std::filesystem::path& p);

}  // namespace tsim
