#include <charconv>
#include <cmath>
#include <ostream>

#include "json_util.hpp"
#include "tsim/error.hpp"
#include "tsim/io.hpp"

namespace tsim {

using namespace io_detail;

namespace {

void append_number(std::string& out, double x) {
  if (!std::isfinite(x)) throw ValidationError("vehicle record holds a non-finite value");
  if (x == 0.0) x = 0.0;  // "-0" would read back as the integer 0
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, x);
  out.append(buf, r.ptr);
}

void append_int(std::string& out, std::int64_t x) {
  char buf[24];
  const auto r = std::to_chars(buf, buf + sizeof buf, x);
  out.append(buf, r.ptr);
}

std::string header_line(const RecordStreamInfo& info) {
  ordered_json h;
  h["header"] = header_json(schema::vehicle_records);
  std::string line = h.dump();
  line.pop_back();  // reopen the object to append the stream parameters
  line += ",\"dt\":";
  append_number(line, info.dt);
  line += ",\"start_time\":";
  append_number(line, info.start_time);
  line += "}\n";
  return line;
}

}  // namespace

void append_record_line(std::string& out, const VehicleRecord& r) {
  out += "{\"t\":";
  append_number(out, r.t);
  out += ",\"id\":";
  append_int(out, r.id);
  out += ",\"lane\":";
  append_int(out, r.lane);
  out += ",\"s\":";
  append_number(out, r.s);
  out += ",\"v\":";
  append_number(out, r.v);
  out += ",\"angle_deg\":";
  append_number(out, r.angle_deg);
  out += '}';
}

void Fnv1a::update(std::string_view bytes) {
  for (unsigned char c : bytes) {
    h_ ^= c;
    h_ *= 0x100000001b3ULL;
  }
}

std::string Fnv1a::hex() const {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 0; i < 16; ++i) s[static_cast<std::size_t>(15 - i)] = kDigits[(h_ >> (4 * i)) & 0xf];
  return s;
}

RecordWriter::RecordWriter(std::ostream* out, RecordStreamInfo info) : out_(out) {
  emit(header_line(info));
}

void RecordWriter::emit(std::string_view bytes) {
  hash_.update(bytes);
  if (out_) {
    out_->write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!*out_) throw std::runtime_error("vehicle record stream: write failed");
  }
}

void RecordWriter::write_step(double, std::span<const VehicleRecord> vehicles,
                              std::span<const RoadSample>) {
  buf_.clear();
  for (const VehicleRecord& r : vehicles) {
    append_record_line(buf_, r);
    buf_ += '\n';
  }
  emit(buf_);
  records_ += vehicles.size();
  ++steps_;
}

void RecordWriter::finish(double t_end) {
  std::string line = "{\"footer\":{\"steps\":";
  append_int(line, static_cast<std::int64_t>(steps_));
  line += ",\"t_end\":";
  append_number(line, t_end);
  line += ",\"records\":";
  append_int(line, static_cast<std::int64_t>(records_));
  line += "}}\n";
  emit(line);
  if (out_) {
    out_->flush();
    if (!*out_) throw std::runtime_error("vehicle record stream: flush failed");
  }
}

RecordStream deserialize_records(std::string_view text) {
  RecordStream out;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  bool have_header = false;
  while (pos < text.size()) {
    const std::size_t nl = text.find('\n', pos);
    ++line_no;
    if (nl == std::string_view::npos) {
      // Cut off inside the last line: keep what came before it.
      out.truncated = true;
      if (!have_header) throw ParseError("vehicle records: stream ends inside its header line");
      break;
    }
    const std::string_view line = text.substr(pos, nl - pos);
    pos = nl + 1;
    const std::string where = "vehicle records line " + std::to_string(line_no);
    if (out.complete) throw SchemaError(where + ": content after the footer");
    const json j = parse_json(line, where);
    if (!have_header) {
      check_header(j, schema::vehicle_records);
      out.info.dt = as_finite(field(j, "dt", where), dot(where, "dt"));
      out.info.start_time = as_finite(field(j, "start_time", where), dot(where, "start_time"));
      if (!(out.info.dt > 0.0)) throw SchemaError(where + ": dt must be positive");
      have_header = true;
      continue;
    }
    if (!j.is_object()) throw SchemaError(where + ": expected an object");
    if (const auto f = j.find("footer"); f != j.end()) {
      const json& footer = as_object(*f, dot(where, "footer"));
      const std::int64_t steps = as_int(field(footer, "steps", where), dot(where, "steps"));
      out.t_end = as_finite(field(footer, "t_end", where), dot(where, "t_end"));
      const std::int64_t records = as_int(field(footer, "records", where), dot(where, "records"));
      if (steps < 0) throw SchemaError(where + ": negative step count");
      if (records != static_cast<std::int64_t>(out.records.size()))
        throw SchemaError(where + ": footer counts " + std::to_string(records) +
                          " records, stream holds " + std::to_string(out.records.size()));
      out.footer_steps = static_cast<std::size_t>(steps);
      out.complete = true;
      continue;
    }
    VehicleRecord r;
    r.t = as_finite(field(j, "t", where), dot(where, "t"));
    r.id = as_int(field(j, "id", where), dot(where, "id"));
    const std::int64_t lane = as_int(field(j, "lane", where), dot(where, "lane"));
    if (lane < 0 || lane > INT32_MAX) throw SchemaError(where + ": lane out of range");
    r.lane = static_cast<LaneId>(lane);
    r.s = as_finite(field(j, "s", where), dot(where, "s"));
    r.v = as_finite(field(j, "v", where), dot(where, "v"));
    r.angle_deg = as_finite(field(j, "angle_deg", where), dot(where, "angle_deg"));
    if (!out.records.empty()) {
      const VehicleRecord& p = out.records.back();
      if (r.t < p.t || (r.t == p.t && r.id <= p.id))
        throw SchemaError(where + ": records must be sorted by (t, id) without duplicates");
    }
    out.records.push_back(r);
  }
  if (!have_header) throw ParseError("vehicle records: empty stream");
  if (!out.complete) out.truncated = true;
  return out;
}

}  // namespace tsim
