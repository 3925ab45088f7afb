#include "soilwave/telemetry.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>
#include <tuple>

#include "soilwave/error.hpp"
#include "soilwave/detail/text_util.hpp"

namespace soilwave::telemetry {

namespace {

using nlohmann::json;

constexpr char kMagic[4] = {'S', 'W', 'V', '1'};

bool record_less(const UplinkRecord& a, const UplinkRecord& b) {
  return std::tie(a.ts, a.gateway_id, a.rssi, a.snr, a.soil_humidity, a.soil_temp) <
         std::tie(b.ts, b.gateway_id, b.rssi, b.snr, b.soil_humidity, b.soil_temp);
}

void require_finite(double v, const char* field, std::size_t line) {
  if (!std::isfinite(v)) {
    throw ValidationError(std::string("non-finite value in field '") + field + "'", line);
  }
}

// ---- little-endian buffer IO ------------------------------------------------

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_i64(std::string& out, std::int64_t v) { put_u64(out, static_cast<std::uint64_t>(v)); }

void put_f64(std::string& out, double v) { put_u64(out, std::bit_cast<std::uint64_t>(v)); }

class Reader {
 public:
  explicit Reader(std::string_view data) : data_(data) {}

  std::uint32_t u32() { return static_cast<std::uint32_t>(raw(4)); }
  std::uint64_t u64() { return raw(8); }
  std::int64_t i64() { return static_cast<std::int64_t>(raw(8)); }
  double f64() { return std::bit_cast<double>(raw(8)); }
  std::uint8_t u8() { return static_cast<std::uint8_t>(raw(1)); }

  std::string bytes(std::size_t n) {
    check(n);
    std::string s(data_.substr(pos_, n));
    pos_ += n;
    return s;
  }

  bool at_end() const { return pos_ == data_.size(); }

 private:
  std::uint64_t raw(std::size_t n) {
    check(n);
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < n; ++i) {
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
    }
    pos_ += n;
    return v;
  }

  void check(std::size_t n) const {
    if (pos_ + n > data_.size()) throw FormatError("truncated store file");
  }

  std::string_view data_;
  std::size_t pos_ = 0;
};

std::optional<double> parse_optional_cell(std::string_view cell, const char* field,
                                          std::size_t line) {
  if (cell.empty()) return std::nullopt;
  double v = 0.0;
  if (!detail::parse_double(cell, v)) {
    throw ParseError(std::string("malformed number in field '") + field + "'", line);
  }
  return v;
}

json record_to_json(const UplinkRecord& r) {
  json obj;
  obj["ts"] = r.ts;
  obj["gw"] = r.gateway_id;
  obj["rssi"] = r.rssi;
  obj["snr"] = r.snr;
  if (r.soil_humidity) obj["hum"] = *r.soil_humidity;
  if (r.soil_temp) obj["temp"] = *r.soil_temp;
  return obj;
}

}  // namespace

void validate(const UplinkRecord& rec, std::size_t line) {
  if (rec.ts <= 0) throw ValidationError("field 'ts' must be strictly positive", line);
  require_finite(rec.rssi, "rssi", line);
  require_finite(rec.snr, "snr", line);
  if (rec.rssi < -200.0 || rec.rssi > 0.0) {
    throw ValidationError("field 'rssi' out of range [-200, 0]", line);
  }
  if (rec.snr < -30.0 || rec.snr > 30.0) {
    throw ValidationError("field 'snr' out of range [-30, 30]", line);
  }
  if (rec.soil_humidity) {
    require_finite(*rec.soil_humidity, "soil_humidity", line);
    if (*rec.soil_humidity < 0.0 || *rec.soil_humidity > 100.0) {
      throw ValidationError("field 'soil_humidity' out of range [0, 100]", line);
    }
  }
  if (rec.soil_temp) require_finite(*rec.soil_temp, "soil_temp", line);
}

RecordSet::RecordSet(std::vector<UplinkRecord> records) : records_(std::move(records)) {
  for (const auto& rec : records_) validate(rec);
  std::sort(records_.begin(), records_.end(), record_less);
  for (const auto& rec : records_) gateways_.push_back(rec.gateway_id);
  std::sort(gateways_.begin(), gateways_.end());
  gateways_.erase(std::unique(gateways_.begin(), gateways_.end()), gateways_.end());
}

RecordSet parse_uplink_csv(std::string_view text) {
  auto lines = detail::split_lines(text);
  if (lines.empty() || lines[0] != kCsvHeader) {
    throw ParseError("missing or mismatched CSV header", 1);
  }
  std::vector<UplinkRecord> records;
  for (std::size_t li = 1; li < lines.size(); ++li) {
    std::string_view line = lines[li];
    if (line.empty()) continue;
    std::size_t line_no = li + 1;
    auto cells = detail::split_csv_row(line);
    if (cells.size() != 6) {
      throw ParseError("expected 6 fields, got " + std::to_string(cells.size()), line_no);
    }
    UplinkRecord rec;
    if (!detail::parse_i64(cells[0], rec.ts)) {
      throw ParseError("malformed integer in field 'ts'", line_no);
    }
    rec.gateway_id = std::string(cells[1]);
    if (!detail::parse_double(cells[2], rec.rssi)) {
      throw ParseError("malformed number in field 'rssi_dbm'", line_no);
    }
    if (!detail::parse_double(cells[3], rec.snr)) {
      throw ParseError("malformed number in field 'snr_db'", line_no);
    }
    rec.soil_humidity = parse_optional_cell(cells[4], "soil_humidity_pct", line_no);
    rec.soil_temp = parse_optional_cell(cells[5], "soil_temp_c", line_no);
    validate(rec, line_no);
    records.push_back(std::move(rec));
  }
  return RecordSet(std::move(records));
}

std::string to_csv(const RecordSet& set) {
  std::string out(kCsvHeader);
  out.push_back('\n');
  for (const auto& r : set.records()) {
    if (r.gateway_id.find_first_of(",\r\n") != std::string::npos) {
      throw ArgumentError("gateway id '" + r.gateway_id + "' cannot be written to CSV");
    }
    out += std::to_string(r.ts);
    out.push_back(',');
    out += r.gateway_id;
    out.push_back(',');
    out += detail::format_double(r.rssi);
    out.push_back(',');
    out += detail::format_double(r.snr);
    out.push_back(',');
    if (r.soil_humidity) out += detail::format_double(*r.soil_humidity);
    out.push_back(',');
    if (r.soil_temp) out += detail::format_double(*r.soil_temp);
    out.push_back('\n');
  }
  return out;
}

UplinkRecord decode_uplink_json(std::string_view line) {
  json obj;
  try {
    obj = json::parse(line);
  } catch (const json::exception& e) {
    throw DecodeError(std::string("malformed JSON: ") + e.what());
  }
  if (!obj.is_object()) throw DecodeError("uplink line is not a JSON object");
  for (const char* key : {"ts", "gw", "rssi", "snr"}) {
    if (!obj.contains(key)) throw DecodeError(std::string("missing \"") + key + "\"");
  }
  UplinkRecord rec;
  if (!obj["ts"].is_number_integer() && !obj["ts"].is_number_unsigned()) {
    throw DecodeError("\"ts\" must be an integer");
  }
  rec.ts = obj["ts"].get<std::int64_t>();
  if (!obj["gw"].is_string()) throw DecodeError("\"gw\" must be a string");
  rec.gateway_id = obj["gw"].get<std::string>();
  if (!obj["rssi"].is_number()) throw DecodeError("\"rssi\" must be a number");
  rec.rssi = obj["rssi"].get<double>();
  if (!obj["snr"].is_number()) throw DecodeError("\"snr\" must be a number");
  rec.snr = obj["snr"].get<double>();
  if (obj.contains("hum")) {
    if (!obj["hum"].is_number()) throw DecodeError("\"hum\" must be a number");
    rec.soil_humidity = obj["hum"].get<double>();
  }
  if (obj.contains("temp")) {
    if (!obj["temp"].is_number()) throw DecodeError("\"temp\" must be a number");
    rec.soil_temp = obj["temp"].get<double>();
  }
  validate(rec);
  return rec;
}

RecordSet decode_uplink_stream(std::istream& in) {
  std::vector<UplinkRecord> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    try {
      records.push_back(decode_uplink_json(line));
    } catch (const Error& e) {
      throw DecodeError(std::string(e.what()) + " (line " + std::to_string(line_no) + ")");
    }
  }
  return RecordSet(std::move(records));
}

std::string to_jsonl(const RecordSet& set) {
  std::string out;
  for (const auto& r : set.records()) {
    out += record_to_json(r).dump();
    out.push_back('\n');
  }
  return out;
}

void store_save(const RecordSet& set, const std::filesystem::path& path) {
  std::string buf;
  buf.append(kMagic, sizeof(kMagic));

  const auto& gateways = set.gateways();
  put_u32(buf, static_cast<std::uint32_t>(gateways.size()));
  for (const auto& gw : gateways) {
    put_u32(buf, static_cast<std::uint32_t>(gw.size()));
    buf += gw;
  }

  put_u64(buf, set.size());
  for (const auto& r : set.records()) {
    auto it = std::lower_bound(gateways.begin(), gateways.end(), r.gateway_id);
    put_i64(buf, r.ts);
    put_u32(buf, static_cast<std::uint32_t>(it - gateways.begin()));
    put_f64(buf, r.rssi);
    put_f64(buf, r.snr);
    buf.push_back(r.soil_humidity ? 1 : 0);
    put_f64(buf, r.soil_humidity.value_or(0.0));
    buf.push_back(r.soil_temp ? 1 : 0);
    put_f64(buf, r.soil_temp.value_or(0.0));
  }

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw StorageError("cannot open '" + path.string() + "' for writing");
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) throw StorageError("write failed for '" + path.string() + "'");
}

RecordSet store_load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw StorageError("cannot open '" + path.string() + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw StorageError("read failed for '" + path.string() + "'");
  std::string data = std::move(ss).str();

  if (data.size() < sizeof(kMagic) || std::memcmp(data.data(), kMagic, 3) != 0) {
    throw FormatError("not a record store (bad magic)");
  }
  if (data[3] != kMagic[3]) {
    throw FormatError(std::string("unsupported store format version '") + data[3] + "'");
  }

  Reader r(std::string_view(data).substr(sizeof(kMagic)));
  std::uint32_t gw_count = r.u32();
  std::vector<std::string> gateways;
  gateways.reserve(gw_count);
  for (std::uint32_t i = 0; i < gw_count; ++i) {
    std::uint32_t len = r.u32();
    gateways.push_back(r.bytes(len));
  }

  std::uint64_t rec_count = r.u64();
  std::vector<UplinkRecord> records;
  records.reserve(rec_count);
  for (std::uint64_t i = 0; i < rec_count; ++i) {
    UplinkRecord rec;
    rec.ts = r.i64();
    std::uint32_t gw_idx = r.u32();
    if (gw_idx >= gateways.size()) throw FormatError("gateway index out of range in store");
    rec.gateway_id = gateways[gw_idx];
    rec.rssi = r.f64();
    rec.snr = r.f64();
    bool has_hum = r.u8() != 0;
    double hum = r.f64();
    if (has_hum) rec.soil_humidity = hum;
    bool has_temp = r.u8() != 0;
    double temp = r.f64();
    if (has_temp) rec.soil_temp = temp;
    records.push_back(std::move(rec));
  }
  if (!r.at_end()) throw FormatError("trailing bytes after records in store");
  return RecordSet(std::move(records));
}

RecordSet load_any(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw StorageError("cannot open '" + path.string() + "' for reading");
  char head[4] = {0, 0, 0, 0};
  in.read(head, 4);
  in.clear();
  in.seekg(0);
  if (std::memcmp(head, kMagic, 3) == 0) {
    in.close();
    return store_load(path);
  }
  if (path.extension() == ".jsonl" || path.extension() == ".ndjson" || head[0] == '{') {
    return decode_uplink_stream(in);
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_uplink_csv(ss.str());
}

}  // namespace soilwave::telemetry
