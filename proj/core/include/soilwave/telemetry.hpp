#pragma once

#include <cstdint>
#include <filesystem>
#include <istream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace soilwave::telemetry {

/// One received LoRa uplink packet.
struct UplinkRecord {
  std::int64_t ts = 0;       // UTC epoch seconds, strictly positive
  std::string gateway_id;    // opaque identifier
  double rssi = 0.0;         // dBm, in [-200, 0]
  double snr = 0.0;          // dB, in [-30, 30]
  std::optional<double> soil_humidity;  // percent, in [0, 100] when present
  std::optional<double> soil_temp;      // degrees C

  friend bool operator==(const UplinkRecord&, const UplinkRecord&) = default;
};

/// Throws ValidationError when a field is out of range or non-finite.
/// `line` (1-based, 0 = unknown) is folded into the message.
void validate(const UplinkRecord& rec, std::size_t line = 0);

/// Time-ordered set of uplinks. Records are kept sorted by (ts, gateway_id,
/// remaining fields), which also makes construction order-normalizing:
/// any permutation of the same multiset of records yields the same set.
class RecordSet {
 public:
  RecordSet() = default;
  explicit RecordSet(std::vector<UplinkRecord> records);

  const std::vector<UplinkRecord>& records() const noexcept { return records_; }
  /// Distinct gateway ids, sorted lexicographically.
  const std::vector<std::string>& gateways() const noexcept { return gateways_; }
  std::size_t size() const noexcept { return records_.size(); }
  bool empty() const noexcept { return records_.empty(); }

  friend bool operator==(const RecordSet&, const RecordSet&) = default;

 private:
  std::vector<UplinkRecord> records_;
  std::vector<std::string> gateways_;
};

/// CSV schema (header required, exact):
///   ts,gateway_id,rssi_dbm,snr_db,soil_humidity_pct,soil_temp_c
/// An empty cell means the optional field is absent.
inline constexpr std::string_view kCsvHeader =
    "ts,gateway_id,rssi_dbm,snr_db,soil_humidity_pct,soil_temp_c";

RecordSet parse_uplink_csv(std::string_view text);
std::string to_csv(const RecordSet& set);

/// One newline-JSON uplink object: keys `ts` (int), `gw` (string), `rssi`,
/// `snr` (numbers), optional `hum`, `temp` (numbers).
UplinkRecord decode_uplink_json(std::string_view line);
RecordSet decode_uplink_stream(std::istream& in);
std::string to_jsonl(const RecordSet& set);

/// Binary store: magic "SWV" + version byte '1', little-endian throughout.
/// Layout: magic, gateway table (count + length-prefixed ids), record count,
/// then fixed-layout records (ts, gateway index, rssi, snr, presence-flagged
/// humidity and temperature). Round-trips bit-exactly.
void store_save(const RecordSet& set, const std::filesystem::path& path);
RecordSet store_load(const std::filesystem::path& path);

/// Loads a record set from CSV, newline-JSON or binary store, deciding by
/// content (magic bytes) first and extension second.
RecordSet load_any(const std::filesystem::path& path);

}  // namespace soilwave::telemetry
