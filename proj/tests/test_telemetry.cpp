#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "soilwave/error.hpp"
#include "soilwave/rng.hpp"
#include "soilwave/telemetry.hpp"

namespace tel = soilwave::telemetry;
using soilwave::DecodeError;
using soilwave::FormatError;
using soilwave::ParseError;
using soilwave::ValidationError;

namespace {

std::filesystem::path temp_file(const char* name) {
  auto dir = std::filesystem::temp_directory_path() / "soilwave_tests";
  std::filesystem::create_directories(dir);
  return dir / name;
}

tel::RecordSet sample_set() {
  std::vector<tel::UplinkRecord> recs;
  recs.push_back({1735689600, "gw1", -95.0, 5.5, 31.0, 12.0});
  recs.push_back({1735689600, "gw2", -88.25, 7.0, 31.0, std::nullopt});
  recs.push_back({1735689900, "gw1", -96.5, 5.0, std::nullopt, std::nullopt});
  return tel::RecordSet(std::move(recs));
}

}  // namespace

TEST_SUITE("telemetry") {
  TEST_CASE("csv: header-only document yields an empty set") {
    auto set = tel::parse_uplink_csv("ts,gateway_id,rssi_dbm,snr_db,soil_humidity_pct,soil_temp_c\n");
    CHECK(set.size() == 0);
    CHECK(set.gateways().empty());
  }

  TEST_CASE("csv: one full row maps every field") {
    auto set = tel::parse_uplink_csv(
        "ts,gateway_id,rssi_dbm,snr_db,soil_humidity_pct,soil_temp_c\n"
        "1735689600,gw1,-95.0,5.5,31.0,12.0\n");
    REQUIRE(set.size() == 1);
    const auto& r = set.records()[0];
    CHECK(r.ts == 1735689600);
    CHECK(r.gateway_id == "gw1");
    CHECK(r.rssi == -95.0);
    CHECK(r.snr == 5.5);
    CHECK(r.soil_humidity == 31.0);
    CHECK(r.soil_temp == 12.0);
  }

  TEST_CASE("csv: empty cells become absent optionals") {
    auto set = tel::parse_uplink_csv(
        "ts,gateway_id,rssi_dbm,snr_db,soil_humidity_pct,soil_temp_c\n"
        "1735689600,gw1,-95.0,5.5,,\n");
    REQUIRE(set.size() == 1);
    CHECK_FALSE(set.records()[0].soil_humidity.has_value());
    CHECK_FALSE(set.records()[0].soil_temp.has_value());
  }

  TEST_CASE("csv: equal timestamps order by gateway id") {
    auto set = tel::parse_uplink_csv(
        "ts,gateway_id,rssi_dbm,snr_db,soil_humidity_pct,soil_temp_c\n"
        "1735689600,gw2,-88.0,7.0,,\n"
        "1735689600,gw1,-95.0,5.5,,\n");
    REQUIRE(set.size() == 2);
    CHECK(set.records()[0].gateway_id == "gw1");
    CHECK(set.records()[1].gateway_id == "gw2");
  }

  TEST_CASE("csv: malformed rows carry the line number") {
    auto text =
        "ts,gateway_id,rssi_dbm,snr_db,soil_humidity_pct,soil_temp_c\n"
        "1735689600,gw1,-95.0,5.5,31.0,12.0\n"
        "1735689900,gw1,bogus,5.5,,\n";
    try {
      tel::parse_uplink_csv(text);
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(e.line() == 3);
    }
  }

  TEST_CASE("csv: out-of-range field names the field and line") {
    auto text =
        "ts,gateway_id,rssi_dbm,snr_db,soil_humidity_pct,soil_temp_c\n"
        "1735689600,gw1,-95.0,5.5,140.0,\n";
    try {
      tel::parse_uplink_csv(text);
      FAIL("expected ValidationError");
    } catch (const ValidationError& e) {
      CHECK(std::string(e.what()).find("soil_humidity") != std::string::npos);
      CHECK(e.line() == 2);
    }
  }

  TEST_CASE("csv: wrong header is rejected") {
    CHECK_THROWS_AS(tel::parse_uplink_csv("ts,gw,rssi\n"), ParseError);
  }

  TEST_CASE("csv: parse is order-normalizing") {
    std::string header = "ts,gateway_id,rssi_dbm,snr_db,soil_humidity_pct,soil_temp_c\n";
    std::vector<std::string> rows = {
        "1735690200,gw1,-94.0,6.0,30.5,\n",
        "1735689600,gw2,-88.0,7.0,31.0,\n",
        "1735689600,gw1,-95.0,5.5,31.0,12.0\n",
        "1735689900,gw1,-96.5,5.0,,\n",
    };
    auto forward = tel::parse_uplink_csv(header + rows[0] + rows[1] + rows[2] + rows[3]);
    auto reversed = tel::parse_uplink_csv(header + rows[3] + rows[2] + rows[1] + rows[0]);
    CHECK(forward == reversed);
  }

  TEST_CASE("jsonl: minimal object leaves optionals absent") {
    auto r = tel::decode_uplink_json(R"({"ts":1735689600,"gw":"gw1","rssi":-95,"snr":5.5})");
    CHECK(r.ts == 1735689600);
    CHECK(r.gateway_id == "gw1");
    CHECK(r.rssi == -95.0);
    CHECK_FALSE(r.soil_humidity.has_value());
    CHECK_FALSE(r.soil_temp.has_value());
  }

  TEST_CASE("jsonl: hum and temp populate the optionals") {
    auto r = tel::decode_uplink_json(
        R"({"ts":1735689600,"gw":"gw1","rssi":-95,"snr":5.5,"hum":31.0,"temp":12.0})");
    CHECK(r.soil_humidity == 31.0);
    CHECK(r.soil_temp == 12.0);
  }

  TEST_CASE("jsonl: missing ts is a decode error naming the key") {
    try {
      tel::decode_uplink_json(R"({"gw":"gw1","rssi":-95,"snr":5.5})");
      FAIL("expected DecodeError");
    } catch (const DecodeError& e) {
      CHECK(std::string(e.what()).find("\"ts\"") != std::string::npos);
    }
  }

  TEST_CASE("jsonl: non-numeric rssi is a decode error") {
    CHECK_THROWS_AS(
        tel::decode_uplink_json(R"({"ts":1735689600,"gw":"gw1","rssi":"x","snr":5.5})"),
        DecodeError);
  }

  TEST_CASE("jsonl: stream decoding round-trips a set") {
    auto set = sample_set();
    std::istringstream in(tel::to_jsonl(set));
    CHECK(tel::decode_uplink_stream(in) == set);
  }

  TEST_CASE("store: save/load round-trip is exact") {
    auto path = temp_file("roundtrip.store");
    auto set = sample_set();
    tel::store_save(set, path);
    CHECK(tel::store_load(path) == set);
  }

  TEST_CASE("store: empty set round-trips") {
    auto path = temp_file("empty.store");
    tel::RecordSet empty;
    tel::store_save(empty, path);
    CHECK(tel::store_load(path) == empty);
  }

  TEST_CASE("store: unknown version byte is a format error") {
    auto path = temp_file("badversion.store");
    tel::store_save(sample_set(), path);
    {
      std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
      f.seekp(3);
      f.put('9');
    }
    CHECK_THROWS_AS(tel::store_load(path), FormatError);
  }

  TEST_CASE("store: truncated file is a format error") {
    auto path = temp_file("truncated.store");
    tel::store_save(sample_set(), path);
    auto size = std::filesystem::file_size(path);
    std::filesystem::resize_file(path, size - 5);
    CHECK_THROWS_AS(tel::store_load(path), FormatError);
  }

  TEST_CASE("store: missing file is a storage error") {
    CHECK_THROWS_AS(tel::store_load(temp_file("does_not_exist.store")),
                    soilwave::StorageError);
  }

  TEST_CASE("csv round-trip property over random sets") {
    soilwave::rng::SplitMix64 gen(99);
    for (int rep = 0; rep < 20; ++rep) {
      std::vector<tel::UplinkRecord> recs;
      auto n = 1 + gen.next_below(40);
      for (std::uint64_t i = 0; i < n; ++i) {
        tel::UplinkRecord r;
        r.ts = 1735689600 + static_cast<std::int64_t>(gen.next_below(500)) * 300;
        r.gateway_id = gen.next_bernoulli(0.5) ? "gw1" : "gw2";
        r.rssi = -120.0 + 60.0 * gen.next_double();
        r.snr = -10.0 + 25.0 * gen.next_double();
        if (gen.next_bernoulli(0.7)) r.soil_humidity = 100.0 * gen.next_double();
        if (gen.next_bernoulli(0.5)) r.soil_temp = -5.0 + 30.0 * gen.next_double();
        recs.push_back(std::move(r));
      }
      tel::RecordSet set(std::move(recs));
      CHECK(tel::parse_uplink_csv(tel::to_csv(set)) == set);

      auto path = temp_file("prop.store");
      tel::store_save(set, path);
      CHECK(tel::store_load(path) == set);
    }
  }

  TEST_CASE("validation is total for parsed records") {
    CHECK_THROWS_AS(tel::parse_uplink_csv(
                        "ts,gateway_id,rssi_dbm,snr_db,soil_humidity_pct,soil_temp_c\n"
                        "0,gw1,-95.0,5.5,,\n"),
                    ValidationError);  // ts must be positive
    CHECK_THROWS_AS(tel::parse_uplink_csv(
                        "ts,gateway_id,rssi_dbm,snr_db,soil_humidity_pct,soil_temp_c\n"
                        "10,gw1,-300.0,5.5,,\n"),
                    ValidationError);  // rssi below -200
    CHECK_THROWS_AS(
        tel::decode_uplink_json(R"({"ts":10,"gw":"gw1","rssi":-95,"snr":40})"),
        ValidationError);  // snr above 30
  }
}
