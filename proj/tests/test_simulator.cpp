#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "oracles.hpp"
#include "soilwave/error.hpp"
#include "soilwave/preprocess.hpp"
#include "soilwave/simulator.hpp"

namespace sim = soilwave::sim;
using soilwave::ArgumentError;

TEST_SUITE("simulator") {
  TEST_CASE("humidity: no dynamics gives a constant series") {
    sim::HumidityModelConfig cfg;
    cfg.base = 31.0;
    cfg.event_rate = 0.0;
    cfg.decay = 0.0;
    auto h = sim::simulate_humidity(cfg, 50, 300, 1);
    for (double v : h) CHECK(v == 31.0);
  }

  TEST_CASE("humidity: geometric decay toward the lower clamp") {
    sim::HumidityModelConfig cfg;
    cfg.base = 40.0;
    cfg.event_rate = 0.0;
    cfg.decay = 0.1;
    cfg.clamp_low = 30.0;
    cfg.clamp_high = 45.0;
    auto h = sim::simulate_humidity(cfg, 3, 300, 1);
    CHECK(h[0] == doctest::Approx(40.0).epsilon(1e-15));
    CHECK(h[1] == doctest::Approx(39.0).epsilon(1e-15));
    CHECK(h[2] == doctest::Approx(38.1).epsilon(1e-15));
  }

  TEST_CASE("humidity: series matches an independent replay of the recurrence") {
    sim::HumidityModelConfig cfg;  // defaults
    const std::size_t n = 10000;
    const std::int64_t period = 300;
    const std::uint64_t seed = 42;
    auto h = sim::simulate_humidity(cfg, n, period, seed);
    REQUIRE(h.size() == n);

    double p = cfg.event_rate * static_cast<double>(period) / 86400.0;
    oracle::RefSplitMix gen(seed);
    std::vector<double> expect(n);
    expect[0] = cfg.base;
    for (std::size_t t = 1; t < n; ++t) {
      double v = cfg.clamp_low + (expect[t - 1] - cfg.clamp_low) * (1.0 - cfg.decay);
      if (gen.next_double() < p) v += cfg.event_gain;
      expect[t] = std::min(cfg.clamp_high, std::max(cfg.clamp_low, v));
    }
    for (std::size_t t = 0; t < n; ++t) {
      CHECK(h[t] == expect[t]);
      CHECK(h[t] >= cfg.clamp_low);
      CHECK(h[t] <= cfg.clamp_high);
    }
  }

  TEST_CASE("humidity: zero length is an argument error") {
    CHECK_THROWS_AS(sim::simulate_humidity({}, 0, 300, 1), ArgumentError);
  }

  TEST_CASE("uplinks: noiseless channel evaluates the linear model exactly") {
    sim::SimConfig cfg;
    cfg.humidity.base = 30.0;
    cfg.humidity.clamp_low = 25.0;
    cfg.humidity.clamp_high = 45.0;
    sim::GatewayChannelConfig ch;
    ch.rssi0 = -95.0;
    ch.slope = -0.5;
    ch.noise_sigma = 0.0;
    ch.snr_sigma = 0.0;
    cfg.gateways = {{"gw1", ch}};
    std::vector<double> h = {30.0, 39.0};
    auto set = sim::simulate_uplinks(h, cfg);
    REQUIRE(set.size() == 2);
    CHECK(set.records()[0].rssi == -95.0);
    CHECK(set.records()[1].rssi == -99.5);
  }

  TEST_CASE("uplinks: daily-window offset shifts rssi by exactly the configured dB") {
    sim::SimConfig cfg;
    cfg.start_ts = 1735689600;  // 00:00 UTC
    cfg.sample_period = 3600;
    cfg.humidity.base = 31.0;
    sim::GatewayChannelConfig ch = sim::far_gateway_preset();
    ch.noise_sigma = 0.0;
    ch.snr_sigma = 0.0;
    REQUIRE(ch.bimodal_offset == -6.0);
    cfg.gateways = {{"gw1", ch}};
    std::vector<double> h(24, 31.0);
    auto set = sim::simulate_uplinks(h, cfg);
    REQUIRE(set.size() == 24);
    // hour 9 falls inside [8, 16), hour 20 outside; same humidity everywhere
    CHECK(set.records()[9].rssi == set.records()[20].rssi + ch.bimodal_offset);
    CHECK(set.records()[7].rssi == set.records()[20].rssi);
    CHECK(set.records()[15].rssi == set.records()[20].rssi + ch.bimodal_offset);
    CHECK(set.records()[16].rssi == set.records()[20].rssi);
  }

  TEST_CASE("uplinks: negative slope recovers a negative correlation") {
    sim::SimConfig cfg = sim::default_sim_config();
    cfg.seed = 7;
    const std::size_t n = 2880;  // 10 days
    auto h = sim::simulate_humidity(cfg.humidity, n, cfg.sample_period, cfg.seed);
    auto set = sim::simulate_uplinks(h, cfg);
    for (const auto& gw : set.gateways()) {
      std::vector<double> hum, rssi;
      for (const auto& rec : set.records()) {
        if (rec.gateway_id != gw) continue;
        hum.push_back(*rec.soil_humidity);
        rssi.push_back(rec.rssi);
      }
      CHECK(soilwave::preprocess::pearson(hum, rssi) < 0.0);
    }
  }

  TEST_CASE("uplinks: empty humidity series is an argument error") {
    CHECK_THROWS_AS(sim::simulate_uplinks({}, sim::default_sim_config()), ArgumentError);
  }

  TEST_CASE("determinism: identical inputs give bit-identical record sets") {
    sim::SimConfig cfg = sim::default_sim_config();
    cfg.seed = 123;
    auto h1 = sim::simulate_humidity(cfg.humidity, 500, cfg.sample_period, cfg.seed);
    auto h2 = sim::simulate_humidity(cfg.humidity, 500, cfg.sample_period, cfg.seed);
    CHECK(h1 == h2);
    CHECK(sim::simulate_uplinks(h1, cfg) == sim::simulate_uplinks(h2, cfg));
  }

  TEST_CASE("gateway streams are independent: dropping one leaves the others intact") {
    sim::SimConfig cfg = sim::default_sim_config();
    cfg.seed = 5;
    auto h = sim::simulate_humidity(cfg.humidity, 200, cfg.sample_period, cfg.seed);
    auto both = sim::simulate_uplinks(h, cfg);

    sim::SimConfig only_first = cfg;
    only_first.gateways.resize(1);
    auto single = sim::simulate_uplinks(h, only_first);

    std::vector<double> gw1_both, gw1_single;
    for (const auto& r : both.records()) {
      if (r.gateway_id == "gw1") gw1_both.push_back(r.rssi);
    }
    for (const auto& r : single.records()) gw1_single.push_back(r.rssi);
    CHECK(gw1_both == gw1_single);
  }

  TEST_CASE("monotone channel: noiseless rssi is strictly monotone in humidity") {
    sim::SimConfig cfg;
    sim::GatewayChannelConfig ch;
    ch.noise_sigma = 0.0;
    ch.snr_sigma = 0.0;
    cfg.gateways = {{"gw1", ch}};
    cfg.humidity.clamp_low = 20.0;
    cfg.humidity.clamp_high = 45.0;
    std::vector<double> h = {26.0, 28.5, 31.0, 33.5, 36.0};
    auto set = sim::simulate_uplinks(h, cfg);
    for (std::size_t i = 1; i < set.size(); ++i) {
      CHECK(set.records()[i].rssi < set.records()[i - 1].rssi);
    }
  }

  TEST_CASE("config json round-trip") {
    sim::SimConfig cfg = sim::default_sim_config();
    cfg.seed = 99;
    cfg.gateways[0].second.bimodal_offset = -6.0;
    auto parsed = sim::sim_config_from_json(sim::to_json(cfg));
    CHECK(parsed.seed == cfg.seed);
    CHECK(parsed.gateways.size() == cfg.gateways.size());
    CHECK(parsed.gateways[0].second.bimodal_offset == -6.0);
    CHECK(parsed.humidity.event_rate == cfg.humidity.event_rate);
  }

  TEST_CASE("config validation rejects bad windows and empty gateway lists") {
    sim::SimConfig cfg = sim::default_sim_config();
    cfg.gateways.clear();
    CHECK_THROWS_AS(sim::validate(cfg), ArgumentError);

    sim::GatewayChannelConfig ch;
    ch.bimodal_offset = -6.0;
    ch.bimodal_start_hour = 18.0;
    ch.bimodal_end_hour = 8.0;
    CHECK_THROWS_AS(sim::validate(ch), ArgumentError);
  }
}
