#include "soilwave/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <nlohmann/json.hpp>

#include "soilwave/error.hpp"
#include "soilwave/rng.hpp"

namespace soilwave::sim {

namespace {

using nlohmann::json;

double clamp(double v, double lo, double hi) { return std::min(std::max(v, lo), hi); }

bool in_daily_window(std::int64_t ts, double start_hour, double end_hour) {
  double hour = static_cast<double>(((ts % 86400) + 86400) % 86400) / 3600.0;
  return hour >= start_hour && hour < end_hour;
}

json channel_to_json(const std::string& id, const GatewayChannelConfig& g) {
  return json{{"id", id},
              {"rssi0", g.rssi0},
              {"slope", g.slope},
              {"noise_sigma", g.noise_sigma},
              {"snr0", g.snr0},
              {"snr_slope", g.snr_slope},
              {"snr_sigma", g.snr_sigma},
              {"bimodal_offset", g.bimodal_offset},
              {"bimodal_window", json::array({g.bimodal_start_hour, g.bimodal_end_hour})}};
}

GatewayChannelConfig channel_from_json(const json& obj) {
  GatewayChannelConfig g;
  g.rssi0 = obj.value("rssi0", g.rssi0);
  g.slope = obj.value("slope", g.slope);
  g.noise_sigma = obj.value("noise_sigma", g.noise_sigma);
  g.snr0 = obj.value("snr0", g.snr0);
  g.snr_slope = obj.value("snr_slope", g.snr_slope);
  g.snr_sigma = obj.value("snr_sigma", g.snr_sigma);
  g.bimodal_offset = obj.value("bimodal_offset", g.bimodal_offset);
  if (obj.contains("bimodal_window")) {
    const auto& w = obj.at("bimodal_window");
    if (!w.is_array() || w.size() != 2) {
      throw DecodeError("\"bimodal_window\" must be [start_hour, end_hour]");
    }
    g.bimodal_start_hour = w[0].get<double>();
    g.bimodal_end_hour = w[1].get<double>();
  }
  return g;
}

}  // namespace

GatewayChannelConfig near_gateway_preset() { return GatewayChannelConfig{}; }

GatewayChannelConfig far_gateway_preset() {
  GatewayChannelConfig g;
  g.bimodal_offset = -6.0;
  g.bimodal_start_hour = 8.0;
  g.bimodal_end_hour = 16.0;
  return g;
}

SimConfig default_sim_config() {
  SimConfig cfg;
  GatewayChannelConfig gw2 = near_gateway_preset();
  gw2.rssi0 = -88.0;
  gw2.snr0 = 8.0;
  gw2.noise_sigma = 1.5;
  gw2.snr_sigma = 1.2;
  cfg.gateways = {{"gw1", near_gateway_preset()}, {"gw2", gw2}};
  return cfg;
}

void validate(const HumidityModelConfig& cfg) {
  if (!(cfg.clamp_low < cfg.clamp_high)) throw ArgumentError("humidity clamp requires low < high");
  if (cfg.base < cfg.clamp_low || cfg.base > cfg.clamp_high) {
    throw ArgumentError("humidity base must lie inside the clamp range");
  }
  if (cfg.event_rate < 0.0) throw ArgumentError("event_rate must be >= 0");
  if (cfg.event_gain <= 0.0) throw ArgumentError("event_gain must be > 0");
  if (cfg.decay < 0.0 || cfg.decay >= 1.0) throw ArgumentError("decay must be in [0, 1)");
}

void validate(const GatewayChannelConfig& cfg) {
  if (cfg.noise_sigma < 0.0) throw ArgumentError("noise_sigma must be >= 0");
  if (cfg.snr_sigma < 0.0) throw ArgumentError("snr_sigma must be >= 0");
  if (cfg.bimodal_offset != 0.0) {
    if (!(cfg.bimodal_start_hour >= 0.0 && cfg.bimodal_start_hour < cfg.bimodal_end_hour &&
          cfg.bimodal_end_hour <= 24.0)) {
      throw ArgumentError("bimodal window requires 0 <= start < end <= 24");
    }
  }
}

void validate(const SimConfig& cfg) {
  if (cfg.sample_period <= 0) throw ArgumentError("sample_period must be > 0");
  if (cfg.start_ts <= 0) throw ArgumentError("start_ts must be strictly positive");
  if (cfg.gateways.empty()) throw ArgumentError("at least one gateway is required");
  validate(cfg.humidity);
  for (const auto& [id, gw] : cfg.gateways) {
    if (id.empty()) throw ArgumentError("gateway id must not be empty");
    validate(gw);
  }
}

std::vector<double> simulate_humidity(const HumidityModelConfig& cfg, std::size_t n,
                                      std::int64_t period, std::uint64_t seed) {
  validate(cfg);
  if (n == 0) throw ArgumentError("humidity series length must be >= 1");
  if (period <= 0) throw ArgumentError("sample period must be > 0");

  double event_p = clamp(cfg.event_rate * static_cast<double>(period) / 86400.0, 0.0, 1.0);
  rng::SplitMix64 gen(seed);

  std::vector<double> series(n);
  series[0] = clamp(cfg.base, cfg.clamp_low, cfg.clamp_high);
  for (std::size_t t = 1; t < n; ++t) {
    double h = cfg.clamp_low + (series[t - 1] - cfg.clamp_low) * (1.0 - cfg.decay);
    if (gen.next_bernoulli(event_p)) h += cfg.event_gain;
    series[t] = clamp(h, cfg.clamp_low, cfg.clamp_high);
  }
  return series;
}

telemetry::RecordSet simulate_uplinks(const std::vector<double>& humidity, const SimConfig& cfg) {
  validate(cfg);
  if (humidity.empty()) throw ArgumentError("humidity series must not be empty");

  std::vector<telemetry::UplinkRecord> records;
  records.reserve(humidity.size() * cfg.gateways.size());

  for (std::size_t g = 0; g < cfg.gateways.size(); ++g) {
    const auto& [id, ch] = cfg.gateways[g];
    rng::SplitMix64 gen(rng::SplitMix64::stream_seed(cfg.seed, g));
    for (std::size_t t = 0; t < humidity.size(); ++t) {
      std::int64_t ts = cfg.start_ts + static_cast<std::int64_t>(t) * cfg.sample_period;
      double dh = humidity[t] - cfg.humidity.base;
      double offset = (ch.bimodal_offset != 0.0 &&
                       in_daily_window(ts, ch.bimodal_start_hour, ch.bimodal_end_hour))
                          ? ch.bimodal_offset
                          : 0.0;
      // Draw order per sample is pinned (rssi noise, then snr noise) and the
      // draws happen even at sigma == 0 so stream positions never depend on
      // the channel settings.
      double rssi = ch.rssi0 + ch.slope * dh + offset + gen.next_normal(0.0, ch.noise_sigma);
      double snr = ch.snr0 + ch.snr_slope * dh + gen.next_normal(0.0, ch.snr_sigma);

      telemetry::UplinkRecord rec;
      rec.ts = ts;
      rec.gateway_id = id;
      rec.rssi = rssi;
      rec.snr = snr;
      rec.soil_humidity = humidity[t];
      records.push_back(std::move(rec));
    }
  }
  return telemetry::RecordSet(std::move(records));
}

SimConfig sim_config_from_json(const std::string& text) {
  json obj;
  try {
    obj = json::parse(text);
  } catch (const json::exception& e) {
    throw DecodeError(std::string("malformed simulation config: ") + e.what());
  }
  SimConfig cfg = default_sim_config();
  cfg.sample_period = obj.value("sample_period", cfg.sample_period);
  cfg.start_ts = obj.value("start_ts", cfg.start_ts);
  cfg.seed = obj.value("seed", cfg.seed);
  if (obj.contains("humidity")) {
    const auto& h = obj.at("humidity");
    cfg.humidity.base = h.value("base", cfg.humidity.base);
    cfg.humidity.event_rate = h.value("event_rate", cfg.humidity.event_rate);
    cfg.humidity.event_gain = h.value("event_gain", cfg.humidity.event_gain);
    cfg.humidity.decay = h.value("decay", cfg.humidity.decay);
    if (h.contains("clamp")) {
      const auto& c = h.at("clamp");
      if (!c.is_array() || c.size() != 2) throw DecodeError("\"clamp\" must be [low, high]");
      cfg.humidity.clamp_low = c[0].get<double>();
      cfg.humidity.clamp_high = c[1].get<double>();
    }
  }
  if (obj.contains("gateways")) {
    cfg.gateways.clear();
    for (const auto& g : obj.at("gateways")) {
      if (!g.contains("id")) throw DecodeError("gateway entry missing \"id\"");
      std::string id = g.at("id").get<std::string>();
      GatewayChannelConfig base;
      if (g.contains("preset")) {
        std::string preset = g.at("preset").get<std::string>();
        if (preset == "near") {
          base = near_gateway_preset();
        } else if (preset == "far") {
          base = far_gateway_preset();
        } else {
          throw DecodeError("unknown gateway preset '" + preset + "'");
        }
      }
      json merged = channel_to_json(id, base);
      merged.update(g);
      cfg.gateways.emplace_back(id, channel_from_json(merged));
    }
  }
  validate(cfg);
  return cfg;
}

std::string to_json(const SimConfig& cfg) {
  json gws = json::array();
  for (const auto& [id, g] : cfg.gateways) gws.push_back(channel_to_json(id, g));
  json obj{{"sample_period", cfg.sample_period},
           {"start_ts", cfg.start_ts},
           {"seed", cfg.seed},
           {"humidity",
            {{"base", cfg.humidity.base},
             {"event_rate", cfg.humidity.event_rate},
             {"event_gain", cfg.humidity.event_gain},
             {"decay", cfg.humidity.decay},
             {"clamp", json::array({cfg.humidity.clamp_low, cfg.humidity.clamp_high})}}},
           {"gateways", gws}};
  return obj.dump(2);
}

}  // namespace soilwave::sim
