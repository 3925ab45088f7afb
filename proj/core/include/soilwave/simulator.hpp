#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "soilwave/telemetry.hpp"

namespace soilwave::sim {

/// Rain-event / dry-down model for the ground-truth humidity trajectory.
/// Between events the series decays geometrically toward clamp_low:
///   h[t] = clamp_low + (h[t-1] - clamp_low) * (1 - decay)
/// with one Bernoulli event draw per produced sample (probability
/// event_rate * period / 86400); an event adds event_gain before clamping.
struct HumidityModelConfig {
  double base = 31.0;        // initial value, percent
  double event_rate = 1.0;   // expected rain events per day, >= 0
  double event_gain = 7.0;   // percent jump per event, > 0
  double decay = 0.003;      // dry-down rate per sample, in (0, 1); 0 = hold
  double clamp_low = 25.0;
  double clamp_high = 40.0;
};

/// Linear humidity -> signal channel with additive Gaussian short-term noise
/// and an optional deterministic offset inside a daily hour window (the
/// "working hours" shift seen on a distant gateway):
///   rssi = rssi0 + slope*(h - base) + bimodal_offset*[hour in window] + N(0, noise_sigma)
///   snr  = snr0 + snr_slope*(h - base) + bimodal_offset*[...] applies to rssi only
struct GatewayChannelConfig {
  double rssi0 = -95.0;      // dBm at the reference humidity
  double slope = -0.5;       // dB per percent humidity
  double noise_sigma = 2.0;  // dB, >= 0
  double snr0 = 6.0;         // dB
  double snr_slope = -0.4;   // dB per percent
  double snr_sigma = 1.5;    // dB, >= 0
  double bimodal_offset = 0.0;      // dB shift inside the window; 0 disables
  double bimodal_start_hour = 8.0;  // [start, end) in UTC hours
  double bimodal_end_hour = 16.0;
};

GatewayChannelConfig near_gateway_preset();
GatewayChannelConfig far_gateway_preset();

struct SimConfig {
  std::int64_t sample_period = 300;       // seconds between samples
  std::int64_t start_ts = 1735689600;     // timestamp of the first sample
  HumidityModelConfig humidity;
  std::vector<std::pair<std::string, GatewayChannelConfig>> gateways;
  std::uint64_t seed = 0;
};

/// Two-gateway default: "gw1" with the reference channel, "gw2" closer in
/// (stronger baseline, slightly quieter).
SimConfig default_sim_config();

void validate(const HumidityModelConfig& cfg);
void validate(const GatewayChannelConfig& cfg);
void validate(const SimConfig& cfg);

/// Ground-truth humidity series of length n. Deterministic in
/// (cfg, n, period, seed); the event stream draws one Bernoulli per
/// transition t-1 -> t, so n samples consume exactly n-1 draws.
std::vector<double> simulate_humidity(const HumidityModelConfig& cfg, std::size_t n,
                                      std::int64_t period, std::uint64_t seed);

/// One UplinkRecord per (sample, gateway), each carrying the ground-truth
/// humidity. Gateway k draws from the independent stream
/// rng::SplitMix64::stream_seed(cfg.seed, k), so gateway order cannot
/// perturb any other gateway's values. Noise draws happen for every sample
/// even when sigma is zero, keeping stream positions config-independent.
telemetry::RecordSet simulate_uplinks(const std::vector<double>& humidity, const SimConfig& cfg);

/// JSON config document (schema in README): top-level keys seed,
/// sample_period, start_ts, humidity{...}, gateways[{id, ...}].
SimConfig sim_config_from_json(const std::string& text);
std::string to_json(const SimConfig& cfg);

}  // namespace soilwave::sim
