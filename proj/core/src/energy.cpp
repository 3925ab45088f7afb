#include "soilwave/energy.hpp"

#include <cmath>
#include <nlohmann/json.hpp>

#include "soilwave/error.hpp"
#include "soilwave/detail/text_util.hpp"

namespace soilwave::energy {

namespace {

using nlohmann::json;

}  // namespace

void validate(const EnergyProfile& p) {
  if (!(p.period_s > 0.0)) throw ArgumentError("period must be > 0");
  if (p.t_active_s < 0.0 || p.t_active_s > p.period_s) {
    throw ArgumentError("active duration must lie in [0, period]");
  }
  if (p.i_active_ma < 0.0 || p.i_sleep_ma < 0.0) throw ArgumentError("currents must be >= 0");
  if (!std::isfinite(p.i_active_ma) || !std::isfinite(p.i_sleep_ma) ||
      !std::isfinite(p.t_active_s) || !std::isfinite(p.period_s)) {
    throw ArgumentError("profile values must be finite");
  }
}

void validate(const BatterySpec& b) {
  if (!(b.capacity_mah > 0.0)) throw ArgumentError("battery capacity must be > 0");
  if (!(b.derate >= 0.0 && b.derate < 1.0)) throw ArgumentError("derate must be in [0, 1)");
}

double average_current_ma(const EnergyProfile& p) {
  validate(p);
  return (p.i_active_ma * p.t_active_s + p.i_sleep_ma * (p.period_s - p.t_active_s)) / p.period_s;
}

double estimate_lifetime_days(const EnergyProfile& p, const BatterySpec& b) {
  validate(b);
  double avg = average_current_ma(p);
  if (avg <= 0.0) throw DegenerateInputError("average current is zero");
  return b.capacity_mah * (1.0 - b.derate) / avg / 24.0;
}

const BuiltinProfiles& builtin_profiles() {
  static const BuiltinProfiles presets = [] {
    BuiltinProfiles p;
    p.sensor = {35.0, 7.5, 0.004, 600.0, "sensor"};
    p.beacon = {25.0, 5.5, 0.004, 600.0, "beacon"};
    p.battery = {10400.0, 0.15};
    p.mcus = {{"ATmega328P", 3.9}, {"ATtiny84", 3.0}, {"ATtiny85", 3.0}, {"STM32", 8.0}};
    return p;
  }();
  return presets;
}

const EnergyProfile& builtin_profile(const std::string& name) {
  const auto& p = builtin_profiles();
  if (name == "sensor") return p.sensor;
  if (name == "beacon") return p.beacon;
  throw ArgumentError("unknown profile '" + name + "' (expected 'sensor' or 'beacon')");
}

EnergyProfile profile_from_json(const std::string& text, BatterySpec* battery) {
  json obj;
  try {
    obj = json::parse(text);
  } catch (const json::exception& e) {
    throw DecodeError(std::string("malformed profile document: ") + e.what());
  }
  EnergyProfile p;
  if (obj.contains("preset")) {
    p = builtin_profile(obj.at("preset").get<std::string>());
  }
  p.label = obj.value("label", p.label);
  p.i_active_ma = obj.value("i_active_ma", p.i_active_ma);
  p.t_active_s = obj.value("t_active_s", p.t_active_s);
  p.i_sleep_ma = obj.value("i_sleep_ma", p.i_sleep_ma);
  p.period_s = obj.value("period_s", p.period_s);
  validate(p);
  if (battery != nullptr && obj.contains("battery")) {
    const auto& b = obj.at("battery");
    battery->capacity_mah = b.value("capacity_mah", battery->capacity_mah);
    battery->derate = b.value("derate", battery->derate);
    validate(*battery);
  }
  return p;
}

std::string lifetime_report_json(const EnergyProfile& p, const BatterySpec& b) {
  double avg = average_current_ma(p);
  double days = estimate_lifetime_days(p, b);
  json obj{{"label", p.label},
           {"avg_current_ma", avg},
           {"lifetime_days", days},
           {"lifetime_years", days / 365.0}};
  return obj.dump(2);
}

}  // namespace soilwave::energy
