#pragma once

#include <string>
#include <vector>

namespace soilwave::energy {

/// Duty-cycle consumption profile: a fixed active burst every `period_s`
/// seconds, sleep current the rest of the time.
struct EnergyProfile {
  double i_active_ma = 0.0;  // average current while awake, mA
  double t_active_s = 0.0;   // awake duration per period, s
  double i_sleep_ma = 0.0;   // sleep current, mA
  double period_s = 0.0;     // full cycle length, s
  std::string label;
};

struct BatterySpec {
  double capacity_mah = 10400.0;
  double derate = 0.15;  // usable fraction lost to self-discharge, in [0, 1)
};

void validate(const EnergyProfile& p);
void validate(const BatterySpec& b);

/// (i_active*t_active + i_sleep*(period - t_active)) / period.
double average_current_ma(const EnergyProfile& p);

/// capacity*(1 - derate) / average_current / 24, in days. Throws
/// DegenerateInputError when the average current is zero.
double estimate_lifetime_days(const EnergyProfile& p, const BatterySpec& b);

struct McuCurrent {
  std::string name;
  double active_ma = 0.0;
};

/// Device presets and the MCU comparison table.
struct BuiltinProfiles {
  EnergyProfile sensor;  // full soil-moisture device
  EnergyProfile beacon;  // sensor-free transmit-only device
  BatterySpec battery;
  std::vector<McuCurrent> mcus;
};

const BuiltinProfiles& builtin_profiles();

/// Looks up a preset by name ("sensor" or "beacon"); throws ArgumentError on
/// unknown names.
const EnergyProfile& builtin_profile(const std::string& name);

/// JSON profile document: {label, i_active_ma, t_active_s, i_sleep_ma,
/// period_s} with an optional {battery: {capacity_mah, derate}} override.
EnergyProfile profile_from_json(const std::string& text, BatterySpec* battery = nullptr);

/// {"label", "avg_current_ma", "lifetime_days", "lifetime_years"}.
std::string lifetime_report_json(const EnergyProfile& p, const BatterySpec& b);

}  // namespace soilwave::energy
