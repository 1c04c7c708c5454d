#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace pestdet {

/// Energy of one wake, millijoules.
struct PhaseEnergy {
    double camera_mj = 0.0;
    double compute_mj = 0.0;
    double tx_mj_per_byte = 1.0;
    double wake_overhead_mj = 0.0;  ///< e.g. loading CNN weights into on-chip memory
};

enum class PayloadPolicy { CountersEveryWake, ImagePerDetection };

const char* payload_policy_name(PayloadPolicy p);
PayloadPolicy parse_payload_policy(const std::string& s);

struct DutyCycleConfig {
    double wake_period_s = 900.0;
    PayloadPolicy payload_policy = PayloadPolicy::CountersEveryWake;
    uint64_t counter_payload_bytes = 17;  ///< 4 B count + 13 B LoRaWAN framing
    uint64_t image_payload_bytes = 12700;
    double detections_per_day = 33.0;
    double sleep_power_uw = 43.0;
    double active_s = 0.0;  ///< awake time per wake, excluded from sleep
};

struct Battery {
    double capacity_mah = 1000.0;
    double voltage_v = 3.7;
    double usable_fraction = 1.0;

    double joules() const { return capacity_mah / 1000.0 * voltage_v * 3600.0 * usable_fraction; }
};

/// Joules per phase. For daily_energy the period is one day.
struct EnergyLedger {
    double compute_j = 0;
    double radio_j = 0;
    double camera_j = 0;
    double sleep_j = 0;
    double overhead_j = 0;
    double daily_j = 0;
    double lifetime_days = 0;  ///< fractional

    double total_j() const { return compute_j + radio_j + camera_j + sleep_j + overhead_j; }
};

void validate(const PhaseEnergy& pe);
void validate(const DutyCycleConfig& cfg);
void validate(const Battery& b);

double wake_cycle_energy(const PhaseEnergy& pe, uint64_t payload_bytes);

EnergyLedger daily_energy(const PhaseEnergy& pe, const DutyCycleConfig& cfg,
                          const Battery& battery = {});

struct Lifetime {
    uint64_t days = 0;
    double fractional_days = 0;
};

Lifetime lifetime(const Battery& battery, double daily_j);

struct WakeRecord {
    uint64_t index = 0;
    double time_s = 0;
    uint64_t detections = 0;
    uint64_t payload_bytes = 0;
    double energy_mj = 0;  ///< this wake, sleep before it excluded
    double battery_j = 0;  ///< remaining after the wake
};

struct SimResult {
    std::vector<WakeRecord> timeline;
    EnergyLedger ledger;  ///< totals over the simulated span, daily_j = per simulated day
    double simulated_s = 0;
    bool exhausted = false;
    double exhausted_at_s = 0;
};

/// Wakes at k * wake_period_s, k = 1, 2, ...; a wake counts the arrivals in
/// (previous wake, this wake]. Stops at the horizon or when the battery runs out.
/// Throws UnsortedTrace when `arrivals_s` is not non-decreasing.
SimResult simulate(const PhaseEnergy& pe, const DutyCycleConfig& cfg, const Battery& battery,
                   const std::vector<double>& arrivals_s, double horizon_days);

/// `per_day` arrivals spread evenly over each day.
std::vector<double> uniform_trace(double per_day, double days);

struct Scenario {
    std::string name;
    PhaseEnergy phase;
    DutyCycleConfig duty;
    Battery battery;
    std::vector<std::string> calibrated;
};

std::string scenario_to_json(const Scenario& s);
Scenario scenario_from_json(const std::string& text);
Scenario load_scenario(const std::filesystem::path& path);

std::vector<double> read_trace(const std::filesystem::path& path);

std::string ledger_json(const EnergyLedger& l, const Lifetime& life);
std::string format_timeline_csv(const SimResult& r);

} // namespace pestdet
