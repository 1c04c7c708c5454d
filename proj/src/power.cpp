#include "pestdet/power.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "pestdet/error.hpp"

namespace pestdet {

using nlohmann::ordered_json;

namespace {
constexpr double kDay = 86400.0;
}

const char* payload_policy_name(PayloadPolicy p) {
    return p == PayloadPolicy::CountersEveryWake ? "counters_every_wake" : "image_per_detection";
}

PayloadPolicy parse_payload_policy(const std::string& s) {
    if (s == "counters_every_wake" || s == "counters")
        return PayloadPolicy::CountersEveryWake;
    if (s == "image_per_detection" || s == "image" || s == "images")
        return PayloadPolicy::ImagePerDetection;
    fail(ErrorCode::InvalidArgument,
         "unknown payload policy '" + s + "' (counters_every_wake or image_per_detection)");
}

void validate(const PhaseEnergy& pe) {
    if (pe.camera_mj < 0 || pe.compute_mj < 0 || pe.tx_mj_per_byte < 0 || pe.wake_overhead_mj < 0)
        fail(ErrorCode::InvalidArgument, "phase energies must be non-negative");
}

void validate(const DutyCycleConfig& c) {
    if (!(c.active_s >= 0) || !(c.wake_period_s > c.active_s))
        fail(ErrorCode::InvalidArgument, "wake period must exceed the active time");
    if (c.counter_payload_bytes == 0 || c.image_payload_bytes == 0)
        fail(ErrorCode::InvalidArgument, "payload sizes must be positive");
    if (!(c.detections_per_day >= 0) || !(c.sleep_power_uw >= 0))
        fail(ErrorCode::InvalidArgument, "detections and sleep power must be non-negative");
}

void validate(const Battery& b) {
    if (!(b.capacity_mah > 0) || !(b.voltage_v > 0) || !(b.usable_fraction > 0) ||
        b.usable_fraction > 1)
        fail(ErrorCode::InvalidArgument, "battery capacity, voltage and usable fraction must be positive");
}

double wake_cycle_energy(const PhaseEnergy& pe, uint64_t payload_bytes) {
    validate(pe);
    return pe.camera_mj + pe.compute_mj + pe.wake_overhead_mj +
           double(payload_bytes) * pe.tx_mj_per_byte;
}

EnergyLedger daily_energy(const PhaseEnergy& pe, const DutyCycleConfig& cfg,
                          const Battery& battery) {
    validate(pe);
    validate(cfg);
    validate(battery);
    const double n = kDay / cfg.wake_period_s;
    EnergyLedger l;
    l.compute_j = n * pe.compute_mj / 1e3;
    l.camera_j = n * pe.camera_mj / 1e3;
    l.overhead_j = n * pe.wake_overhead_mj / 1e3;
    l.radio_j = cfg.payload_policy == PayloadPolicy::CountersEveryWake
                    ? n * double(cfg.counter_payload_bytes) * pe.tx_mj_per_byte / 1e3
                    : cfg.detections_per_day * double(cfg.image_payload_bytes) *
                          pe.tx_mj_per_byte / 1e3;
    l.sleep_j = cfg.sleep_power_uw * 1e-6 * (kDay - n * cfg.active_s);
    l.daily_j = l.total_j();
    l.lifetime_days = battery.joules() / l.daily_j;
    return l;
}

Lifetime lifetime(const Battery& battery, double daily_j) {
    validate(battery);
    if (!(daily_j > 0))
        fail(ErrorCode::InvalidArgument, "daily energy must be positive");
    Lifetime t;
    t.fractional_days = battery.joules() / daily_j;
    t.days = uint64_t(std::floor(t.fractional_days));
    return t;
}

SimResult simulate(const PhaseEnergy& pe, const DutyCycleConfig& cfg, const Battery& battery,
                   const std::vector<double>& arrivals_s, double horizon_days) {
    validate(pe);
    validate(cfg);
    validate(battery);
    if (!(horizon_days > 0))
        fail(ErrorCode::InvalidArgument, "horizon must be positive");
    for (size_t i = 1; i < arrivals_s.size(); ++i)
        if (arrivals_s[i] < arrivals_s[i - 1])
            fail(ErrorCode::UnsortedTrace, "arrival trace is not sorted at entry " +
                                               std::to_string(i + 1));

    SimResult r;
    const double horizon = horizon_days * kDay;
    const double sleep_w = cfg.sleep_power_uw * 1e-6;
    double remaining = battery.joules();
    EnergyLedger& l = r.ledger;
    size_t next = 0;
    double t = 0;

    // Sleep from t to `until`; false when the battery dies on the way.
    auto sleep_until = [&](double until) {
        const double e = sleep_w * (until - t);
        if (e > remaining) {
            r.exhausted = true;
            r.exhausted_at_s = t + remaining / sleep_w;
            l.sleep_j += remaining;
            remaining = 0;
            t = r.exhausted_at_s;
            return false;
        }
        l.sleep_j += e;
        remaining -= e;
        t = until;
        return true;
    };

    for (uint64_t k = 1;; ++k) {
        const double wake = double(k) * cfg.wake_period_s;
        if (wake > horizon)
            break;
        if (!sleep_until(wake - cfg.active_s))
            break;
        uint64_t det = 0;
        while (next < arrivals_s.size() && arrivals_s[next] <= wake) {
            ++det;
            ++next;
        }
        WakeRecord w;
        w.index = k;
        w.time_s = wake;
        w.detections = det;
        w.payload_bytes = cfg.payload_policy == PayloadPolicy::CountersEveryWake
                              ? cfg.counter_payload_bytes
                              : det * cfg.image_payload_bytes;
        const double radio = double(w.payload_bytes) * pe.tx_mj_per_byte;
        w.energy_mj = pe.camera_mj + pe.compute_mj + pe.wake_overhead_mj + radio;
        l.camera_j += pe.camera_mj / 1e3;
        l.compute_j += pe.compute_mj / 1e3;
        l.overhead_j += pe.wake_overhead_mj / 1e3;
        l.radio_j += radio / 1e3;
        remaining -= w.energy_mj / 1e3;
        t = wake;
        if (remaining < 0) {
            r.exhausted = true;
            r.exhausted_at_s = wake;
            remaining = 0;
        }
        w.battery_j = remaining;
        r.timeline.push_back(w);
        if (r.exhausted)
            break;
    }
    if (!r.exhausted)
        sleep_until(horizon);
    r.simulated_s = t;
    l.daily_j = t > 0 ? l.total_j() / (t / kDay) : 0.0;
    l.lifetime_days = l.daily_j > 0 ? battery.joules() / l.daily_j : 0.0;
    return r;
}

std::vector<double> uniform_trace(double per_day, double days) {
    if (!(per_day >= 0) || !(days >= 0))
        fail(ErrorCode::InvalidArgument, "trace rate and length must be non-negative");
    std::vector<double> v;
    if (per_day == 0)
        return v;
    const double gap = kDay / per_day;
    const auto n = uint64_t(std::llround(per_day * days));
    v.reserve(n);
    for (uint64_t i = 0; i < n; ++i)
        v.push_back((double(i) + 0.5) * gap);
    return v;
}

std::string scenario_to_json(const Scenario& s) {
    ordered_json j = {
        {"format", "pestdet-scenario"},
        {"version", 1},
        {"name", s.name},
        {"phase",
         {{"camera_mj", s.phase.camera_mj},
          {"compute_mj", s.phase.compute_mj},
          {"tx_mj_per_byte", s.phase.tx_mj_per_byte},
          {"wake_overhead_mj", s.phase.wake_overhead_mj}}},
        {"duty_cycle",
         {{"wake_period_s", s.duty.wake_period_s},
          {"payload_policy", payload_policy_name(s.duty.payload_policy)},
          {"counter_payload_bytes", s.duty.counter_payload_bytes},
          {"image_payload_bytes", s.duty.image_payload_bytes},
          {"detections_per_day", s.duty.detections_per_day},
          {"sleep_power_uw", s.duty.sleep_power_uw},
          {"active_s", s.duty.active_s}}},
        {"battery",
         {{"capacity_mah", s.battery.capacity_mah},
          {"voltage_v", s.battery.voltage_v},
          {"usable_fraction", s.battery.usable_fraction}}},
        {"calibrated", s.calibrated},
    };
    return j.dump(2) + "\n";
}

namespace {

template <typename T>
void read_opt(const ordered_json& o, const char* key, T& out, const std::string& where) {
    auto it = o.find(key);
    if (it == o.end())
        return;
    try {
        out = it->get<T>();
    } catch (const ordered_json::exception&) {
        fail(ErrorCode::SchemaViolation, where + ": field '" + key + "' has the wrong type");
    }
}

const ordered_json& section(const ordered_json& doc, const char* key) {
    static const ordered_json empty = ordered_json::object();
    auto it = doc.find(key);
    if (it == doc.end())
        return empty;
    if (!it->is_object())
        fail(ErrorCode::SchemaViolation, std::string("scenario: '") + key + "' must be an object");
    return *it;
}

} // namespace

Scenario scenario_from_json(const std::string& text) {
    ordered_json doc;
    try {
        doc = ordered_json::parse(text);
    } catch (const ordered_json::parse_error& e) {
        fail(ErrorCode::SchemaViolation, std::string("scenario is not valid JSON: ") + e.what());
    }
    if (!doc.is_object() || doc.value("format", "") != "pestdet-scenario")
        fail(ErrorCode::SchemaViolation, "not a pestdet scenario");
    if (doc.value("version", 0) != 1)
        fail(ErrorCode::SchemaViolation, "unsupported scenario version");
    Scenario s;
    read_opt(doc, "name", s.name, "scenario");
    const auto& ph = section(doc, "phase");
    read_opt(ph, "camera_mj", s.phase.camera_mj, "phase");
    read_opt(ph, "compute_mj", s.phase.compute_mj, "phase");
    read_opt(ph, "tx_mj_per_byte", s.phase.tx_mj_per_byte, "phase");
    read_opt(ph, "wake_overhead_mj", s.phase.wake_overhead_mj, "phase");
    const auto& dc = section(doc, "duty_cycle");
    read_opt(dc, "wake_period_s", s.duty.wake_period_s, "duty_cycle");
    std::string policy = payload_policy_name(s.duty.payload_policy);
    read_opt(dc, "payload_policy", policy, "duty_cycle");
    s.duty.payload_policy = parse_payload_policy(policy);
    read_opt(dc, "counter_payload_bytes", s.duty.counter_payload_bytes, "duty_cycle");
    read_opt(dc, "image_payload_bytes", s.duty.image_payload_bytes, "duty_cycle");
    read_opt(dc, "detections_per_day", s.duty.detections_per_day, "duty_cycle");
    read_opt(dc, "sleep_power_uw", s.duty.sleep_power_uw, "duty_cycle");
    read_opt(dc, "active_s", s.duty.active_s, "duty_cycle");
    const auto& b = section(doc, "battery");
    read_opt(b, "capacity_mah", s.battery.capacity_mah, "battery");
    read_opt(b, "voltage_v", s.battery.voltage_v, "battery");
    read_opt(b, "usable_fraction", s.battery.usable_fraction, "battery");
    read_opt(doc, "calibrated", s.calibrated, "scenario");
    validate(s.phase);
    validate(s.duty);
    validate(s.battery);
    return s;
}

Scenario load_scenario(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        fail(ErrorCode::Io, "cannot open " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    try {
        return scenario_from_json(ss.str());
    } catch (const Error& e) {
        throw Error(e.code(), path.string() + ": " + e.what());
    }
}

std::vector<double> read_trace(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        fail(ErrorCode::Io, "cannot open " + path.string());
    std::vector<double> v;
    std::string line;
    for (size_t no = 1; std::getline(in, line); ++no) {
        const auto b = line.find_first_not_of(" \t\r");
        if (b == std::string::npos || line[b] == '#')
            continue;
        size_t used = 0;
        double t = 0;
        try {
            t = std::stod(line.substr(b), &used);
        } catch (const std::exception&) {
            used = 0;
        }
        const auto rest = line.find_first_not_of(" \t\r", b + used);
        if (used == 0 || rest != std::string::npos || !std::isfinite(t))
            fail(ErrorCode::SchemaViolation,
                 path.string() + ":" + std::to_string(no) + ": expected one timestamp in seconds");
        v.push_back(t);
    }
    return v;
}

std::string ledger_json(const EnergyLedger& l, const Lifetime& life) {
    ordered_json j = {{"compute_j", l.compute_j},     {"radio_j", l.radio_j},
                      {"camera_j", l.camera_j},       {"sleep_j", l.sleep_j},
                      {"overhead_j", l.overhead_j},   {"daily_j", l.daily_j},
                      {"lifetime_days", life.days},   {"lifetime_days_fractional", life.fractional_days}};
    return j.dump(2) + "\n";
}

std::string format_timeline_csv(const SimResult& r) {
    std::ostringstream o;
    o << "wake,time_s,detections,payload_bytes,energy_mj,battery_j\n";
    char buf[160];
    for (const auto& w : r.timeline) {
        std::snprintf(buf, sizeof buf, "%llu,%.3f,%llu,%llu,%.4f,%.6f\n",
                      (unsigned long long)w.index, w.time_s, (unsigned long long)w.detections,
                      (unsigned long long)w.payload_bytes, w.energy_mj, w.battery_j);
        o << buf;
    }
    return o.str();
}

} // namespace pestdet
