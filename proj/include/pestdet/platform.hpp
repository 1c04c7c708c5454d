#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace pestdet {

/// Bandwidths are bytes per compute-clock cycle.
struct MemoryTier {
    std::string name;
    uint64_t capacity = 0;
    double read_bandwidth = 1.0;
    double write_bandwidth = 1.0;
    double row_overhead = 0.0;  ///< cycles per row of a 2D (strided) transfer

    friend bool operator==(const MemoryTier&, const MemoryTier&) = default;
};

enum class EngineKind { WorkerCores, ConvAccelerator };

const char* engine_kind_name(EngineKind k);
EngineKind parse_engine_kind(const std::string& s);

struct ComputeEngine {
    std::string name;
    EngineKind kind = EngineKind::WorkerCores;
    double peak_mac_per_cycle = 1.0;
    double depthwise_derate = 1.0;
    std::vector<std::string> supported_ops;  ///< op kind names run natively
    uint32_t num_workers = 0;                ///< cores only

    bool supports(const std::string& op) const;

    friend bool operator==(const ComputeEngine&, const ComputeEngine&) = default;
};

// Utilisation constants fitted once against measured end-to-end cycle counts.
struct Calibration {
    double u_std = 1.0;                        ///< accelerator, standard/pointwise conv
    double u_dw = 1.0;                         ///< accelerator, depthwise (on top of the derate)
    double cores_eff = 1.0;                    ///< cores, MAC/cycle on standard/pointwise conv
    double cores_dw_eff = 1.0;                 ///< cores, MAC/cycle on depthwise conv
    double elementwise_bytes_per_cycle = 1.0;  ///< cores, non-MAC layers
    double tile_setup_cycles = 0.0;            ///< per L1 tile pass

    friend bool operator==(const Calibration&, const Calibration&) = default;
};

struct PlatformModel {
    std::string name;
    double clock_hz = 1.0;
    double voltage = 1.0;
    std::vector<MemoryTier> tiers;  ///< nearest first: L1, L2, extram, flash
    std::vector<ComputeEngine> engines;
    std::map<std::string, double> active_power_mw;  ///< per workload class
    double sleep_power_uw = 0.0;
    bool dma_overlap = false;
    Calibration calibration;
    std::vector<std::string> calibrated;  ///< names of fitted parameters

    const MemoryTier& tier(const std::string& name) const;
    size_t tier_index(const std::string& name) const;
    bool has_tier(const std::string& name) const;
    const ComputeEngine* find_engine(EngineKind kind) const;

    /// Throws SchemaViolation / UnknownTier on inconsistent descriptions.
    void validate() const;

    friend bool operator==(const PlatformModel&, const PlatformModel&) = default;
};

inline const std::string kTierL1 = "L1";
inline const std::string kTierL2 = "L2";
inline const std::string kTierExtRam = "extram";
inline const std::string kTierFlash = "flash";

/// "gap9" or "gap8"; UnknownPlatform otherwise.
PlatformModel builtin_platform(const std::string& name);

/// A transfer between two tiers runs at the bandwidth and per-row overhead of
/// the farther tier: rows * (bytes / rows / bandwidth + row_overhead). A 1D
/// copy is the rows == 1 case.
double transfer_cycles(const PlatformModel& p, const std::string& from, const std::string& to,
                       uint64_t bytes, uint64_t rows = 1);

std::string platform_to_json(const PlatformModel& p);
PlatformModel platform_from_json(const std::string& text);
PlatformModel load_platform(const std::filesystem::path& path);

/// Looks up `name_or_path`: an existing file is loaded, otherwise
/// `<dir>/<name>.json` is tried for each directory in `search_path`
/// (colon separated), and finally the builtins.
PlatformModel resolve_platform(const std::string& name_or_path, const std::string& search_path);

} // namespace pestdet
