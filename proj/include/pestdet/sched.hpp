#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "pestdet/cnngraph.hpp"
#include "pestdet/platform.hpp"

namespace pestdet {

struct BudgetConfig {
    std::string label;
    uint64_t l1_bytes = 115600;
    uint64_t l2_bytes = 1200000;
    EngineKind engine = EngineKind::ConvAccelerator;
    std::optional<bool> dma_overlap;  ///< unset: take the platform's setting

    void validate(const PlatformModel& p) const;
};

enum class TransferClass { L2Resident = 0, Ext1d = 1, Ext2d = 2 };

const char* transfer_class_name(TransferClass c);

struct TilePlan {
    uint32_t rows = 0;      ///< output rows per tile
    uint32_t channels = 0;  ///< output channels per tile
    uint32_t row_tiles = 0;
    uint32_t channel_tiles = 0;
    bool weights_outer = false;  ///< loop order: weight slices outside row tiles
    uint64_t l1_bytes = 0;       ///< working set of one tile

    uint64_t passes() const { return uint64_t(row_tiles) * channel_tiles; }
};

struct LayerPlan {
    std::string name;
    std::string weight_home;  ///< "" for layers without weights
    std::vector<std::string> input_homes;
    std::string output_home;
    TransferClass transfer_class = TransferClass::L2Resident;
    TilePlan tile;
    bool fused = false;    ///< activation folded into the producing convolution
    bool in_place = false; ///< output reuses the buffer of inputs[0]
};

struct Schedule {
    std::string graph;
    std::string platform;
    BudgetConfig budget;
    std::vector<LayerPlan> layers;  ///< graph order
    uint64_t l2_peak = 0;
    uint64_t ext_peak = 0;
};

/// Buffers are ranked by size (smallest first, later producer first among
/// equals). A buffer goes to L2 when, at every step of its lifetime, it fits
/// next to all lower-ranked live buffers; otherwise activations go to extram
/// and weights stay in flash. Growing l2_bytes only ever moves buffers inward.
/// Throws L1Overflow naming the layer whose smallest tile does not fit,
/// BudgetTooSmall when external RAM overflows.
Schedule plan_schedule(const LayerGraph& g, const PlatformModel& p, const BudgetConfig& b);

struct LayerCost {
    std::string name;
    TransferClass transfer_class = TransferClass::L2Resident;
    uint64_t macs = 0;
    double compute_cycles = 0;
    double transfer_cycles = 0;
    double total_cycles = 0;
};

struct LatencyReport {
    std::vector<LayerCost> layers;
    uint64_t macs = 0;
    double compute_cycles = 0;
    double transfer_cycles = 0;
    double total_cycles = 0;
    std::array<double, 3> class_cycles{};           ///< total cycles by TransferClass
    std::array<double, 3> class_transfer_cycles{};  ///< transfer cycles by TransferClass
    double mac_per_cycle = 0;
    double wall_ms = 0;
    bool dma_overlap = false;

    double class_share(TransferClass c) const;
};

LatencyReport estimate_latency(const Schedule& s, const LayerGraph& g, const PlatformModel& p);

struct BudgetComparison {
    std::vector<BudgetConfig> budgets;
    std::vector<Schedule> schedules;
    std::vector<LatencyReport> reports;
    std::vector<double> speedup;  ///< cycles of the first budget over each budget's cycles
    bool monotone = true;         ///< no budget that dominates another is slower
};

BudgetComparison compare_budgets(const LayerGraph& g, const PlatformModel& p,
                                 const std::vector<BudgetConfig>& budgets);

std::string format_schedule_csv(const Schedule& s, const LatencyReport& r);
std::string latency_summary_json(const Schedule& s, const LatencyReport& r);
std::string format_comparison_csv(const BudgetComparison& c);
std::string comparison_json(const BudgetComparison& c);

/// Parses "LABEL:L1:L2" or "L1:L2" with optional k/M suffixes (decimal).
BudgetConfig parse_budget(const std::string& spec);

} // namespace pestdet
