#include "pestdet/platform.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "pestdet/error.hpp"

namespace pestdet {

using nlohmann::ordered_json;

const char* engine_kind_name(EngineKind k) {
    return k == EngineKind::ConvAccelerator ? "conv_accelerator" : "worker_cores";
}

EngineKind parse_engine_kind(const std::string& s) {
    if (s == "worker_cores")
        return EngineKind::WorkerCores;
    if (s == "conv_accelerator")
        return EngineKind::ConvAccelerator;
    fail(ErrorCode::InvalidArgument, "unknown engine kind '" + s + "'");
}

bool ComputeEngine::supports(const std::string& op) const {
    return std::find(supported_ops.begin(), supported_ops.end(), op) != supported_ops.end();
}

size_t PlatformModel::tier_index(const std::string& n) const {
    for (size_t i = 0; i < tiers.size(); ++i)
        if (tiers[i].name == n)
            return i;
    fail(ErrorCode::UnknownTier, "platform '" + name + "' has no memory tier '" + n + "'");
}

const MemoryTier& PlatformModel::tier(const std::string& n) const {
    return tiers[tier_index(n)];
}

bool PlatformModel::has_tier(const std::string& n) const {
    return std::any_of(tiers.begin(), tiers.end(), [&](const MemoryTier& t) { return t.name == n; });
}

const ComputeEngine* PlatformModel::find_engine(EngineKind kind) const {
    for (const auto& e : engines)
        if (e.kind == kind)
            return &e;
    return nullptr;
}

void PlatformModel::validate() const {
    if (!(clock_hz > 0) || !(voltage > 0))
        fail(ErrorCode::SchemaViolation, name + ": clock and voltage must be positive");
    std::set<std::string> names;
    for (const auto& t : tiers) {
        if (!names.insert(t.name).second)
            fail(ErrorCode::SchemaViolation, name + ": duplicate tier '" + t.name + "'");
        if (t.capacity == 0 || !(t.read_bandwidth > 0) || !(t.write_bandwidth > 0) ||
            t.row_overhead < 0)
            fail(ErrorCode::SchemaViolation, name + ": tier '" + t.name + "' has invalid parameters");
    }
    for (const auto& n : {kTierL1, kTierL2, kTierExtRam, kTierFlash})
        tier_index(n);
    if (!(tier(kTierL1).capacity < tier(kTierL2).capacity &&
          tier(kTierL2).capacity < tier(kTierExtRam).capacity))
        fail(ErrorCode::SchemaViolation, name + ": capacities must grow L1 < L2 < extram");
    if (engines.empty())
        fail(ErrorCode::SchemaViolation, name + ": no compute engines");
    for (const auto& e : engines)
        if (!(e.peak_mac_per_cycle > 0) || !(e.depthwise_derate > 0 && e.depthwise_derate <= 1))
            fail(ErrorCode::SchemaViolation, name + ": engine '" + e.name + "' has invalid peak/derate");
    if (!find_engine(EngineKind::WorkerCores))
        fail(ErrorCode::SchemaViolation, name + ": a worker_cores engine is required");
    const Calibration& c = calibration;
    if (!(c.u_std > 0 && c.u_std <= 1) || !(c.u_dw > 0 && c.u_dw <= 1) || !(c.cores_eff > 0) ||
        !(c.cores_dw_eff > 0) || !(c.elementwise_bytes_per_cycle > 0) || c.tile_setup_cycles < 0)
        fail(ErrorCode::SchemaViolation, name + ": calibration constants out of range");
    if (sleep_power_uw < 0)
        fail(ErrorCode::SchemaViolation, name + ": negative sleep power");
}

namespace {

std::vector<std::string> all_ops() {
    return {"conv2d", "depthwise_conv2d", "pointwise_conv2d", "pool", "hsigmoid", "hswish",
            "relu", "add", "mul", "resize", "ssd_head", "reshape"};
}

constexpr uint64_t kKiB = 1024;
constexpr uint64_t kMiB = 1024 * 1024;

} // namespace

PlatformModel builtin_platform(const std::string& name) {
    PlatformModel p;
    p.name = name;
    if (name == "gap9") {
        p.clock_hz = 240e6;
        p.voltage = 0.65;
        p.tiers = {{kTierL1, 128 * kKiB, 8.0, 8.0, 0.0},
                   {kTierL2, 3 * kMiB / 2, 0.8, 0.8, 0.0},
                   {kTierExtRam, 8 * kMiB, 1.0, 1.0, 4.0},
                   {kTierFlash, 64 * kMiB, 1.0, 1.0, 4.0}};
        p.engines = {{"cluster", EngineKind::WorkerCores, 32.0, 1.0, all_ops(), 8},
                     {"ne16", EngineKind::ConvAccelerator, 150.0, 1.0 / 16.0,
                      {"conv2d", "depthwise_conv2d", "pointwise_conv2d", "relu"}, 0}};
        p.active_power_mw = {{"viola_jones", 20.5}, {"cnn", 33.0}};
        p.sleep_power_uw = 43.0;
        p.dma_overlap = true;
        p.calibration = {0.62, 0.5, 12.0, 3.0, 4.0, 400.0};
        p.calibrated = {"sleep_power_uw", "tiers.extram.row_overhead", "tiers.flash.row_overhead",
                        "dma_overlap", "calibration"};
    } else if (name == "gap8") {
        p.clock_hz = 175e6;
        p.voltage = 1.2;
        p.tiers = {{kTierL1, 64 * kKiB, 8.0, 8.0, 0.0},
                   {kTierL2, 512 * kKiB, 0.8, 0.8, 0.0},
                   {kTierExtRam, 8 * kMiB, 1.0, 1.0, 46.0},
                   {kTierFlash, 64 * kMiB, 1.0, 1.0, 46.0}};
        p.engines = {{"cluster", EngineKind::WorkerCores, 32.0, 1.0, all_ops(), 8}};
        p.active_power_mw = {{"viola_jones", 79.0}, {"cnn", 79.0}};
        p.sleep_power_uw = 35.0;
        p.calibration = {1.0, 1.0, 2.0, 0.6, 4.0, 400.0};
        p.calibrated = {"sleep_power_uw", "tiers.extram.row_overhead", "tiers.flash.row_overhead",
                        "calibration"};
    } else {
        fail(ErrorCode::UnknownPlatform, "unknown platform '" + name + "' (expected gap9 or gap8)");
    }
    p.validate();
    return p;
}

double transfer_cycles(const PlatformModel& p, const std::string& from, const std::string& to,
                       uint64_t bytes, uint64_t rows) {
    const size_t fi = p.tier_index(from), ti = p.tier_index(to);
    if (bytes == 0)
        fail(ErrorCode::InvalidArgument, "transfer of zero bytes");
    if (rows == 0 || bytes % rows != 0)
        fail(ErrorCode::InvalidArgument, "transfer rows must divide the byte count");
    const bool source_far = fi >= ti;
    const MemoryTier& far = p.tiers[source_far ? fi : ti];
    const double bw = source_far ? far.read_bandwidth : far.write_bandwidth;
    return double(rows) * (double(bytes / rows) / bw + far.row_overhead);
}

std::string platform_to_json(const PlatformModel& p) {
    ordered_json tiers = ordered_json::array();
    for (const auto& t : p.tiers)
        tiers.push_back({{"name", t.name},
                         {"capacity", t.capacity},
                         {"read_bandwidth", t.read_bandwidth},
                         {"write_bandwidth", t.write_bandwidth},
                         {"row_overhead", t.row_overhead}});
    ordered_json engines = ordered_json::array();
    for (const auto& e : p.engines)
        engines.push_back({{"name", e.name},
                           {"kind", engine_kind_name(e.kind)},
                           {"peak_mac_per_cycle", e.peak_mac_per_cycle},
                           {"depthwise_derate", e.depthwise_derate},
                           {"num_workers", e.num_workers},
                           {"supported_ops", e.supported_ops}});
    const Calibration& c = p.calibration;
    ordered_json doc = {
        {"format", "pestdet-platform"},
        {"version", 1},
        {"name", p.name},
        {"clock_hz", p.clock_hz},
        {"voltage", p.voltage},
        {"tiers", tiers},
        {"engines", engines},
        {"active_power_mw", p.active_power_mw},
        {"sleep_power_uw", p.sleep_power_uw},
        {"dma_overlap", p.dma_overlap},
        {"calibration",
         {{"u_std", c.u_std},
          {"u_dw", c.u_dw},
          {"cores_eff", c.cores_eff},
          {"cores_dw_eff", c.cores_dw_eff},
          {"elementwise_bytes_per_cycle", c.elementwise_bytes_per_cycle},
          {"tile_setup_cycles", c.tile_setup_cycles}}},
        {"calibrated", p.calibrated},
    };
    return doc.dump(2) + "\n";
}

namespace {

const ordered_json& field(const ordered_json& o, const char* key, const std::string& where) {
    if (!o.is_object())
        fail(ErrorCode::SchemaViolation, where + ": expected an object");
    auto it = o.find(key);
    if (it == o.end())
        fail(ErrorCode::MissingField, where + ": missing field '" + key + "'");
    return *it;
}

template <typename T>
T get(const ordered_json& o, const char* key, const std::string& where) {
    try {
        return field(o, key, where).get<T>();
    } catch (const ordered_json::exception&) {
        fail(ErrorCode::SchemaViolation, where + ": field '" + key + "' has the wrong type");
    }
}

template <typename T>
T get_or(const ordered_json& o, const char* key, const std::string& where, T fallback) {
    if (!o.contains(key))
        return fallback;
    return get<T>(o, key, where);
}

} // namespace

PlatformModel platform_from_json(const std::string& text) {
    ordered_json doc;
    try {
        doc = ordered_json::parse(text);
    } catch (const ordered_json::parse_error& e) {
        fail(ErrorCode::SchemaViolation, std::string("platform file is not valid JSON: ") + e.what());
    }
    const std::string w = "platform";
    if (get<std::string>(doc, "format", w) != "pestdet-platform")
        fail(ErrorCode::SchemaViolation, "not a pestdet platform file");
    if (get<int>(doc, "version", w) != 1)
        fail(ErrorCode::SchemaViolation, "unsupported platform file version");
    PlatformModel p;
    p.name = get<std::string>(doc, "name", w);
    p.clock_hz = get<double>(doc, "clock_hz", w);
    p.voltage = get<double>(doc, "voltage", w);
    for (const auto& t : field(doc, "tiers", w)) {
        MemoryTier m;
        m.name = get<std::string>(t, "name", "tier");
        const std::string tw = "tier " + m.name;
        m.capacity = get<uint64_t>(t, "capacity", tw);
        m.read_bandwidth = get<double>(t, "read_bandwidth", tw);
        m.write_bandwidth = get<double>(t, "write_bandwidth", tw);
        m.row_overhead = get_or<double>(t, "row_overhead", tw, 0.0);
        p.tiers.push_back(m);
    }
    for (const auto& e : field(doc, "engines", w)) {
        ComputeEngine ce;
        ce.name = get<std::string>(e, "name", "engine");
        const std::string ew = "engine " + ce.name;
        ce.kind = parse_engine_kind(get<std::string>(e, "kind", ew));
        ce.peak_mac_per_cycle = get<double>(e, "peak_mac_per_cycle", ew);
        ce.depthwise_derate = get_or<double>(e, "depthwise_derate", ew, 1.0);
        ce.num_workers = get_or<uint32_t>(e, "num_workers", ew, 0);
        ce.supported_ops = get<std::vector<std::string>>(e, "supported_ops", ew);
        p.engines.push_back(ce);
    }
    p.active_power_mw = get<std::map<std::string, double>>(doc, "active_power_mw", w);
    p.sleep_power_uw = get<double>(doc, "sleep_power_uw", w);
    p.dma_overlap = get_or<bool>(doc, "dma_overlap", w, false);
    const auto& c = field(doc, "calibration", w);
    p.calibration.u_std = get<double>(c, "u_std", "calibration");
    p.calibration.u_dw = get<double>(c, "u_dw", "calibration");
    p.calibration.cores_eff = get<double>(c, "cores_eff", "calibration");
    p.calibration.cores_dw_eff = get<double>(c, "cores_dw_eff", "calibration");
    p.calibration.elementwise_bytes_per_cycle =
        get<double>(c, "elementwise_bytes_per_cycle", "calibration");
    p.calibration.tile_setup_cycles = get<double>(c, "tile_setup_cycles", "calibration");
    p.calibrated = get_or<std::vector<std::string>>(doc, "calibrated", w, {});
    p.validate();
    return p;
}

PlatformModel load_platform(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        fail(ErrorCode::Io, "cannot open " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    try {
        return platform_from_json(ss.str());
    } catch (const Error& e) {
        throw Error(e.code(), path.string() + ": " + e.what());
    }
}

PlatformModel resolve_platform(const std::string& name_or_path, const std::string& search_path) {
    if (std::filesystem::is_regular_file(name_or_path))
        return load_platform(name_or_path);
    std::stringstream dirs(search_path);
    std::string dir;
    while (std::getline(dirs, dir, ':')) {
        if (dir.empty())
            continue;
        const auto candidate = std::filesystem::path(dir) / (name_or_path + ".json");
        if (std::filesystem::is_regular_file(candidate))
            return load_platform(candidate);
    }
    return builtin_platform(name_or_path);
}

} // namespace pestdet
