#include "pestdet/sched.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "json.hpp"
#include "pestdet/error.hpp"

namespace pestdet {

using nlohmann::ordered_json;

void BudgetConfig::validate(const PlatformModel& p) const {
    if (l1_bytes == 0 || l2_bytes == 0)
        fail(ErrorCode::InvalidArgument, "budget '" + label + "': buffer sizes must be positive");
    if (l1_bytes >= l2_bytes)
        fail(ErrorCode::InvalidArgument, "budget '" + label + "': L1 budget must be below L2");
    if (l1_bytes > p.tier(kTierL1).capacity || l2_bytes > p.tier(kTierL2).capacity)
        fail(ErrorCode::InvalidArgument,
             "budget '" + label + "' exceeds the on-chip memories of " + p.name);
    if (!p.find_engine(engine))
        fail(ErrorCode::InvalidArgument,
             p.name + " has no " + std::string(engine_kind_name(engine)) + " engine");
}

const char* transfer_class_name(TransferClass c) {
    switch (c) {
    case TransferClass::L2Resident:
        return "l2_resident";
    case TransferClass::Ext1d:
        return "ext_1d";
    case TransferClass::Ext2d:
        return "ext_2d";
    }
    return "?";
}

double LatencyReport::class_share(TransferClass c) const {
    return total_cycles > 0 ? class_cycles[size_t(c)] / total_cycles : 0.0;
}

namespace {

bool is_activation(OpKind k) {
    return k == OpKind::Relu || k == OpKind::Hswish || k == OpKind::Hsigmoid;
}

bool may_run_in_place(OpKind k) {
    return is_activation(k) || k == OpKind::Add || k == OpKind::Mul || k == OpKind::Reshape;
}

uint64_t ceil_div(uint64_t a, uint64_t b) {
    return (a + b - 1) / b;
}

// Busy time per (tier, direction) channel. Channels run concurrently, so a
// layer's transfers take as long as the busiest one.
struct Channels {
    const PlatformModel& p;
    std::map<std::pair<std::string, bool>, double> busy;

    void hop(const std::string& far, bool read, double bytes, double rows) {
        const MemoryTier& t = p.tier(far);
        busy[{far, read}] += bytes / (read ? t.read_bandwidth : t.write_bandwidth) +
                             rows * t.row_overhead;
    }

    // Data between its home and L1. Off-chip data is staged through L2 and
    // also occupies the L2 port facing the other way.
    void move(const std::string& home, bool read, double bytes, double rows) {
        if (bytes <= 0)
            return;
        hop(kTierL2, read, bytes, rows);
        if (home != kTierL2) {
            hop(home, read, bytes, rows);
            hop(kTierL2, !read, bytes, 0);
        }
    }

    double cycles() const {
        double m = 0;
        for (const auto& [k, v] : busy)
            m = std::max(m, v);
        return m;
    }
};

bool off_chip(const std::string& home) {
    return home == kTierExtRam || home == kTierFlash;
}

struct Costing {
    const PlatformModel& p;
    EngineKind engine;
    bool overlap;

    const ComputeEngine* accelerator() const {
        return engine == EngineKind::ConvAccelerator ? p.find_engine(EngineKind::ConvAccelerator)
                                                     : nullptr;
    }

    double conv_compute(const Layer& l, uint64_t macs) const {
        const Calibration& c = p.calibration;
        const bool dw = l.op == OpKind::DepthwiseConv2d;
        const ComputeEngine* acc = accelerator();
        if (acc && acc->supports(op_kind_name(l.op)))
            return double(macs) /
                   (acc->peak_mac_per_cycle * (dw ? acc->depthwise_derate * c.u_dw : c.u_std));
        return double(macs) / (dw ? c.cores_dw_eff : c.cores_eff);
    }

    double fused_compute(const Layer& act, uint64_t out_bytes) const {
        const ComputeEngine* acc = accelerator();
        if (acc && acc->supports(op_kind_name(act.op)))
            return 0;
        return double(out_bytes) / p.calibration.elementwise_bytes_per_cycle;
    }

    double combine(double compute, double transfer) const {
        return overlap ? std::max(compute, transfer) : compute + transfer;
    }
};

struct ConvTraffic {
    double compute = 0;
    double transfer = 0;
    bool two_d = false;
};

struct ConvGeometry {
    const Layer& l;
    uint64_t eb;
    uint32_t cin, cout, hin, win, hout, wout;
    std::vector<uint64_t> rows_total_cache;

    ConvGeometry(const Layer& layer, uint32_t element_bytes)
        : l(layer), eb(element_bytes), cin(layer.in_shape.c), cout(layer.out_shape.c),
          hin(layer.in_shape.h), win(layer.in_shape.w), hout(layer.out_shape.h),
          wout(layer.out_shape.w), rows_total_cache(layer.out_shape.h + 1, 0) {}

    uint64_t rows_in(uint32_t th) const {
        return std::min<uint64_t>(hin, uint64_t(th - 1) * l.stride + l.kh);
    }

    uint64_t cin_tile(uint32_t tc) const {
        const uint64_t per_group_out = cout / l.groups;
        return std::min<uint64_t>(cin, ceil_div(tc, per_group_out) * (cin / l.groups));
    }

    uint64_t weight_slice(uint32_t tc) const {
        return (uint64_t(l.kh) * l.kw * (cin / l.groups) * tc + tc) * eb;
    }

    uint64_t working_set(uint32_t th, uint32_t tc) const {
        return cin_tile(tc) * rows_in(th) * win * eb + weight_slice(tc) +
               uint64_t(tc) * th * wout * eb;
    }

    // Input rows fetched over all row tiles (halo rows are fetched twice).
    uint64_t rows_total(uint32_t th) {
        uint64_t& v = rows_total_cache[th];
        if (v)
            return v;
        for (uint32_t r0 = 0; r0 < hout; r0 += th) {
            const uint32_t r1 = std::min(hout, r0 + th);
            const int64_t a = std::max<int64_t>(0, int64_t(r0) * l.stride - l.padding);
            const int64_t b =
                std::min<int64_t>(hin, int64_t(r1 - 1) * l.stride - l.padding + l.kh);
            v += uint64_t(std::max<int64_t>(0, b - a));
        }
        return v;
    }

    ConvTraffic traffic(const Costing& cost, const TilePlan& t, const std::string& in_home,
                        const std::string& w_home, const std::string& out_home) {
        const uint64_t R = t.row_tiles, C = t.channel_tiles;
        const bool grouped = l.groups > 1;
        const bool split_rows = R > 1;
        const uint64_t ct = cin_tile(t.channels);

        uint64_t in_fetches;
        uint64_t in_channel_loads;
        uint64_t w_fetches;
        double w_bytes;
        const double w_total = double(l.param_count) * eb;
        if (grouped) {
            in_fetches = R * C;
            in_channel_loads = cin;
            w_fetches = t.weights_outer || C == 1 ? C : R * C;
            w_bytes = t.weights_outer || C == 1 ? w_total : w_total * R;
        } else if (t.weights_outer) {
            in_fetches = R == 1 ? 1 : R * C;
            in_channel_loads = R == 1 ? cin : uint64_t(cin) * C;
            w_fetches = C;
            w_bytes = w_total;
        } else {
            in_fetches = R;
            in_channel_loads = cin;
            w_fetches = C == 1 ? 1 : R * C;
            w_bytes = C == 1 ? w_total : w_total * R;
        }
        const double in_bytes = double(in_channel_loads) * rows_total(t.rows) * win * eb;
        const double in_rows = double(in_fetches) * (split_rows ? double(ct) : 1.0);
        const double out_bytes = double(l.out_shape.elements()) * eb;
        const double out_rows = double(R * C) * (split_rows ? double(t.channels) : 1.0);

        ConvTraffic tr;
        Channels ch{cost.p, {}};
        ch.move(in_home, true, in_bytes, in_rows);
        ch.move(w_home, true, w_bytes, double(w_fetches));
        ch.move(out_home, false, out_bytes, out_rows);
        tr.transfer = ch.cycles();
        tr.compute = cost.conv_compute(l, count_macs(l)) +
                     cost.p.calibration.tile_setup_cycles * double(R * C);
        tr.two_d = split_rows && (off_chip(in_home) || off_chip(out_home));
        return tr;
    }

    TilePlan make_tile(uint32_t th, uint32_t tc, bool weights_outer) const {
        TilePlan t;
        t.rows = th;
        t.channels = tc;
        t.row_tiles = uint32_t(ceil_div(hout, th));
        t.channel_tiles = uint32_t(ceil_div(cout, tc));
        t.weights_outer = weights_outer;
        t.l1_bytes = working_set(th, tc);
        return t;
    }
};

// Smallest-cost tile; ties go to the larger tile.
TilePlan best_conv_tile(ConvGeometry& geo, const Costing& cost, uint64_t l1,
                        const std::string& in_home, const std::string& w_home,
                        const std::string& out_home) {
    if (geo.working_set(1, 1) > l1)
        fail(ErrorCode::L1Overflow, "layer '" + geo.l.name + "' needs " +
                                        std::to_string(geo.working_set(1, 1)) +
                                        " B of L1 for its smallest tile, budget is " +
                                        std::to_string(l1) + " B");
    TilePlan best;
    double best_cost = 0;
    uint64_t best_size = 0;
    bool have = false;
    for (uint32_t tc = 1; tc <= geo.cout; ++tc) {
        if (geo.working_set(1, tc) > l1)
            break;
        // Largest row count that still fits for this channel count.
        uint32_t lo = 1, hi = geo.hout;
        while (lo < hi) {
            const uint32_t mid = lo + (hi - lo + 1) / 2;
            if (geo.working_set(mid, tc) <= l1)
                lo = mid;
            else
                hi = mid - 1;
        }
        // Rebalance so the last row tile is not a sliver.
        const uint32_t R = uint32_t(ceil_div(geo.hout, lo));
        const uint32_t th = uint32_t(ceil_div(geo.hout, R));
        const uint32_t C = uint32_t(ceil_div(geo.cout, tc));
        const uint32_t tcb = uint32_t(ceil_div(geo.cout, C));
        if (tcb != tc)
            continue;
        for (bool wo : {false, true}) {
            const TilePlan t = geo.make_tile(th, tcb, wo);
            const ConvTraffic tr = geo.traffic(cost, t, in_home, w_home, out_home);
            const double c = cost.combine(tr.compute, tr.transfer);
            const uint64_t size = uint64_t(th) * tcb;
            if (!have || c < best_cost || (c == best_cost && size > best_size)) {
                best = t;
                best_cost = c;
                best_size = size;
                have = true;
            }
        }
    }
    return best;
}

struct Buffer {
    uint64_t bytes = 0;
    int64_t first = 0;
    int64_t last = 0;
    std::string home;
};

struct Placement {
    std::vector<size_t> buffer_of;      ///< tensor -> buffer; tensor 0 is the graph input
    std::vector<int64_t> weight_buffer; ///< layer -> buffer or -1
    std::vector<bool> fused, in_place;
    std::vector<Buffer> buffers;
};

Placement place(const LayerGraph& g, const PlatformModel& p, const BudgetConfig& b) {
    const size_t n = g.layers.size();
    const int64_t end = int64_t(n);
    std::map<std::string, size_t> tensor_index{{g.input_name, 0}};
    for (size_t i = 0; i < n; ++i)
        tensor_index[g.layers[i].name] = i + 1;
    std::vector<int64_t> last_use(n + 1, -1);
    std::vector<size_t> uses(n + 1, 0);
    for (size_t i = 0; i < n; ++i)
        for (const auto& in : g.layers[i].inputs) {
            const size_t t = tensor_index.at(in);
            last_use[t] = std::max<int64_t>(last_use[t], int64_t(i));
            ++uses[t];
        }
    for (size_t t = 0; t <= n; ++t)
        if (uses[t] == 0)
            last_use[t] = end;  // graph outputs stay until the end

    Placement pl;
    pl.buffer_of.assign(n + 1, 0);
    pl.weight_buffer.assign(n, -1);
    pl.fused.assign(n, false);
    pl.in_place.assign(n, false);
    pl.buffers.push_back({g.tensor_bytes(g.input_name), 0, last_use[0], ""});
    for (size_t i = 0; i < n; ++i) {
        const Layer& l = g.layers[i];
        const uint64_t bytes = l.out_shape.elements() * g.element_bytes;
        const size_t src = tensor_index.at(l.inputs.front());
        const bool fusable = is_activation(l.op) && src == i && src >= 1 &&
                             is_conv(g.layers[src - 1].op) && uses[src] == 1;
        const bool in_place = !fusable && may_run_in_place(l.op) &&
                              last_use[src] == int64_t(i) && g.tensor_bytes(l.inputs.front()) == bytes;
        if (fusable || in_place) {
            const size_t buf = pl.buffer_of[src];
            pl.buffer_of[i + 1] = buf;
            pl.buffers[buf].last = std::max(pl.buffers[buf].last, last_use[i + 1]);
            pl.fused[i] = fusable;
            pl.in_place[i] = in_place;
        } else {
            pl.buffer_of[i + 1] = pl.buffers.size();
            pl.buffers.push_back({bytes, int64_t(i), last_use[i + 1], ""});
        }
        if (l.param_count > 0) {
            pl.weight_buffer[i] = int64_t(pl.buffers.size());
            pl.buffers.push_back({l.param_count * g.element_bytes, int64_t(i), int64_t(i), ""});
        }
    }

    // Buffers are ranked smallest first, later producers first among equals.
    // One goes to L2 when, at every step of
    // its lifetime, it fits together with all lower-ranked buffers live then.
    // The test ignores where those went, so a larger budget only ever moves
    // buffers inward and the L2 occupancy never exceeds the budget.
    std::vector<bool> is_weight(pl.buffers.size(), false);
    for (int64_t w : pl.weight_buffer)
        if (w >= 0)
            is_weight[size_t(w)] = true;
    std::vector<size_t> rank(pl.buffers.size());
    for (size_t k = 0; k < rank.size(); ++k)
        rank[k] = k;
    std::stable_sort(rank.begin(), rank.end(), [&](size_t a, size_t c) {
        const Buffer &x = pl.buffers[a], &y = pl.buffers[c];
        return x.bytes != y.bytes ? x.bytes < y.bytes : x.first > y.first;
    });
    std::vector<uint64_t> live(n + 1, 0);
    for (size_t k : rank) {
        Buffer& buf = pl.buffers[k];
        uint64_t peak = 0;
        for (int64_t t = buf.first; t <= buf.last; ++t) {
            live[size_t(t)] += buf.bytes;
            peak = std::max(peak, live[size_t(t)]);
        }
        buf.home = peak <= b.l2_bytes ? kTierL2 : (is_weight[k] ? kTierFlash : kTierExtRam);
    }
    (void)p;
    return pl;
}

LayerCost cost_layer(const Layer& l, const LayerPlan& lp, const LayerPlan* producer,
                     const LayerGraph& g, const Costing& cost) {
    LayerCost c;
    c.name = l.name;
    c.macs = count_macs(l);
    const uint64_t eb = g.element_bytes;
    const Calibration& cal = cost.p.calibration;
    if (lp.fused) {
        c.transfer_class = producer ? producer->transfer_class : TransferClass::L2Resident;
        c.compute_cycles = cost.fused_compute(l, l.out_shape.elements() * eb);
    } else if (is_conv(l.op)) {
        ConvGeometry geo(l, g.element_bytes);
        const ConvTraffic tr =
            geo.traffic(cost, lp.tile, lp.input_homes.front(), lp.weight_home, lp.output_home);
        c.compute_cycles = tr.compute;
        c.transfer_cycles = tr.transfer;
        c.transfer_class = tr.two_d ? TransferClass::Ext2d
                           : (off_chip(lp.input_homes.front()) || off_chip(lp.weight_home) ||
                              off_chip(lp.output_home))
                               ? TransferClass::Ext1d
                               : TransferClass::L2Resident;
    } else {
        const double passes = double(lp.tile.passes());
        double bytes = 0;
        bool ext = off_chip(lp.output_home);
        Channels ch{cost.p, {}};
        for (size_t k = 0; k < l.inputs.size(); ++k) {
            const double in = double(g.tensor_bytes(l.inputs[k]));
            bytes += in;
            ch.move(lp.input_homes[k], true, in, passes);
            ext = ext || off_chip(lp.input_homes[k]);
        }
        const double out = double(l.out_shape.elements() * eb);
        bytes += out;
        ch.move(lp.output_home, false, out, passes);
        c.transfer_cycles = ch.cycles();
        c.compute_cycles = bytes / cal.elementwise_bytes_per_cycle + cal.tile_setup_cycles * passes;
        c.transfer_class = ext ? TransferClass::Ext1d : TransferClass::L2Resident;
    }
    c.total_cycles = cost.combine(c.compute_cycles, c.transfer_cycles);
    return c;
}

} // namespace

Schedule plan_schedule(const LayerGraph& g, const PlatformModel& p, const BudgetConfig& b) {
    b.validate(p);
    const Costing cost{p, b.engine, b.dma_overlap.value_or(p.dma_overlap)};
    const Placement pl = place(g, p, b);
    Schedule s;
    s.graph = g.name;
    s.platform = p.name;
    s.budget = b;
    std::map<std::string, size_t> tensor_index{{g.input_name, 0}};
    for (size_t i = 0; i < g.layers.size(); ++i)
        tensor_index[g.layers[i].name] = i + 1;
    auto home_of = [&](const std::string& t) {
        return pl.buffers[pl.buffer_of[tensor_index.at(t)]].home;
    };

    for (size_t i = 0; i < g.layers.size(); ++i) {
        const Layer& l = g.layers[i];
        LayerPlan lp;
        lp.name = l.name;
        for (const auto& in : l.inputs)
            lp.input_homes.push_back(home_of(in));
        lp.output_home = home_of(l.name);
        if (pl.weight_buffer[i] >= 0)
            lp.weight_home = pl.buffers[size_t(pl.weight_buffer[i])].home;
        lp.fused = pl.fused[i];
        lp.in_place = pl.in_place[i];
        if (lp.fused) {
            lp.tile = s.layers.back().tile;
        } else if (is_conv(l.op)) {
            ConvGeometry geo(l, g.element_bytes);
            lp.tile = best_conv_tile(geo, cost, b.l1_bytes, lp.input_homes.front(), lp.weight_home,
                                     lp.output_home);
        } else {
            uint64_t bytes = l.out_shape.elements() * g.element_bytes;
            for (const auto& in : l.inputs)
                bytes += g.tensor_bytes(in);
            lp.tile.row_tiles = uint32_t(ceil_div(bytes, b.l1_bytes));
            lp.tile.channel_tiles = 1;
            lp.tile.rows = uint32_t(ceil_div(l.out_shape.h, lp.tile.row_tiles));
            lp.tile.channels = l.out_shape.c;
            lp.tile.l1_bytes = ceil_div(bytes, lp.tile.row_tiles);
        }
        const LayerCost c = cost_layer(l, lp, lp.fused ? &s.layers.back() : nullptr, g, cost);
        lp.transfer_class = c.transfer_class;
        s.layers.push_back(std::move(lp));
    }

    const size_t steps = g.layers.size() + 1;
    std::vector<uint64_t> l2(steps, 0), ext(steps, 0);
    for (const auto& buf : pl.buffers) {
        auto& occ = buf.home == kTierL2 ? l2 : ext;
        if (buf.home == kTierFlash)
            continue;
        for (int64_t t = buf.first; t <= buf.last; ++t)
            occ[size_t(t)] += buf.bytes;
    }
    s.l2_peak = *std::max_element(l2.begin(), l2.end());
    s.ext_peak = *std::max_element(ext.begin(), ext.end());
    if (s.ext_peak > p.tier(kTierExtRam).capacity)
        fail(ErrorCode::BudgetTooSmall, "activations need " + std::to_string(s.ext_peak) +
                                            " B of external RAM, " + p.name + " has " +
                                            std::to_string(p.tier(kTierExtRam).capacity));
    return s;
}

LatencyReport estimate_latency(const Schedule& s, const LayerGraph& g, const PlatformModel& p) {
    if (s.layers.size() != g.layers.size())
        fail(ErrorCode::InvalidArgument, "schedule does not belong to graph '" + g.name + "'");
    const Costing cost{p, s.budget.engine, s.budget.dma_overlap.value_or(p.dma_overlap)};
    LatencyReport r;
    r.dma_overlap = cost.overlap;
    for (size_t i = 0; i < g.layers.size(); ++i) {
        if (s.layers[i].name != g.layers[i].name)
            fail(ErrorCode::InvalidArgument, "schedule does not belong to graph '" + g.name + "'");
        const LayerCost c =
            cost_layer(g.layers[i], s.layers[i], i > 0 ? &s.layers[i - 1] : nullptr, g, cost);
        r.macs += c.macs;
        r.compute_cycles += c.compute_cycles;
        r.transfer_cycles += c.transfer_cycles;
        r.total_cycles += c.total_cycles;
        r.class_cycles[size_t(c.transfer_class)] += c.total_cycles;
        r.class_transfer_cycles[size_t(c.transfer_class)] += c.transfer_cycles;
        r.layers.push_back(c);
    }
    r.mac_per_cycle = r.total_cycles > 0 ? double(r.macs) / r.total_cycles : 0.0;
    r.wall_ms = r.total_cycles / p.clock_hz * 1e3;
    return r;
}

BudgetComparison compare_budgets(const LayerGraph& g, const PlatformModel& p,
                                 const std::vector<BudgetConfig>& budgets) {
    if (budgets.size() < 2)
        fail(ErrorCode::InvalidArgument, "a budget comparison needs at least two budgets");
    BudgetComparison c;
    c.budgets = budgets;
    for (const auto& b : budgets) {
        c.schedules.push_back(plan_schedule(g, p, b));
        c.reports.push_back(estimate_latency(c.schedules.back(), g, p));
    }
    for (const auto& r : c.reports)
        c.speedup.push_back(c.reports.front().total_cycles / r.total_cycles);
    for (size_t i = 0; i < budgets.size(); ++i)
        for (size_t j = 0; j < budgets.size(); ++j) {
            const auto &a = budgets[i], &b = budgets[j];
            const bool dominates = b.l1_bytes >= a.l1_bytes && b.l2_bytes >= a.l2_bytes &&
                                   b.engine == a.engine &&
                                   c.reports[i].dma_overlap == c.reports[j].dma_overlap;
            if (dominates && c.reports[j].total_cycles > c.reports[i].total_cycles)
                c.monotone = false;
        }
    return c;
}

namespace {

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.1f", v);
    return buf;
}

std::string join_homes(const std::vector<std::string>& homes) {
    std::string s;
    for (const auto& h : homes)
        s += (s.empty() ? "" : "|") + h;
    return s;
}

ordered_json budget_json(const BudgetConfig& b, bool overlap) {
    return {{"label", b.label},
            {"l1_bytes", b.l1_bytes},
            {"l2_bytes", b.l2_bytes},
            {"engine", engine_kind_name(b.engine)},
            {"dma_overlap", overlap}};
}

ordered_json report_json(const LatencyReport& r) {
    ordered_json classes = ordered_json::object();
    for (auto c : {TransferClass::L2Resident, TransferClass::Ext1d, TransferClass::Ext2d})
        classes[transfer_class_name(c)] = {
            {"cycles", r.class_cycles[size_t(c)]},
            {"transfer_cycles", r.class_transfer_cycles[size_t(c)]},
            {"share", r.class_share(c)}};
    return {{"macs", r.macs},
            {"compute_cycles", r.compute_cycles},
            {"transfer_cycles", r.transfer_cycles},
            {"total_cycles", r.total_cycles},
            {"mac_per_cycle", r.mac_per_cycle},
            {"wall_ms", r.wall_ms},
            {"classes", classes}};
}

} // namespace

std::string format_schedule_csv(const Schedule& s, const LatencyReport& r) {
    std::ostringstream o;
    o << "layer,weight_home,input_home,output_home,class,tile_rows,tile_channels,passes,"
         "fused,macs,compute_cycles,transfer_cycles,total_cycles\n";
    for (size_t i = 0; i < s.layers.size(); ++i) {
        const LayerPlan& lp = s.layers[i];
        const LayerCost& c = r.layers[i];
        o << lp.name << ',' << (lp.weight_home.empty() ? "-" : lp.weight_home) << ','
          << join_homes(lp.input_homes) << ',' << lp.output_home << ','
          << transfer_class_name(lp.transfer_class) << ',' << lp.tile.rows << ','
          << lp.tile.channels << ',' << lp.tile.passes() << ',' << (lp.fused ? 1 : 0) << ','
          << c.macs << ',' << fmt(c.compute_cycles) << ',' << fmt(c.transfer_cycles) << ','
          << fmt(c.total_cycles) << '\n';
    }
    return o.str();
}

std::string latency_summary_json(const Schedule& s, const LatencyReport& r) {
    ordered_json j = {{"graph", s.graph},
                      {"platform", s.platform},
                      {"budget", budget_json(s.budget, r.dma_overlap)},
                      {"l2_peak_bytes", s.l2_peak},
                      {"ext_peak_bytes", s.ext_peak}};
    const ordered_json rep = report_json(r);
    for (auto it = rep.begin(); it != rep.end(); ++it)
        j[it.key()] = it.value();
    return j.dump(2) + "\n";
}

std::string format_comparison_csv(const BudgetComparison& c) {
    std::ostringstream o;
    o << "budget,l1_bytes,l2_bytes,engine,total_cycles,wall_ms,mac_per_cycle,l2_resident_share,"
         "speedup\n";
    char buf[64];
    for (size_t i = 0; i < c.budgets.size(); ++i) {
        const auto& b = c.budgets[i];
        const auto& r = c.reports[i];
        o << b.label << ',' << b.l1_bytes << ',' << b.l2_bytes << ',' << engine_kind_name(b.engine)
          << ',' << fmt(r.total_cycles) << ',';
        std::snprintf(buf, sizeof buf, "%.3f,%.3f,%.4f,%.4f", r.wall_ms, r.mac_per_cycle,
                      r.class_share(TransferClass::L2Resident), c.speedup[i]);
        o << buf << '\n';
    }
    return o.str();
}

std::string comparison_json(const BudgetComparison& c) {
    ordered_json points = ordered_json::array();
    for (size_t i = 0; i < c.budgets.size(); ++i) {
        ordered_json pt = {{"budget", budget_json(c.budgets[i], c.reports[i].dma_overlap)},
                           {"l2_peak_bytes", c.schedules[i].l2_peak},
                           {"ext_peak_bytes", c.schedules[i].ext_peak},
                           {"speedup", c.speedup[i]}};
        const ordered_json rep = report_json(c.reports[i]);
        for (auto it = rep.begin(); it != rep.end(); ++it)
            pt[it.key()] = it.value();
        points.push_back(pt);
    }
    return ordered_json{{"points", points}, {"monotone", c.monotone}}.dump(2) + "\n";
}

namespace {

uint64_t parse_bytes(const std::string& s, const std::string& whole) {
    if (s.empty())
        fail(ErrorCode::InvalidArgument, "bad budget '" + whole + "'");
    double mult = 1;
    std::string num = s;
    const char last = s.back();
    if (last == 'k' || last == 'K')
        mult = 1e3;
    else if (last == 'M' || last == 'm')
        mult = 1e6;
    if (mult != 1)
        num.pop_back();
    size_t used = 0;
    double v = 0;
    try {
        v = std::stod(num, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used != num.size() || !(v > 0))
        fail(ErrorCode::InvalidArgument, "bad budget '" + whole + "'");
    return uint64_t(std::llround(v * mult));
}

} // namespace

BudgetConfig parse_budget(const std::string& spec) {
    std::vector<std::string> parts;
    std::stringstream ss(spec);
    for (std::string tok; std::getline(ss, tok, ':');)
        parts.push_back(tok);
    if (parts.size() != 2 && parts.size() != 3)
        fail(ErrorCode::InvalidArgument, "budget '" + spec + "' is not [LABEL:]L1:L2");
    BudgetConfig b;
    const size_t o = parts.size() - 2;
    b.label = o ? parts[0] : spec;
    b.l1_bytes = parse_bytes(parts[o], spec);
    b.l2_bytes = parse_bytes(parts[o + 1], spec);
    return b;
}

} // namespace pestdet
