#pragma once

#include <random>
#include <string>
#include <vector>

#include "json.hpp"

namespace graphgen {

struct Dims {
    uint32_t c, h, w;
};

struct Spec {
    std::string name, op;
    std::vector<std::string> inputs;
    uint32_t k = 1, stride = 1, pad = 0, groups = 1, cout = 0;
};

struct Walked {
    std::string json;
    uint64_t macs = 0;
    uint64_t params = 0;
    std::vector<Dims> out;  // per layer
    size_t layers = 0;
};

// Window positions along one axis of a padded extent, counted by sliding.
inline uint32_t slide(uint32_t n, uint32_t k, uint32_t stride, uint32_t pad) {
    uint32_t count = 0;
    for (int64_t start = -int64_t(pad); start + k <= int64_t(n) + pad; start += stride)
        ++count;
    return count;
}

// Random chain with occasional residual adds, plus the brute-force MAC and
// parameter tallies of every layer.
inline Walked random_graph(std::mt19937_64& rng, size_t n_layers, uint32_t max_c = 8,
                           uint32_t max_hw = 12) {
    using nlohmann::json;
    Walked r;
    std::vector<std::pair<std::string, Dims>> tensors;
    Dims in{1 + uint32_t(rng() % 4), 6 + uint32_t(rng() % (max_hw - 5)),
            6 + uint32_t(rng() % (max_hw - 5))};
    tensors.push_back({"input", in});
    json layers = json::array();
    for (size_t i = 0; i < n_layers; ++i) {
        const auto [src, d] = tensors.back();
        const std::string name = "l" + std::to_string(i);
        json j = {{"name", name}, {"inputs", {src}}};
        Dims o = d;
        const int pick = int(rng() % 10);
        auto conv = [&](const std::string& op, uint32_t k, uint32_t stride, uint32_t groups,
                        uint32_t cout) {
            const uint32_t pad = k / 2;
            o = {cout, slide(d.h, k, stride, pad), slide(d.w, k, stride, pad)};
            j["op"] = op;
            j["kernel"] = {k, k};
            j["stride"] = stride;
            j["padding"] = pad;
            j["groups"] = groups;
            j["out_shape"] = {o.c, o.h, o.w};
            uint64_t taps = 0;
            for (uint32_t co = 0; co < o.c; ++co)
                for (uint32_t y = 0; y < o.h; ++y)
                    for (uint32_t x = 0; x < o.w; ++x)
                        for (uint32_t ci = 0; ci < d.c / groups; ++ci)
                            for (uint32_t ky = 0; ky < k; ++ky)
                                for (uint32_t kx = 0; kx < k; ++kx)
                                    ++taps;
            r.macs += taps;
            r.params += uint64_t(k) * k * (d.c / groups) * cout + cout;
        };
        const bool can_shrink = d.h >= 4 && d.w >= 4;
        if (pick <= 2) {
            const uint32_t k = rng() % 2 ? 3 : 1;
            conv("conv2d", k, can_shrink && rng() % 3 == 0 ? 2 : 1, 1, 1 + uint32_t(rng() % max_c));
        } else if (pick == 3) {
            conv("depthwise_conv2d", 3, can_shrink && rng() % 3 == 0 ? 2 : 1, d.c, d.c);
        } else if (pick == 4) {
            conv("pointwise_conv2d", 1, 1, 1, 1 + uint32_t(rng() % max_c));
        } else if (pick <= 6) {
            const char* acts[] = {"relu", "hswish", "hsigmoid"};
            j["op"] = acts[rng() % 3];
        } else if (pick == 7) {
            std::vector<std::string> same;
            for (size_t t = 0; t + 1 < tensors.size(); ++t)
                if (tensors[t].second.c == d.c && tensors[t].second.h == d.h &&
                    tensors[t].second.w == d.w)
                    same.push_back(tensors[t].first);
            if (same.empty()) {
                j["op"] = "relu";
            } else {
                j["op"] = "add";
                j["inputs"] = {src, same[rng() % same.size()]};
            }
        } else if (pick == 8 && d.h >= 2 && d.w >= 2) {
            j["op"] = "pool";
            j["kernel"] = {2, 2};
            j["stride"] = 2;
            o = {d.c, slide(d.h, 2, 2, 0), slide(d.w, 2, 2, 0)};
            j["out_shape"] = {o.c, o.h, o.w};
        } else {
            conv("conv2d", 3, 1, 1, 1 + uint32_t(rng() % max_c));
        }
        layers.push_back(j);
        tensors.push_back({name, o});
        r.out.push_back(o);
    }
    r.layers = n_layers;
    const json g = {{"format", "pestdet-layergraph"},
                    {"version", 1},
                    {"name", "random"},
                    {"element_bytes", 1},
                    {"input", {{"name", "input"}, {"shape", {in.c, in.h, in.w}}}},
                    {"layers", layers}};
    r.json = g.dump();
    return r;
}

} // namespace graphgen
