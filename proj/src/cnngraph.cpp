#include "pestdet/cnngraph.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "json.hpp"
#include "pestdet/error.hpp"

namespace pestdet {

using nlohmann::ordered_json;

namespace {

const std::pair<OpKind, const char*> kOpNames[] = {
    {OpKind::Conv2d, "conv2d"},
    {OpKind::DepthwiseConv2d, "depthwise_conv2d"},
    {OpKind::PointwiseConv2d, "pointwise_conv2d"},
    {OpKind::Pool, "pool"},
    {OpKind::Hsigmoid, "hsigmoid"},
    {OpKind::Hswish, "hswish"},
    {OpKind::Relu, "relu"},
    {OpKind::Add, "add"},
    {OpKind::Mul, "mul"},
    {OpKind::Resize, "resize"},
    {OpKind::SsdHead, "ssd_head"},
    {OpKind::Reshape, "reshape"},
};

} // namespace

const char* op_kind_name(OpKind k) {
    for (const auto& [op, name] : kOpNames)
        if (op == k)
            return name;
    return "?";
}

OpKind parse_op_kind(const std::string& s) {
    for (const auto& [op, name] : kOpNames)
        if (s == name)
            return op;
    fail(ErrorCode::UnknownOp, "unknown op kind '" + s + "'");
}

bool is_conv(OpKind k) {
    return k == OpKind::Conv2d || k == OpKind::DepthwiseConv2d || k == OpKind::PointwiseConv2d;
}

std::string shape_str(const Shape& s) {
    return "(" + std::to_string(s.c) + "," + std::to_string(s.h) + "," + std::to_string(s.w) + ")";
}

size_t LayerGraph::index_of(const std::string& layer) const {
    for (size_t i = 0; i < layers.size(); ++i)
        if (layers[i].name == layer)
            return i;
    fail(ErrorCode::UnknownTensor, "graph has no layer '" + layer + "'");
}

Shape LayerGraph::tensor_shape(const std::string& tensor) const {
    if (tensor == input_name)
        return input_shape;
    return layers[index_of(tensor)].out_shape;
}

uint64_t LayerGraph::tensor_bytes(const std::string& tensor) const {
    return tensor_shape(tensor).elements() * element_bytes;
}

uint64_t count_macs(const Layer& l) {
    if (!is_conv(l.op))
        return 0;
    return uint64_t(l.kh) * l.kw * (l.in_shape.c / l.groups) * l.out_shape.elements();
}

uint64_t count_macs_total(const LayerGraph& g) {
    uint64_t s = 0;
    for (const auto& l : g.layers)
        s += count_macs(l);
    return s;
}

uint64_t count_params_total(const LayerGraph& g) {
    uint64_t s = 0;
    for (const auto& l : g.layers)
        s += l.param_count;
    return s;
}

double dws_savings(uint32_t k, uint32_t cin, uint32_t cout) {
    if (k == 0 || cin == 0 || cout == 0)
        fail(ErrorCode::InvalidArgument, "kernel and channel counts must be >= 1");
    const double dense = double(k) * k * cin * cout;
    const double separable = double(k) * k * cin + double(cin) * cout;
    return 1.0 - separable / dense;
}

namespace {

const ordered_json& field(const ordered_json& o, const char* key, const std::string& where) {
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

Shape shape_from(const ordered_json& j, const std::string& where) {
    std::vector<uint32_t> v;
    try {
        v = j.get<std::vector<uint32_t>>();
    } catch (const ordered_json::exception&) {
        fail(ErrorCode::SchemaViolation, where + ": shape must be [C,H,W]");
    }
    if (v.size() != 3 || v[0] == 0 || v[1] == 0 || v[2] == 0)
        fail(ErrorCode::SchemaViolation, where + ": shape must be three positive extents [C,H,W]");
    return {v[0], v[1], v[2]};
}

ordered_json shape_to(const Shape& s) {
    return ordered_json::array({s.c, s.h, s.w});
}

struct RawLayer {
    Layer layer;
    bool has_out = false;
    bool has_in = false;
    bool has_groups = false;
    bool has_kernel = false;
    Shape declared_in;
    size_t file_index = 0;
};

[[noreturn]] void mismatch(const std::string& name, const std::string& what) {
    fail(ErrorCode::ShapeMismatch, "layer '" + name + "': " + what);
}

uint32_t window_extent(uint32_t in, uint32_t k, uint32_t s, uint32_t p, const std::string& name) {
    const int64_t span = int64_t(in) + 2 * int64_t(p) - int64_t(k);
    if (span < 0)
        mismatch(name, "kernel larger than padded input");
    return uint32_t(span / s + 1);
}

void infer(RawLayer& raw, const std::vector<Shape>& ins) {
    Layer& l = raw.layer;
    const std::string& n = l.name;
    l.in_shape = ins.front();
    if (raw.has_in && raw.declared_in != l.in_shape)
        mismatch(n, "declared in_shape " + shape_str(raw.declared_in) + " but input is " +
                        shape_str(l.in_shape));
    auto expect_inputs = [&](size_t lo, size_t hi) {
        if (ins.size() < lo || ins.size() > hi)
            mismatch(n, "wrong number of inputs (" + std::to_string(ins.size()) + ")");
    };
    auto need_out = [&] {
        if (!raw.has_out)
            fail(ErrorCode::MissingField, "layer '" + n + "': out_shape is required for " +
                                              op_kind_name(l.op));
    };
    Shape out = l.in_shape;
    l.elementwise = !is_conv(l.op);
    switch (l.op) {
    case OpKind::Conv2d:
    case OpKind::DepthwiseConv2d:
    case OpKind::PointwiseConv2d: {
        expect_inputs(1, 1);
        need_out();
        if (l.op == OpKind::DepthwiseConv2d && !raw.has_groups)
            l.groups = l.in_shape.c;
        if (l.stride == 0 || l.groups == 0 || l.kh == 0 || l.kw == 0)
            mismatch(n, "kernel, stride and groups must be >= 1");
        if (l.op == OpKind::PointwiseConv2d && (l.kh != 1 || l.kw != 1 || l.groups != 1))
            mismatch(n, "pointwise convolution must be 1x1 with groups 1");
        if (l.op == OpKind::DepthwiseConv2d && l.groups != l.in_shape.c)
            mismatch(n, "depthwise convolution needs groups == input channels");
        if (l.in_shape.c % l.groups || l.out_shape.c % l.groups)
            mismatch(n, "channels not divisible by groups");
        out = {l.out_shape.c, window_extent(l.in_shape.h, l.kh, l.stride, l.padding, n),
               window_extent(l.in_shape.w, l.kw, l.stride, l.padding, n)};
        l.param_count = uint64_t(l.kh) * l.kw * (l.in_shape.c / l.groups) * out.c + out.c;
        break;
    }
    case OpKind::Pool:
        expect_inputs(1, 1);
        if (!raw.has_kernel) {
            l.kh = l.in_shape.h;
            l.kw = l.in_shape.w;
        }
        if (l.stride == 0 || l.kh == 0 || l.kw == 0)
            mismatch(n, "kernel and stride must be >= 1");
        out = {l.in_shape.c, window_extent(l.in_shape.h, l.kh, l.stride, l.padding, n),
               window_extent(l.in_shape.w, l.kw, l.stride, l.padding, n)};
        break;
    case OpKind::Hsigmoid:
    case OpKind::Hswish:
    case OpKind::Relu:
        expect_inputs(1, 1);
        break;
    case OpKind::Add:
        expect_inputs(2, 8);
        for (size_t i = 1; i < ins.size(); ++i)
            if (ins[i] != ins[0])
                mismatch(n, "residual operands " + shape_str(ins[0]) + " and " +
                                shape_str(ins[i]) + " differ");
        break;
    case OpKind::Mul: {
        expect_inputs(2, 2);
        auto scalar = [](const Shape& s) { return s.h == 1 && s.w == 1; };
        if (ins[1].c != ins[0].c || !(ins[1] == ins[0] || scalar(ins[0]) || scalar(ins[1])))
            mismatch(n, "operands " + shape_str(ins[0]) + " and " + shape_str(ins[1]) +
                            " do not broadcast");
        if (scalar(ins[0]))
            out = ins[1];
        break;
    }
    case OpKind::Resize:
        expect_inputs(1, 1);
        need_out();
        if (l.out_shape.c != l.in_shape.c)
            mismatch(n, "resize cannot change the channel count");
        out = l.out_shape;
        break;
    case OpKind::Reshape:
        expect_inputs(1, 1);
        need_out();
        if (l.out_shape.elements() != l.in_shape.elements())
            mismatch(n, "reshape must preserve the element count");
        out = l.out_shape;
        break;
    case OpKind::SsdHead:
        expect_inputs(1, 64);
        need_out();
        out = l.out_shape;
        break;
    }
    if (raw.has_out && l.out_shape != out)
        mismatch(n, "declared out_shape " + shape_str(l.out_shape) + " but inferred " +
                        shape_str(out));
    l.out_shape = out;
}

} // namespace

LayerGraph parse_graph(const std::string& text) {
    ordered_json doc;
    try {
        doc = ordered_json::parse(text);
    } catch (const ordered_json::parse_error& e) {
        fail(ErrorCode::SchemaViolation, std::string("graph file is not valid JSON: ") + e.what());
    }
    const std::string w = "graph";
    if (get<std::string>(doc, "format", w) != "pestdet-layergraph")
        fail(ErrorCode::SchemaViolation, "not a pestdet layer graph");
    if (get<int>(doc, "version", w) != 1)
        fail(ErrorCode::SchemaViolation, "unsupported graph version");

    LayerGraph g;
    g.name = get<std::string>(doc, "name", w);
    g.element_bytes = doc.contains("element_bytes") ? get<uint32_t>(doc, "element_bytes", w) : 1;
    if (g.element_bytes == 0)
        fail(ErrorCode::SchemaViolation, "element_bytes must be >= 1");
    const auto& input = field(doc, "input", w);
    g.input_name = get<std::string>(input, "name", "input");
    g.input_shape = shape_from(field(input, "shape", "input"), "input");

    const auto& layers = field(doc, "layers", w);
    if (!layers.is_array())
        fail(ErrorCode::SchemaViolation, "graph: 'layers' must be an array");
    std::vector<RawLayer> raw;
    std::map<std::string, size_t> by_name;
    for (size_t i = 0; i < layers.size(); ++i) {
        const auto& j = layers[i];
        RawLayer r;
        r.file_index = i;
        Layer& l = r.layer;
        l.name = get<std::string>(j, "name", "layer " + std::to_string(i));
        const std::string lw = "layer '" + l.name + "'";
        l.op = parse_op_kind(get<std::string>(j, "op", lw));
        l.inputs = get<std::vector<std::string>>(j, "inputs", lw);
        if (l.inputs.empty())
            fail(ErrorCode::SchemaViolation, lw + ": needs at least one input");
        if (j.contains("out_shape")) {
            r.has_out = true;
            l.out_shape = shape_from(j["out_shape"], lw);
        }
        if (j.contains("in_shape")) {
            r.has_in = true;
            r.declared_in = shape_from(j["in_shape"], lw);
        }
        if (j.contains("kernel")) {
            const auto k = get<std::vector<uint32_t>>(j, "kernel", lw);
            if (k.size() != 2)
                fail(ErrorCode::SchemaViolation, lw + ": kernel must be [kh,kw]");
            l.kh = k[0];
            l.kw = k[1];
            r.has_kernel = true;
        }
        if (j.contains("stride"))
            l.stride = get<uint32_t>(j, "stride", lw);
        if (j.contains("padding"))
            l.padding = get<uint32_t>(j, "padding", lw);
        if (j.contains("groups")) {
            l.groups = get<uint32_t>(j, "groups", lw);
            r.has_groups = true;
        }
        if (l.name == g.input_name || !by_name.emplace(l.name, i).second)
            fail(ErrorCode::SchemaViolation, lw + ": duplicate tensor name");
        raw.push_back(std::move(r));
    }

    // Stable topological order (Kahn, always taking the lowest file index).
    const size_t n = raw.size();
    std::vector<std::vector<size_t>> consumers(n);
    std::vector<size_t> pending(n, 0);
    for (size_t i = 0; i < n; ++i)
        for (const auto& in : raw[i].layer.inputs) {
            if (in == g.input_name)
                continue;
            auto it = by_name.find(in);
            if (it == by_name.end())
                fail(ErrorCode::UnknownTensor,
                     "layer '" + raw[i].layer.name + "' reads unknown tensor '" + in + "'");
            consumers[it->second].push_back(i);
            ++pending[i];
        }
    std::set<size_t> ready;
    for (size_t i = 0; i < n; ++i)
        if (pending[i] == 0)
            ready.insert(i);
    std::vector<size_t> order;
    while (!ready.empty()) {
        const size_t i = *ready.begin();
        ready.erase(ready.begin());
        order.push_back(i);
        for (size_t c : consumers[i])
            if (--pending[c] == 0)
                ready.insert(c);
    }
    if (order.size() != n) {
        for (size_t i = 0; i < n; ++i)
            if (pending[i] > 0)
                fail(ErrorCode::GraphCycle,
                     "layer graph has a cycle through '" + raw[i].layer.name + "'");
    }

    std::map<std::string, Shape> shapes{{g.input_name, g.input_shape}};
    for (size_t i : order) {
        RawLayer& r = raw[i];
        std::vector<Shape> ins;
        for (const auto& in : r.layer.inputs)
            ins.push_back(shapes.at(in));
        infer(r, ins);
        shapes[r.layer.name] = r.layer.out_shape;
        g.layers.push_back(r.layer);
    }
    return g;
}

LayerGraph load_graph(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        fail(ErrorCode::Io, "cannot open " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    try {
        return parse_graph(ss.str());
    } catch (const Error& e) {
        throw Error(e.code(), path.string() + ": " + e.what());
    }
}

std::string graph_to_json(const LayerGraph& g) {
    ordered_json layers = ordered_json::array();
    for (const auto& l : g.layers) {
        ordered_json j = {{"name", l.name},
                          {"op", op_kind_name(l.op)},
                          {"inputs", l.inputs},
                          {"out_shape", shape_to(l.out_shape)}};
        if (is_conv(l.op) || l.op == OpKind::Pool) {
            j["kernel"] = {l.kh, l.kw};
            j["stride"] = l.stride;
            j["padding"] = l.padding;
        }
        if (is_conv(l.op))
            j["groups"] = l.groups;
        layers.push_back(j);
    }
    ordered_json doc = {{"format", "pestdet-layergraph"},
                        {"version", 1},
                        {"name", g.name},
                        {"element_bytes", g.element_bytes},
                        {"input", {{"name", g.input_name}, {"shape", shape_to(g.input_shape)}}},
                        {"layers", layers}};
    return doc.dump(1) + "\n";
}

} // namespace pestdet
