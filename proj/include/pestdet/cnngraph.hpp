#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace pestdet {

enum class OpKind {
    Conv2d,
    DepthwiseConv2d,
    PointwiseConv2d,
    Pool,
    Hsigmoid,
    Hswish,
    Relu,
    Add,
    Mul,  ///< channel-wise scale, second operand may broadcast over H x W
    Resize,
    SsdHead,
    Reshape,
};

const char* op_kind_name(OpKind k);
OpKind parse_op_kind(const std::string& s);
bool is_conv(OpKind k);

struct Shape {
    uint32_t c = 0;
    uint32_t h = 0;
    uint32_t w = 0;

    uint64_t elements() const { return uint64_t(c) * h * w; }
    friend bool operator==(const Shape&, const Shape&) = default;
};

std::string shape_str(const Shape& s);

struct Layer {
    std::string name;
    OpKind op = OpKind::Relu;
    std::vector<std::string> inputs;
    Shape in_shape;  ///< shape of inputs[0]
    Shape out_shape;
    uint32_t kh = 1, kw = 1;
    uint32_t stride = 1;
    uint32_t padding = 0;
    uint32_t groups = 1;
    uint64_t param_count = 0;
    bool elementwise = false;  ///< no MACs; billed by bytes moved

    friend bool operator==(const Layer&, const Layer&) = default;
};

/// Layers in topological order. Every layer produces one tensor named after
/// the layer; the graph input is a tensor of its own.
struct LayerGraph {
    std::string name;
    uint32_t element_bytes = 1;
    std::string input_name = "input";
    Shape input_shape;
    std::vector<Layer> layers;

    size_t index_of(const std::string& layer) const;  ///< UnknownTensor if absent
    Shape tensor_shape(const std::string& tensor) const;
    uint64_t tensor_bytes(const std::string& tensor) const;

    friend bool operator==(const LayerGraph&, const LayerGraph&) = default;
};

/// Shape inference and checks. `out_shape` is required for convolutions,
/// resize, reshape and ssd_head, and verified when present elsewhere.
/// Layers may appear in any order; they are sorted topologically (stable).
/// Errors: ShapeMismatch, GraphCycle, UnknownOp, UnknownTensor.
LayerGraph parse_graph(const std::string& text);
LayerGraph load_graph(const std::filesystem::path& path);
std::string graph_to_json(const LayerGraph& g);

uint64_t count_macs(const Layer& l);
uint64_t count_macs_total(const LayerGraph& g);
uint64_t count_params_total(const LayerGraph& g);

/// Fraction of weights (and per-pixel MACs) saved by a k x k depthwise plus
/// pointwise pair over a dense k x k convolution.
double dws_savings(uint32_t k, uint32_t cin, uint32_t cout);

} // namespace pestdet
