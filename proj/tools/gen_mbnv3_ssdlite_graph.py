#!/usr/bin/env python3
"""Emit the MobileNetV3-Large + SSDLite layer graph in pestdet's graph format.

The graph is traced from torchvision's ssdlite320_mobilenet_v3_large. The
camera frame (3x240x320) is resized to the 320x320 network input by a leading
`resize` layer. BatchNorm is folded into the preceding convolution (so every
convolution carries a bias) and the SSD box decoding is collapsed into a
single zero-MAC `ssd_head` marker fed by all head outputs.

Usage:
  gen_mbnv3_ssdlite_graph.py > data/graphs/mbnv3_ssdlite_320x240.json
"""
import argparse
import json
import operator

import torch
import torch.fx
from torch.fx.passes.shape_prop import ShapeProp
from torchvision.models.detection import ssdlite320_mobilenet_v3_large

ANCHORS_PER_LOCATION = 6
ACTIVATIONS = {"Hardswish": "hswish", "Hardsigmoid": "hsigmoid", "ReLU": "relu",
               "ReLU6": "relu", "AdaptiveAvgPool2d": "pool"}


class _Net(torch.nn.Module):
    def __init__(self, model):
        super().__init__()
        self.backbone = model.backbone
        self.head = model.head

    def forward(self, x):
        feats = self.backbone(x)
        return self.head(list(feats.values()))


def _chw(node):
    return list(node.meta["tensor_meta"].shape)[1:]


def _conv_kind(mod):
    if mod.groups > 1 and mod.groups == mod.in_channels:
        return "depthwise_conv2d", "dw"
    if tuple(mod.kernel_size) == (1, 1) and mod.groups == 1:
        return "pointwise_conv2d", "pw"
    return "conv2d", "conv"


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--num-classes", type=int, default=91)
    args = ap.parse_args()

    model = ssdlite320_mobilenet_v3_large(weights=None, weights_backbone=None,
                                          num_classes=args.num_classes).eval()
    gm = torch.fx.symbolic_trace(_Net(model))
    ShapeProp(gm).propagate(torch.zeros(1, 3, 320, 320))

    layers = [{"name": "resize_in", "op": "resize", "inputs": ["input"],
               "out_shape": [3, 320, 320]}]
    alias = {}
    counters = {}
    head_outputs = []

    def fresh(prefix):
        counters[prefix] = counters.get(prefix, 0) + 1
        return f"{prefix}{counters[prefix]}"

    for node in gm.graph.nodes:
        if node.op == "placeholder":
            alias[node.name] = "resize_in"
        elif node.op == "call_module":
            mod = gm.get_submodule(node.target)
            kind = type(mod).__name__
            src = alias[node.args[0].name]
            if kind == "BatchNorm2d":
                alias[node.name] = src
                continue
            if kind == "Conv2d":
                op, prefix = _conv_kind(mod)
                name = fresh(prefix)
                layers.append({
                    "name": name, "op": op, "inputs": [src],
                    "out_shape": _chw(node),
                    "kernel": list(mod.kernel_size),
                    "stride": mod.stride[0], "padding": mod.padding[0],
                    "groups": mod.groups,
                })
                # Last conv of each per-feature-map head branch.
                if ".module_list." in node.target and node.target.endswith(".1"):
                    head_outputs.append(name)
            else:
                op = ACTIVATIONS[kind]
                name = fresh(op)
                rec = {"name": name, "op": op, "inputs": [src]}
                if op == "pool":
                    c, h, w = _chw(node.args[0])
                    rec.update(kernel=[h, w], stride=1, padding=0)
                layers.append(rec)
            alias[node.name] = name
        elif node.op == "call_function" and node.target in (operator.add, operator.mul):
            op = "add" if node.target is operator.add else "mul"
            name = fresh(op)
            layers.append({"name": name, "op": op,
                           "inputs": [alias[a.name] for a in node.args]})
            alias[node.name] = name
        # Remaining nodes (view/permute/reshape/cat) are box-decoding glue.

    per_map = {}
    for lay in layers:
        if lay["name"] in head_outputs:
            _, h, w = lay["out_shape"]
            per_map[(h, w)] = h * w
    boxes = sum(per_map.values()) * ANCHORS_PER_LOCATION
    layers.append({"name": "ssd_decode", "op": "ssd_head", "inputs": head_outputs,
                   "out_shape": [1, boxes, 4 + args.num_classes]})

    doc = {
        "format": "pestdet-layergraph",
        "version": 1,
        "name": "mbnv3_ssdlite_320x240",
        "element_bytes": 1,
        "input": {"name": "input", "shape": [3, 240, 320]},
        "layers": layers,
    }
    print(json.dumps(doc, indent=1))


if __name__ == "__main__":
    main()
