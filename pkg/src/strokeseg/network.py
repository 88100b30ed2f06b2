"""Forward inference for the dual-head classification network.

The network is a stack of conv blocks (3x3 same convolutions + ReLU, repeated
``num_convs`` times per block) with 2x2 max-pools after configured blocks and
two classification heads, each a global-average-pool followed by a
single-logit sigmoid FC: a side head at a shallow high-resolution block and a
main head at the last block. Weights live in a documented bundle: a JSON
manifest naming each tensor plus one little-endian float32 blob.
"""

import json
import math
import os
from dataclasses import dataclass, field

import numpy as np

from .kernels import conv3x3_same, maxpool2x2


@dataclass(frozen=True)
class ConvBlockSpec:
    num_convs: int
    out_channels: int


@dataclass
class NetworkConfig:
    blocks: list[ConvBlockSpec]
    pool_after: frozenset[int]  # 1-indexed block ids; pool applies after the block
    side_head_block: int
    main_head_block: int
    input_channels: int = 2
    input_dims: tuple[int, int] = (192, 192)

    def __post_init__(self):
        self.blocks = [b if isinstance(b, ConvBlockSpec) else ConvBlockSpec(*b)
                       for b in self.blocks]
        self.pool_after = frozenset(int(i) for i in self.pool_after)
        self.input_dims = (int(self.input_dims[0]), int(self.input_dims[1]))
        n = len(self.blocks)
        if n < 1:
            raise ValueError("config needs at least one block")
        for b in self.blocks:
            if b.num_convs < 1 or b.out_channels < 1:
                raise ValueError(f"invalid block spec {b}")
        for i in (self.side_head_block, self.main_head_block):
            if not 1 <= i <= n:
                raise ValueError(f"head block index {i} outside 1..{n}")
        if not self.side_head_block < self.main_head_block:
            raise ValueError("side head must sit on an earlier block than the main head")
        if not self.pool_after <= set(range(1, n + 1)):
            raise ValueError(f"pool_after indices outside 1..{n}: {sorted(self.pool_after)}")
        pools_before_main = sum(1 for p in self.pool_after if p < self.main_head_block)
        if pools_before_main != 2:
            raise ValueError(
                f"exactly two pools must precede the main head, found {pools_before_main}"
            )

    def head_channels(self, which: str) -> int:
        block = self.main_head_block if which == "main" else self.side_head_block
        return self.blocks[block - 1].out_channels


def expected_tensor_shapes(cfg: NetworkConfig) -> dict[str, tuple[int, ...]]:
    """Tensor name -> shape map implied by a config (bundle validation)."""
    shapes: dict[str, tuple[int, ...]] = {}
    in_ch = cfg.input_channels
    for bi, blk in enumerate(cfg.blocks, start=1):
        for ci in range(1, blk.num_convs + 1):
            shapes[f"block{bi}.conv{ci}.kernel"] = (blk.out_channels, in_ch, 3, 3)
            shapes[f"block{bi}.conv{ci}.bias"] = (blk.out_channels,)
            in_ch = blk.out_channels
    shapes["head_main.fc.weight"] = (1, cfg.head_channels("main"))
    shapes["head_main.fc.bias"] = (1,)
    shapes["head_side.fc.weight"] = (1, cfg.head_channels("side"))
    shapes["head_side.fc.bias"] = (1,)
    return shapes


@dataclass
class WeightBundle:
    tensors: dict[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        for name, t in self.tensors.items():
            self.tensors[name] = np.ascontiguousarray(t, dtype=np.float32)

    def validate_for(self, cfg: NetworkConfig) -> None:
        expected = expected_tensor_shapes(cfg)
        for name, shape in expected.items():
            if name not in self.tensors:
                raise ValueError(f"weight bundle is missing tensor {name!r}")
            got = self.tensors[name].shape
            if got != shape:
                raise ValueError(
                    f"tensor {name!r} has shape {got}, config expects {shape}"
                )
        extra = set(self.tensors) - set(expected)
        if extra:
            raise ValueError(f"weight bundle has unexpected tensors: {sorted(extra)}")


@dataclass
class ForwardResult:
    y_main: float
    y_side: float
    feat_main: np.ndarray
    feat_side: np.ndarray


def relu(f: np.ndarray) -> np.ndarray:
    return np.maximum(f, 0.0)


def conv2d_same(f: np.ndarray, kernel: np.ndarray, bias: np.ndarray) -> np.ndarray:
    """3x3 same-padding cross-correlation over a (c, h, w) feature map."""
    return conv3x3_same(f, kernel, bias)


def gap(f: np.ndarray) -> np.ndarray:
    """Per-channel spatial mean of a (c, h, w) feature map."""
    f = np.asarray(f)
    if f.ndim != 3:
        raise ValueError("gap expects a (c,h,w) feature map")
    return f.mean(axis=(1, 2), dtype=np.float64)


def fc_sigmoid(v: np.ndarray, weight: np.ndarray, bias: np.ndarray) -> float:
    """sigmoid(w . v + b) for a single-logit head."""
    v = np.asarray(v, dtype=np.float64).reshape(-1)
    w = np.asarray(weight, dtype=np.float64).reshape(-1)
    if v.shape != w.shape:
        raise ValueError(f"fc length mismatch: features {v.shape[0]}, weight {w.shape[0]}")
    z = float(w @ v) + float(np.asarray(bias, dtype=np.float64).reshape(-1)[0])
    if z >= 0:
        return 1.0 / (1.0 + math.exp(-z))
    ez = math.exp(z)
    return ez / (1.0 + ez)


def forward(x: np.ndarray, cfg: NetworkConfig, wb: WeightBundle) -> ForwardResult:
    """Run the network on a (2, ny, nx) dual-channel slice."""
    x = np.asarray(x, dtype=np.float32)
    if x.ndim != 3 or x.shape[0] != cfg.input_channels:
        raise ValueError(f"input must be ({cfg.input_channels}, ny, nx), got {x.shape}")
    if x.shape[1:] != cfg.input_dims:
        raise ValueError(f"input dims {x.shape[1:]} differ from config {cfg.input_dims}")
    wb.validate_for(cfg)
    feat = x
    feat_main = feat_side = None
    for bi, blk in enumerate(cfg.blocks, start=1):
        for ci in range(1, blk.num_convs + 1):
            kern = wb.tensors[f"block{bi}.conv{ci}.kernel"]
            bias = wb.tensors[f"block{bi}.conv{ci}.bias"]
            feat = relu(conv2d_same(feat, kern, bias))
        if bi == cfg.side_head_block:
            feat_side = feat
        if bi == cfg.main_head_block:
            feat_main = feat
        if bi in cfg.pool_after and bi < len(cfg.blocks):
            feat = maxpool2x2(feat)
    y_main = fc_sigmoid(gap(feat_main), wb.tensors["head_main.fc.weight"],
                        wb.tensors["head_main.fc.bias"])
    y_side = fc_sigmoid(gap(feat_side), wb.tensors["head_side.fc.weight"],
                        wb.tensors["head_side.fc.bias"])
    return ForwardResult(y_main, y_side, feat_main, feat_side)


def save_weights(wb: WeightBundle, path: str) -> None:
    """Write a bundle as JSON manifest + one little-endian f32 blob."""
    stem = os.path.splitext(os.path.basename(path))[0]
    blob_name = stem + ".bin"
    entries = []
    chunks = []
    offset = 0
    for name in sorted(wb.tensors):
        t = np.ascontiguousarray(wb.tensors[name], dtype="<f4")
        entries.append({
            "name": name,
            "shape": list(t.shape),
            "offset": offset,
            "length": int(t.size),
        })
        chunks.append(t.tobytes())
        offset += t.size * 4
    manifest = {"tensors": entries, "data": blob_name}
    with open(path, "w") as f:
        json.dump(manifest, f, sort_keys=True)
        f.write("\n")
    with open(os.path.join(os.path.dirname(path) or ".", blob_name), "wb") as f:
        f.write(b"".join(chunks))


def load_weights(path: str) -> WeightBundle:
    """Read a bundle manifest + blob; errors on any manifest/blob inconsistency."""
    with open(path) as f:
        manifest = json.load(f)
    if "tensors" not in manifest or "data" not in manifest:
        raise ValueError(f"weight manifest missing 'tensors' or 'data': {path}")
    blob_path = os.path.join(os.path.dirname(path) or ".", manifest["data"])
    with open(blob_path, "rb") as f:
        raw = f.read()
    tensors = {}
    for entry in manifest["tensors"]:
        name = entry["name"]
        shape = tuple(int(s) for s in entry["shape"])
        offset = int(entry["offset"])
        length = int(entry["length"])
        if int(np.prod(shape)) != length:
            raise ValueError(
                f"tensor {name!r}: shape {shape} implies {int(np.prod(shape))} "
                f"elements, manifest says {length}"
            )
        end = offset + length * 4
        if offset < 0 or end > len(raw):
            raise ValueError(
                f"tensor {name!r}: segment [{offset}, {end}) outside blob of "
                f"{len(raw)} bytes"
            )
        tensors[name] = np.frombuffer(raw[offset:end], dtype="<f4").reshape(shape).copy()
    return WeightBundle(tensors)


def save_config(cfg: NetworkConfig, path: str) -> None:
    doc = {
        "blocks": [{"num_convs": b.num_convs, "out_channels": b.out_channels}
                   for b in cfg.blocks],
        "pool_after": sorted(cfg.pool_after),
        "side_head_block": cfg.side_head_block,
        "main_head_block": cfg.main_head_block,
        "input_channels": cfg.input_channels,
        "input_dims": list(cfg.input_dims),
    }
    with open(path, "w") as f:
        json.dump(doc, f, indent=2, sort_keys=True)
        f.write("\n")


def load_config(path: str) -> NetworkConfig:
    with open(path) as f:
        doc = json.load(f)
    return NetworkConfig(
        blocks=[ConvBlockSpec(int(b["num_convs"]), int(b["out_channels"]))
                for b in doc["blocks"]],
        pool_after=frozenset(doc["pool_after"]),
        side_head_block=int(doc["side_head_block"]),
        main_head_block=int(doc["main_head_block"]),
        input_channels=int(doc.get("input_channels", 2)),
        input_dims=tuple(doc.get("input_dims", (192, 192))),
    )


def default_config() -> NetworkConfig:
    """Seven two-conv blocks, pools after blocks 2 and 4, heads at 4 and 7."""
    widths = [64, 64, 128, 128, 256, 256, 256]
    return NetworkConfig(
        blocks=[ConvBlockSpec(2, w) for w in widths],
        pool_after=frozenset({2, 4}),
        side_head_block=4,
        main_head_block=7,
    )
