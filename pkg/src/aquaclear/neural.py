"""From-scratch CNN inference: conv layers, residual blocks, two small
feature-extraction heads, and attention-guided pixel adjustment.

Tensors are plain numpy arrays of shape (channels, height, width); weights
are float32 (matching the on-disk manifest format) and promoted to float64
for arithmetic. Everything is inference-only and deterministic: einsum runs
with optimize=False so accumulation order is fixed, and seeded initialization
uses a PCG64 generator.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .classify import ClassifierThresholds, classify
from .enhance import apply_plan, build_plan
from .errors import (
    CorruptBlobError,
    DimMismatchError,
    IndivisibleDimsError,
    NonIntegralOutputDimError,
    OddSpatialDimError,
    ShapeMismatchError,
    ShapeMismatchInManifestError,
    UnsupportedDepthError,
)
from .image import ImageF32

__all__ = [
    "ConvLayer",
    "ResidualBlock",
    "LayerSpec",
    "ExtractorSpec",
    "BoundExtractor",
    "conv2d_forward",
    "relu",
    "residual_forward",
    "max_pool2",
    "build_vgg_head",
    "build_resnet_head",
    "init_weights",
    "load_weights",
    "save_weights",
    "extract_features",
    "attention_map",
    "fuse_attention",
    "attention_adjust",
    "feature_guided_enhance",
]


# ------------------------------------------------------------ forward ops

@dataclass(frozen=True)
class ConvLayer:
    """2-D convolution layer: cross-correlation + bias + optional ReLU."""

    weights: np.ndarray  # (out_channels, in_channels, k, k) float32
    bias: np.ndarray  # (out_channels,) float32
    stride: int = 1
    padding: int = 0
    activation: str = "relu"

    def __post_init__(self):
        w = self.weights
        if w.ndim != 4 or w.shape[2] != w.shape[3]:
            raise ValueError("weights must have shape (out, in, k, k)")
        if w.shape[2] % 2 == 0:
            raise ValueError("kernel side must be odd")
        if self.bias.shape != (w.shape[0],):
            raise ValueError("bias length must equal out_channels")
        if self.stride < 1:
            raise ValueError("stride must be >= 1")
        if self.padding < 0:
            raise ValueError("padding must be >= 0")
        if self.activation not in ("relu", "none"):
            raise ValueError(f"unknown activation {self.activation!r}")

    @property
    def out_channels(self) -> int:
        return self.weights.shape[0]

    @property
    def in_channels(self) -> int:
        return self.weights.shape[1]

    @property
    def kernel(self) -> int:
        return self.weights.shape[2]


@dataclass(frozen=True)
class ResidualBlock:
    """Two channel-preserving convs plus the identity shortcut.

    Output is relu(x + conv_b(conv_a(x))): conv_a carries the inner ReLU,
    conv_b none. Both convs must keep spatial dims and channel count so the
    shortcut is shape-compatible.
    """

    conv_a: ConvLayer
    conv_b: ConvLayer

    def __post_init__(self):
        for conv in (self.conv_a, self.conv_b):
            if conv.stride != 1 or conv.padding != conv.kernel // 2:
                raise ValueError("residual convs must be stride 1, same padding")
            if conv.in_channels != conv.out_channels:
                raise ValueError("residual convs must preserve channel count")
        if self.conv_a.out_channels != self.conv_b.in_channels:
            raise ValueError("conv_a/conv_b channel mismatch")
        if self.conv_a.activation != "relu" or self.conv_b.activation != "none":
            raise ValueError("residual block needs conv_a relu, conv_b linear")


def conv_output_dim(extent: int, kernel: int, stride: int, padding: int) -> int:
    span = extent + 2 * padding - kernel
    if span < 0:
        raise NonIntegralOutputDimError(
            f"kernel {kernel} exceeds padded extent {extent + 2 * padding}"
        )
    return span // stride + 1


def conv2d_forward(x: np.ndarray, layer: ConvLayer) -> np.ndarray:
    """Strided cross-correlation with zero padding, bias, optional ReLU.

    Output spatial dims are floor((H + 2p - k) / s) + 1. Accumulation runs
    over kernel taps in row-major order with a fixed einsum contraction, so
    results are bit-reproducible.
    """
    if x.ndim != 3:
        raise ShapeMismatchError(f"input must be rank 3, got rank {x.ndim}")
    c_in, h_in, w_in = x.shape
    if c_in != layer.in_channels:
        raise ShapeMismatchError(
            f"input has {c_in} channels, layer expects {layer.in_channels}"
        )
    k, s, p = layer.kernel, layer.stride, layer.padding
    h_out = conv_output_dim(h_in, k, s, p)
    w_out = conv_output_dim(w_in, k, s, p)

    xp = np.pad(x.astype(np.float64), ((0, 0), (p, p), (p, p)))
    w64 = layer.weights.astype(np.float64)
    out = np.zeros((layer.out_channels, h_out, w_out), dtype=np.float64)
    for ky in range(k):
        for kx in range(k):
            window = xp[
                :, ky : ky + (h_out - 1) * s + 1 : s, kx : kx + (w_out - 1) * s + 1 : s
            ]
            out += np.einsum(
                "oi,ihw->ohw", w64[:, :, ky, kx], window, optimize=False
            )
    out += layer.bias.astype(np.float64)[:, None, None]
    if layer.activation == "relu":
        out = np.maximum(out, 0.0)
    return out


def relu(t: np.ndarray) -> np.ndarray:
    return np.maximum(t, 0.0)


def residual_forward(x: np.ndarray, block: ResidualBlock) -> np.ndarray:
    inner = conv2d_forward(x, block.conv_a)
    outer = conv2d_forward(inner, block.conv_b)
    if outer.shape != x.shape:
        raise ShapeMismatchError(
            f"shortcut shape {x.shape} vs conv output {outer.shape}"
        )
    return np.maximum(x + outer, 0.0)


def max_pool2(t: np.ndarray) -> np.ndarray:
    """Non-overlapping 2x2 max pooling; spatial dims must be even."""
    c, h, w = t.shape
    if h % 2 or w % 2:
        raise OddSpatialDimError(f"cannot 2x2-pool odd dims {h}x{w}")
    return t.reshape(c, h // 2, 2, w // 2, 2).max(axis=(2, 4))


# ------------------------------------------------------------ head specs

@dataclass(frozen=True)
class LayerSpec:
    """One layer slot in an extractor: conv, pool, or res(idual block)."""

    name: str
    kind: str  # "conv" | "pool" | "res"
    in_channels: int = 0
    out_channels: int = 0
    kernel: int = 0
    stride: int = 1
    padding: int = 0
    activation: str = "relu"


@dataclass(frozen=True)
class ExtractorSpec:
    name: str
    layers: tuple
    tap: str

    def __post_init__(self):
        if self.tap not in {l.name for l in self.layers}:
            raise ValueError(f"tap {self.tap!r} names no layer")


def build_vgg_head(depth: int = 4) -> ExtractorSpec:
    """Stacked 3x3 conv/ReLU head with one mid-stack pooling.

    conv1(3->64), conv2(64->64), pool, conv3(64->128), conv4(128->128);
    the feature tap sits after the depth-th conv (1 <= depth <= 4).
    """
    if not 1 <= depth <= 4:
        raise UnsupportedDepthError(f"depth must be in 1..4, got {depth}")
    layers = (
        LayerSpec("conv1", "conv", 3, 64, 3, 1, 1),
        LayerSpec("conv2", "conv", 64, 64, 3, 1, 1),
        LayerSpec("pool1", "pool"),
        LayerSpec("conv3", "conv", 64, 128, 3, 1, 1),
        LayerSpec("conv4", "conv", 128, 128, 3, 1, 1),
    )
    return ExtractorSpec("vgg_head", layers, f"conv{depth}")


def build_resnet_head() -> ExtractorSpec:
    """Strided 7x7 stem, one pooling, then two 64-channel residual blocks."""
    layers = (
        LayerSpec("conv1", "conv", 3, 64, 7, 2, 3),
        LayerSpec("pool1", "pool"),
        LayerSpec("res1", "res", 64, 64, 3, 1, 1),
        LayerSpec("res2", "res", 64, 64, 3, 1, 1),
    )
    return ExtractorSpec("resnet_head", layers, "res2")


def _weight_slots(spec: ExtractorSpec):
    """Manifest entries in execution order: (entry name, shape)."""
    slots = []
    for layer in spec.layers:
        if layer.kind == "conv":
            slots.append(
                (f"{layer.name}.weight",
                 (layer.out_channels, layer.in_channels, layer.kernel, layer.kernel))
            )
            slots.append((f"{layer.name}.bias", (layer.out_channels,)))
        elif layer.kind == "res":
            for half in ("a", "b"):
                slots.append(
                    (f"{layer.name}.{half}.weight",
                     (layer.out_channels, layer.in_channels, layer.kernel, layer.kernel))
                )
                slots.append((f"{layer.name}.{half}.bias", (layer.out_channels,)))
    return slots


@dataclass(frozen=True)
class BoundExtractor:
    """An ExtractorSpec with a weight array for every slot."""

    spec: ExtractorSpec
    weights: dict

    def _conv(self, prefix: str, layer: LayerSpec, activation: str) -> ConvLayer:
        return ConvLayer(
            weights=self.weights[f"{prefix}.weight"],
            bias=self.weights[f"{prefix}.bias"],
            stride=layer.stride,
            padding=layer.padding,
            activation=activation,
        )

    def forward(self, x: np.ndarray) -> np.ndarray:
        """Run layers in order, returning the tap layer's output."""
        t = x
        for layer in self.spec.layers:
            if layer.kind == "conv":
                t = conv2d_forward(t, self._conv(layer.name, layer, layer.activation))
            elif layer.kind == "pool":
                t = max_pool2(t)
            elif layer.kind == "res":
                block = ResidualBlock(
                    conv_a=self._conv(f"{layer.name}.a", layer, "relu"),
                    conv_b=self._conv(f"{layer.name}.b", layer, "none"),
                )
                t = residual_forward(t, block)
            if layer.name == self.spec.tap:
                return t
        raise ValueError(f"tap {self.spec.tap!r} never reached")


def init_weights(spec: ExtractorSpec, seed: int) -> BoundExtractor:
    """Deterministic He-style initialization: weights ~ N(0, 2/fan_in), zero
    biases, drawn from a PCG64 generator in manifest slot order."""
    rng = np.random.Generator(np.random.PCG64(seed))
    weights = {}
    for name, shape in _weight_slots(spec):
        if name.endswith(".bias"):
            weights[name] = np.zeros(shape, dtype=np.float32)
        else:
            fan_in = shape[1] * shape[2] * shape[3]
            scale = math.sqrt(2.0 / fan_in)
            weights[name] = (rng.standard_normal(shape) * scale).astype(np.float32)
    return BoundExtractor(spec, weights)


def save_weights(bound: BoundExtractor, directory) -> Path:
    """Write manifest.json plus weights.bin (little-endian float32 blob)."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    entries = []
    blob = bytearray()
    for name, shape in _weight_slots(bound.spec):
        arr = np.ascontiguousarray(bound.weights[name], dtype="<f4")
        entries.append(
            {
                "name": name,
                "shape": list(shape),
                "dtype": "f32le",
                "byte_offset": len(blob),
                "byte_length": arr.nbytes,
            }
        )
        blob.extend(arr.tobytes())
    manifest = {"extractor": bound.spec.name, "blob": "weights.bin", "layers": entries}
    (directory / "weights.bin").write_bytes(bytes(blob))
    manifest_path = directory / "manifest.json"
    manifest_path.write_text(json.dumps(manifest, indent=2) + "\n")
    return manifest_path


def load_weights(spec: ExtractorSpec, manifest_path) -> BoundExtractor:
    """Bind a manifest's blob to the spec; shapes must match slot-for-slot."""
    manifest_path = Path(manifest_path)
    doc = json.loads(manifest_path.read_text())
    entries = doc["layers"]
    expected = _weight_slots(spec)
    if len(entries) != len(expected):
        raise ShapeMismatchInManifestError(
            f"manifest has {len(entries)} entries, spec needs {len(expected)}"
        )
    blob = (manifest_path.parent / doc.get("blob", "weights.bin")).read_bytes()
    weights = {}
    for entry, (name, shape) in zip(entries, expected):
        if entry["name"] != name or tuple(entry["shape"]) != shape:
            raise ShapeMismatchInManifestError(
                f"expected {name} {shape}, manifest has "
                f"{entry['name']} {tuple(entry['shape'])}"
            )
        if entry.get("dtype", "f32le") != "f32le":
            raise ShapeMismatchInManifestError(
                f"{name}: unsupported dtype {entry.get('dtype')!r}"
            )
        count = int(np.prod(shape)) if shape else 1
        if entry["byte_length"] != 4 * count:
            raise CorruptBlobError(
                f"{name}: byte_length {entry['byte_length']} != {4 * count}"
            )
        start, end = entry["byte_offset"], entry["byte_offset"] + entry["byte_length"]
        if end > len(blob):
            raise CorruptBlobError(
                f"{name}: blob ends at {len(blob)}, entry needs {end}"
            )
        weights[name] = np.frombuffer(blob[start:end], dtype="<f4").reshape(shape).copy()
    return BoundExtractor(spec, weights)


# ------------------------------------------------------ feature extraction

def _validate_dims(spec: ExtractorSpec, h: int, w: int) -> None:
    for layer in spec.layers:
        if layer.kind == "conv":
            try:
                h = conv_output_dim(h, layer.kernel, layer.stride, layer.padding)
                w = conv_output_dim(w, layer.kernel, layer.stride, layer.padding)
            except NonIntegralOutputDimError as exc:
                raise IndivisibleDimsError(str(exc)) from exc
        elif layer.kind == "pool":
            if h % 2 or w % 2:
                raise IndivisibleDimsError(
                    f"{spec.name}: {layer.name} needs even dims, got {h}x{w}"
                )
            h, w = h // 2, w // 2
        if layer.name == spec.tap:
            return


def extract_features(img: ImageF32, extractor: BoundExtractor) -> np.ndarray:
    """Forward an RGB image (values in [0,1], no mean normalization) to the
    extractor's tap layer. Dims that break a pooling or stride raise
    IndivisibleDims before any arithmetic runs."""
    if img.channels != 3:
        raise ShapeMismatchError("extractor input must be 3-channel")
    _validate_dims(extractor.spec, img.height, img.width)
    return extractor.forward(img.data.astype(np.float64))


def _bilinear_resize(plane: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Half-pixel-center bilinear resampling with clamped borders."""
    in_h, in_w = plane.shape
    if (in_h, in_w) == (out_h, out_w):
        return plane.copy()
    ys = (np.arange(out_h, dtype=np.float64) + 0.5) * in_h / out_h - 0.5
    xs = (np.arange(out_w, dtype=np.float64) + 0.5) * in_w / out_w - 0.5
    y0f, x0f = np.floor(ys), np.floor(xs)
    wy, wx = ys - y0f, xs - x0f
    y0 = np.clip(y0f.astype(np.int64), 0, in_h - 1)
    y1 = np.clip(y0f.astype(np.int64) + 1, 0, in_h - 1)
    x0 = np.clip(x0f.astype(np.int64), 0, in_w - 1)
    x1 = np.clip(x0f.astype(np.int64) + 1, 0, in_w - 1)
    wy = wy[:, None]
    wx = wx[None, :]
    top = (1.0 - wx) * plane[np.ix_(y0, x0)] + wx * plane[np.ix_(y0, x1)]
    bottom = (1.0 - wx) * plane[np.ix_(y1, x0)] + wx * plane[np.ix_(y1, x1)]
    return (1.0 - wy) * top + wy * bottom


def attention_map(features: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Channel-mean feature map, min-max normalized then upsampled to the
    requested size. A flat map (max == min) normalizes to all 0.5."""
    if features.size == 0:
        raise ValueError("features must be non-empty")
    m = features.mean(axis=0, dtype=np.float64)
    lo, hi = float(m.min()), float(m.max())
    if hi == lo:
        norm = np.full(m.shape, 0.5)
    else:
        norm = (m - lo) / (hi - lo)
    return _bilinear_resize(norm, out_h, out_w)


def fuse_attention(a: np.ndarray, b: np.ndarray, mode: str = "mean") -> np.ndarray:
    if mode != "mean":
        raise ValueError(f"unknown fusion mode {mode!r}")
    if a.shape != b.shape:
        raise DimMismatchError(f"attention shapes differ: {a.shape} vs {b.shape}")
    return (a + b) / 2.0


def attention_adjust(img: ImageF32, attn: np.ndarray, gain: float = 0.5) -> ImageF32:
    """Scale V multiplicatively by 1 + gain*(attn - mean(attn)).

    Implemented as a per-pixel RGB scale with the factor capped at 1/V, which
    realizes V' = clamp(V * factor) while leaving hue and saturation exactly
    unchanged; gain 0 is a bit-exact identity.
    """
    if attn.shape != (img.height, img.width):
        raise DimMismatchError(
            f"attention {attn.shape} vs image {img.height}x{img.width}"
        )
    if gain < 0.0:
        raise ValueError("gain must be >= 0")
    planes = img.data.astype(np.float64)
    v = planes.max(axis=0)
    factor = 1.0 + gain * (attn - float(np.mean(attn, dtype=np.float64)))
    factor = np.maximum(factor, 0.0)
    cap = np.where(v > 0.0, 1.0 / np.where(v > 0.0, v, 1.0), np.inf)
    return ImageF32.from_array(planes * np.minimum(factor, cap))


def feature_guided_enhance(
    img: ImageF32,
    attn: np.ndarray,
    gain: float = 0.5,
    thresholds: ClassifierThresholds = ClassifierThresholds(),
    plan_overrides: dict | None = None,
    on_step=None,
) -> ImageF32:
    """Attention-guided V adjustment followed by the image's classical plan.

    The plan is built from the original image's degradation flags, so at
    gain 0 the output matches the purely classical path bit-for-bit.
    """
    adjusted = attention_adjust(img, attn, gain)
    flags, _ = classify(img, thresholds)
    plan = build_plan(flags, plan_overrides)
    return apply_plan(adjusted, plan, on_step)
