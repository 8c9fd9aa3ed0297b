"""Declarative decoder descriptions and static shape inference."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Optional

from ..errors import SpecError

KINDS = (
    "conv2d",
    "deconv2d",
    "fully_connected",
    "instance_norm",
    "leaky_relu",
    "tanh",
    "flatten",
    "reshape",
)
WEIGHTED = ("conv2d", "deconv2d", "fully_connected")


def _pair(v, name, where):
    if isinstance(v, int):
        return (v, v)
    try:
        a, b = v
    except (TypeError, ValueError):
        raise SpecError(f"{where}: {name} must be an int or a pair, got {v!r}") from None
    return (int(a), int(b))


@dataclass(frozen=True)
class LayerSpec:
    kind: str
    out_channels: Optional[int] = None
    kernel: Optional[tuple] = None
    stride: tuple = (1, 1)
    padding: tuple = (0, 0)
    out_features: Optional[int] = None
    negative_slope: float = 0.2
    target_shape: Optional[tuple] = None
    row: Optional[int] = None

    @classmethod
    def from_dict(cls, d: dict, index: int = 0) -> "LayerSpec":
        where = f"layer {index}"
        d = dict(d)
        kind = d.pop("kind", None)
        if kind not in KINDS:
            raise SpecError(f"{where}: unknown layer kind {kind!r}")
        kw = {"kind": kind, "row": d.pop("row", None)}
        d.pop("label", None)
        if kind in ("conv2d", "deconv2d"):
            try:
                kw["out_channels"] = int(d.pop("out_channels"))
                kw["kernel"] = _pair(d.pop("kernel"), "kernel", where)
            except KeyError as e:
                raise SpecError(f"{where}: {kind} requires {e.args[0]}") from None
            kw["stride"] = _pair(d.pop("stride", 1), "stride", where)
            kw["padding"] = _pair(d.pop("padding", 0), "padding", where)
        elif kind == "fully_connected":
            try:
                kw["out_features"] = int(d.pop("out_features"))
            except KeyError:
                raise SpecError(f"{where}: fully_connected requires out_features") from None
        elif kind == "leaky_relu":
            kw["negative_slope"] = float(d.pop("negative_slope", 0.2))
        elif kind == "reshape":
            try:
                kw["target_shape"] = tuple(int(s) for s in d.pop("target_shape"))
            except KeyError:
                raise SpecError(f"{where}: reshape requires target_shape") from None
        if d:
            raise SpecError(f"{where}: unexpected parameters {sorted(d)} for {kind}")
        spec = cls(**kw)
        spec.validate(index)
        return spec

    def validate(self, index: int = 0):
        where = f"layer {index} ({self.kind})"
        if self.kind in ("conv2d", "deconv2d"):
            if self.out_channels < 1 or min(self.kernel) < 1:
                raise SpecError(f"{where}: out_channels and kernel must be positive")
            if min(self.stride) < 1:
                raise SpecError(f"{where}: stride must be >= 1")
            if min(self.padding) < 0:
                raise SpecError(f"{where}: padding must be >= 0")
        if self.kind == "fully_connected" and self.out_features < 1:
            raise SpecError(f"{where}: out_features must be positive")
        if self.kind == "reshape" and (
            not self.target_shape or min(self.target_shape) < 1
        ):
            raise SpecError(f"{where}: target_shape must be non-empty and positive")
        if self.kind == "leaky_relu" and self.negative_slope < 0:
            raise SpecError(f"{where}: negative_slope must be >= 0")

    def to_dict(self) -> dict:
        d = {"kind": self.kind}
        if self.kind in ("conv2d", "deconv2d"):
            d.update(
                out_channels=self.out_channels,
                kernel=list(self.kernel),
                stride=list(self.stride),
                padding=list(self.padding),
            )
        elif self.kind == "fully_connected":
            d["out_features"] = self.out_features
        elif self.kind == "leaky_relu":
            d["negative_slope"] = self.negative_slope
        elif self.kind == "reshape":
            d["target_shape"] = list(self.target_shape)
        if self.row is not None:
            d["row"] = self.row
        return d


def layer_output_shape(layer: LayerSpec, shape: tuple, index: int = 0) -> tuple:
    where = f"layer {index} ({layer.kind}) on input {shape}"
    k = layer.kind
    if k in ("conv2d", "deconv2d"):
        if len(shape) != 3:
            raise SpecError(f"{where}: expects a [C, H, W] input")
        _, h, w = shape
        (kh, kw), (sh, sw), (ph, pw) = layer.kernel, layer.stride, layer.padding
        if k == "conv2d":
            oh = (h + 2 * ph - kh) // sh + 1
            ow = (w + 2 * pw - kw) // sw + 1
        else:
            oh = (h - 1) * sh - 2 * ph + kh
            ow = (w - 1) * sw - 2 * pw + kw
        if oh < 1 or ow < 1:
            raise SpecError(f"{where}: produces empty spatial size {(oh, ow)}")
        return (layer.out_channels, oh, ow)
    if k == "fully_connected":
        if len(shape) != 1:
            raise SpecError(f"{where}: expects a flat input, insert a flatten layer")
        return (layer.out_features,)
    if k == "instance_norm":
        if len(shape) != 3:
            raise SpecError(f"{where}: expects a [C, H, W] input")
        return shape
    if k in ("leaky_relu", "tanh"):
        return shape
    size = 1
    for s in shape:
        size *= s
    if k == "flatten":
        return (size,)
    target = layer.target_shape
    tsize = 1
    for s in target:
        tsize *= s
    if tsize != size:
        raise SpecError(f"{where}: cannot reshape {size} values to {target}")
    return tuple(target)


@dataclass(frozen=True)
class DecoderSpec:
    input_shape: tuple
    layers: tuple
    expected_output_shape: tuple
    name: str = "decoder"
    extra: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "input_shape", tuple(self.input_shape))
        object.__setattr__(self, "expected_output_shape", tuple(self.expected_output_shape))
        object.__setattr__(self, "layers", tuple(self.layers))
        infer_shapes(self)

    @classmethod
    def from_dict(cls, d: dict) -> "DecoderSpec":
        try:
            layers = [LayerSpec.from_dict(ld, i) for i, ld in enumerate(d["layers"])]
            return cls(
                input_shape=tuple(d["input_shape"]),
                layers=tuple(layers),
                expected_output_shape=tuple(d["expected_output_shape"]),
                name=d.get("name", "decoder"),
                extra={k: v for k, v in d.items() if k not in (
                    "input_shape", "layers", "expected_output_shape", "name")},
            )
        except KeyError as e:
            raise SpecError(f"decoder spec is missing {e.args[0]!r}") from None

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "input_shape": list(self.input_shape),
            "expected_output_shape": list(self.expected_output_shape),
            "layers": [layer.to_dict() for layer in self.layers],
        }

    def with_input_shape(self, shape) -> "DecoderSpec":
        return DecoderSpec(
            input_shape=tuple(shape),
            layers=self.layers,
            expected_output_shape=self.expected_output_shape,
            name=self.name,
        )


def infer_shapes(spec: DecoderSpec) -> list:
    """Per-layer output shapes; raises :class:`SpecError` naming the first bad layer."""
    if not spec.input_shape or min(spec.input_shape) < 1:
        raise SpecError(f"invalid input shape {spec.input_shape}")
    shapes = []
    shape = tuple(spec.input_shape)
    for i, layer in enumerate(spec.layers):
        shape = layer_output_shape(layer, shape, i)
        shapes.append(shape)
    final = shapes[-1] if shapes else tuple(spec.input_shape)
    if final != tuple(spec.expected_output_shape):
        raise SpecError(
            f"shape chain ends at {final}, expected {tuple(spec.expected_output_shape)}"
        )
    return shapes


def load_spec(path) -> DecoderSpec:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as e:
        raise SpecError(f"{path}: invalid JSON: {e.msg}") from None
    return DecoderSpec.from_dict(data)


def builtin_spec(name: str) -> DecoderSpec:
    """Load one of the shipped decoder configs, e.g. ``"teapot_content"``."""
    res = resources.files("csdis") / "configs" / f"{name}.json"
    if not res.is_file():
        raise SpecError(f"no built-in decoder config named {name!r}")
    return DecoderSpec.from_dict(json.loads(res.read_text()))


def builtin_names() -> list:
    root = resources.files("csdis") / "configs"
    return sorted(
        p.name[:-5]
        for p in root.iterdir()
        if p.name.endswith(".json") and not p.name.startswith(("train", "iob"))
    )
