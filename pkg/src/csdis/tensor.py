"""Dense tensors, sample sets and the channel-major flattening convention.

Samples are either vectors (rank 1) or ``[C, H, W]`` maps (rank 3). A
sample map is flattened by concatenating its channels and scanning each
channel row by row, so element ``(c, h, w)`` lands at ``c*H*W + h*W + w``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np

from .errors import InputError, ShapeError

DTYPES = {"float32": np.float32, "float64": np.float64}


@dataclass(frozen=True)
class Tensor:
    """Immutable dense array. The buffer is row-major and read-only."""

    data: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.data)
        if arr.dtype not in (np.float32, np.float64):
            arr = arr.astype(np.float64)
        if arr.ndim == 0:
            raise ShapeError("tensor must have at least one dimension")
        if any(d < 1 for d in arr.shape):
            raise ShapeError(f"all dimension sizes must be >= 1, got {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise InputError("tensor contains NaN or Inf")
        arr = np.array(arr, order="C", copy=True)
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)

    @property
    def shape(self) -> tuple:
        return self.data.shape

    @property
    def dtype(self) -> str:
        return self.data.dtype.name

    @property
    def rank(self) -> int:
        return self.data.ndim

    def __len__(self):
        return self.data.shape[0]


def Vector(values) -> Tensor:
    """Build a rank-1 tensor."""
    t = Tensor(np.asarray(values))
    if t.rank != 1:
        raise ShapeError(f"vector must be rank 1, got shape {t.shape}")
    return t


def _as_array(t) -> np.ndarray:
    return t.data if isinstance(t, Tensor) else np.asarray(t)


def flatten_sample(t: Union[Tensor, np.ndarray]) -> np.ndarray:
    """Flatten one sample: 1-D input is returned as is, ``[C, H, W]`` is channel-major."""
    arr = _as_array(t)
    if arr.ndim == 1:
        return arr
    if arr.ndim != 3:
        raise ShapeError(
            f"only rank-1 and rank-3 sample layouts are defined, got rank {arr.ndim}"
        )
    # C-order reshape of [C, H, W] is exactly c*H*W + h*W + w
    return arr.reshape(-1)


def flatten_batch(arr: np.ndarray) -> np.ndarray:
    """Flatten an already stacked ``(N, ...)`` array to ``(N, D)``."""
    arr = np.asarray(arr)
    if arr.ndim not in (2, 4):
        raise ShapeError(
            f"stacked samples must be (N, D) or (N, C, H, W), got {arr.shape}"
        )
    return arr.reshape(arr.shape[0], -1)


def stack_samples(items: Sequence) -> np.ndarray:
    """Stack samples into an ``N x D`` matrix, one flattened sample per row."""
    if len(items) < 2:
        raise ShapeError(f"need at least 2 samples, got {len(items)}")
    shapes = {tuple(_as_array(it).shape) for it in items}
    if len(shapes) != 1:
        raise ShapeError(f"heterogeneous sample shapes: {sorted(shapes)}")
    return np.stack([flatten_sample(it) for it in items])


ROLES = ("images", "contents", "styles", "factors")


@dataclass(frozen=True)
class SampleSet:
    """N aligned samples. Each present role is stored stacked as ``(N, ...)``."""

    images: Optional[np.ndarray] = None
    contents: Optional[np.ndarray] = None
    styles: Optional[np.ndarray] = None
    factors: Optional[np.ndarray] = None
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        n = None
        for role in ROLES:
            arr = getattr(self, role)
            if arr is None:
                continue
            arr = np.asarray(arr)
            if arr.dtype not in (np.float32, np.float64):
                arr = arr.astype(np.float64)
            if role == "styles" and arr.ndim != 2:
                raise ShapeError(f"styles must be (N, L), got {arr.shape}")
            if role in ("images", "contents") and arr.ndim != 4:
                raise ShapeError(f"{role} must be (N, C, H, W), got {arr.shape}")
            if role == "factors" and arr.ndim != 2:
                raise ShapeError(f"factors must be (N, F), got {arr.shape}")
            if not np.all(np.isfinite(arr)):
                raise InputError(f"{role} contain NaN or Inf")
            if n is None:
                n = arr.shape[0]
            elif arr.shape[0] != n:
                raise ShapeError(f"{role} has {arr.shape[0]} entries, expected {n}")
            arr.setflags(write=False)
            object.__setattr__(self, role, arr)
        if n is None:
            raise ShapeError("sample set has no members")
        if n < 2:
            raise ShapeError("a sample set needs at least 2 samples")

    @property
    def n(self) -> int:
        for role in ROLES:
            arr = getattr(self, role)
            if arr is not None:
                return arr.shape[0]
        return 0

    def roles(self) -> list:
        return [r for r in ROLES if getattr(self, r) is not None]

    def require(self, *roles):
        missing = [r for r in roles if getattr(self, r) is None]
        if missing:
            raise ShapeError(f"sample set is missing role(s): {', '.join(missing)}")

    def subset(self, idx) -> "SampleSet":
        idx = np.asarray(idx)
        kw = {r: getattr(self, r)[idx] for r in self.roles()}
        return SampleSet(**kw, meta=dict(self.meta))

    def replace(self, **members) -> "SampleSet":
        kw = {r: getattr(self, r) for r in self.roles()}
        kw.update(members)
        return SampleSet(**kw, meta=dict(self.meta))
