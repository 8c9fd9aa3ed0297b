"""Procedural stand-in for the teapot dataset.

Five independent uniform factors drive each 64x64 RGB sample. Azimuth and
elevation pose an asymmetric convex polygon (rotation, then vertical
squash); red, green and blue set its fill colour. The binary mask of the
painted pixels is the ground-truth content, the colour triple the
ground-truth style. Pose changes the mask and never the colour, colour
changes the image and never the mask.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import rng
from .errors import ConfigError
from .tensor import SampleSet

SIZE = 64
CENTER = SIZE / 2.0
BACKGROUND = -1.0
FACTOR_NAMES = ("azimuth", "elevation", "red", "green", "blue")

# (angle in degrees, radius in pixels); the long first vertex is the spout
_OUTLINE = ((0.0, 30.0), (75.0, 14.0), (160.0, 24.0), (200.0, 24.0), (285.0, 14.0))
BASE_POLYGON = np.array(
    [(r * math.cos(math.radians(a)), r * math.sin(math.radians(a))) for a, r in _OUTLINE]
)

SCENARIOS = ("gt_gt", "rand_gt", "gt_rand", "rand_rand", "gt_corr")


@dataclass(frozen=True)
class FactorSample:
    azimuth: float
    elevation: float
    red: float
    green: float
    blue: float

    def __post_init__(self):
        for name in FACTOR_NAMES:
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ConfigError(f"{name} must lie in [0, 1], got {v}")

    def as_array(self) -> np.ndarray:
        return np.array([getattr(self, n) for n in FACTOR_NAMES])


@dataclass(frozen=True)
class RenderedSample:
    image: np.ndarray
    mask: np.ndarray
    factors: FactorSample


def sample_factors(n: int, seed: int) -> list:
    """``n`` i.i.d. factor draws; sample ``i`` depends only on ``(seed, i)``."""
    return [FactorSample(*row) for row in factor_matrix(n, seed)]


def factor_matrix(n: int, seed: int) -> np.ndarray:
    if n < 1:
        raise ConfigError(f"n must be >= 1, got {n}")
    return rng.uniform(seed, "factors", (n, len(FACTOR_NAMES)))


def polygon(azimuth: float, elevation: float) -> np.ndarray:
    """Vertices in image coordinates (x right, y down), counter-clockwise in math order."""
    theta = 2.0 * math.pi * azimuth
    c, s = math.cos(theta), math.sin(theta)
    x = BASE_POLYGON[:, 0] * c - BASE_POLYGON[:, 1] * s
    y = BASE_POLYGON[:, 0] * s + BASE_POLYGON[:, 1] * c
    y = y * (0.5 + 0.5 * elevation)
    return np.stack([x + CENTER, y + CENTER], axis=1)


_PIX = np.arange(SIZE) + 0.5


def rasterize(vertices: np.ndarray) -> np.ndarray:
    """Binary mask of pixel centres inside a convex polygon (edges inclusive)."""
    px = _PIX[None, :]
    py = _PIX[:, None]
    inside = np.ones((SIZE, SIZE), dtype=bool)
    nxt = np.roll(vertices, -1, axis=0)
    for (x0, y0), (x1, y1) in zip(vertices, nxt):
        inside &= (x1 - x0) * (py - y0) - (y1 - y0) * (px - x0) >= 0.0
    return inside


def render(f: FactorSample) -> RenderedSample:
    mask = rasterize(polygon(f.azimuth, f.elevation))
    color = np.array([2.0 * f.red - 1.0, 2.0 * f.green - 1.0, 2.0 * f.blue - 1.0])
    image = np.full((3, SIZE, SIZE), BACKGROUND)
    image[:, mask] = color[:, None]
    return RenderedSample(image=image, mask=mask[None].astype(np.float64), factors=f)


def render_all(factors: np.ndarray, dtype=np.float32):
    """Render a factor matrix into stacked ``(N, 3, 64, 64)`` images and ``(N, 1, 64, 64)`` masks."""
    n = len(factors)
    images = np.empty((n, 3, SIZE, SIZE), dtype=dtype)
    masks = np.empty((n, 1, SIZE, SIZE), dtype=dtype)
    for i, row in enumerate(factors):
        r = render(FactorSample(*row))
        images[i] = r.image
        masks[i] = r.mask
    return images, masks


def generate(n: int, seed: int, dtype=np.float32) -> SampleSet:
    """Ground-truth sample set: images, masks as contents, colours as styles, factors."""
    factors = factor_matrix(n, seed)
    images, masks = render_all(factors, dtype)
    return SampleSet(
        images=images,
        contents=masks,
        styles=factors[:, 2:5].copy(),
        factors=factors,
        meta={"generator": "polygon-teapot-analog", "seed": int(seed), "n": int(n)},
    )


def random_contents(n: int, shape, seed: int, dtype=np.float32) -> np.ndarray:
    return rng.uniform(seed, "content", (n,) + tuple(shape)).astype(dtype)


def random_styles(n: int, length: int, seed: int) -> np.ndarray:
    return rng.uniform(seed, "style", (n, length))


def make_scenario(samples: SampleSet, kind: str, seed: int = 0) -> SampleSet:
    """Swap ground-truth representations for random or pose-correlated ones.

    ``kind`` is ``<content>_<style>`` with content in {gt, rand} and style in
    {gt, rand, corr}; ``gt_corr`` uses (azimuth, elevation, red) as style.
    Random draws are U[0, 1] and depend only on ``seed``.
    """
    if kind not in SCENARIOS:
        raise ConfigError(f"unknown scenario {kind!r}; expected one of {SCENARIOS}")
    samples.require("images", "contents", "factors")
    content_kind, style_kind = kind.split("_")
    n = samples.n
    if content_kind == "gt":
        contents = samples.contents
    else:
        contents = random_contents(n, samples.contents.shape[1:], seed,
                                   dtype=samples.contents.dtype)
    if style_kind == "gt":
        styles = samples.factors[:, 2:5]
    elif style_kind == "rand":
        styles = random_styles(n, 3, seed)
    else:
        styles = samples.factors[:, [0, 1, 2]]
    return SampleSet(
        images=samples.images,
        contents=contents,
        styles=np.ascontiguousarray(styles),
        factors=samples.factors,
        meta={**samples.meta, "scenario": kind, "scenario_seed": int(seed)},
    )
