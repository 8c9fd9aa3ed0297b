"""Information over bias.

For each run a decoder is trained from the latents ``z_i`` to the images
``I_i`` and a second decoder of the same architecture from a constant
all-ones input. The per-image score is::

    mse_i(bias decoder) / (mse_i(latent decoder) + eps)

where ``mse_i`` averages, over the K pixels of image i, the squared norm of
the per-pixel channel difference. A run's value is the mean score over
images; values near 1 mean the latent explains nothing beyond what the
decoder can learn from the dataset alone.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional

import numpy as np

from .dcor import dcor_blocked
from .errors import ConfigError, DegenerateInput, NumericalError, ShapeError
from .nn import DecoderSpec, TrainConfig, builtin_spec, load_spec, per_sample_mse, train_decoder
from .tensor import SampleSet

log = logging.getLogger(__name__)

DEFAULT_EPSILON = 1e-8
COLLAPSE_IOB = 1.2
COLLAPSE_DC = 0.1


@dataclass(frozen=True)
class IobConfig:
    decoder_spec_z: DecoderSpec
    train: TrainConfig = field(default_factory=TrainConfig)
    decoder_spec_bias: Optional[DecoderSpec] = None
    runs: int = 3
    epsilon: float = DEFAULT_EPSILON
    input_range: tuple = (-1.0, 1.0)

    def __post_init__(self):
        if self.runs < 1:
            raise ConfigError(f"runs must be >= 1, got {self.runs}")
        if not self.epsilon > 0:
            raise ConfigError(f"epsilon must be > 0, got {self.epsilon}")
        bias = self.decoder_spec_bias or self.decoder_spec_z
        if bias.expected_output_shape != self.decoder_spec_z.expected_output_shape:
            raise ConfigError("latent and bias decoders must produce the same image shape")
        object.__setattr__(self, "decoder_spec_bias", bias)

    @classmethod
    def from_files(cls, decoder, train=None, runs=3, epsilon=DEFAULT_EPSILON):
        spec = resolve_spec(decoder)
        tcfg = TrainConfig.load(train) if train else TrainConfig()
        return cls(decoder_spec_z=spec, train=tcfg, runs=runs, epsilon=epsilon)


def resolve_spec(decoder) -> DecoderSpec:
    if isinstance(decoder, DecoderSpec):
        return decoder
    p = Path(decoder)
    if p.suffix == ".json" or p.exists():
        return load_spec(p)
    return builtin_spec(str(decoder))


@dataclass(frozen=True)
class IobRun:
    iob: float
    seed: int
    mse_bias: float
    mse_z: float
    final_train_mse_z: float
    final_train_mse_bias: float


@dataclass(frozen=True)
class IobResult:
    mean: float
    std: float
    per_run: list
    mse_bias_mean: float
    mse_z_mean: float
    runs: list = field(default_factory=list, compare=False)

    def as_dict(self) -> dict:
        return {
            "mean": self.mean,
            "std": self.std,
            "per_run": list(self.per_run),
            "mse_bias_mean": self.mse_bias_mean,
            "mse_z_mean": self.mse_z_mean,
            "runs": [r.__dict__ for r in self.runs],
        }


def make_bias_input(z_shape) -> np.ndarray:
    """The uninformative input: ones shaped like a single latent."""
    return np.ones(tuple(z_shape), dtype=np.float32)


def _check_range(images, lo, hi):
    mn, mx = float(images.min()), float(images.max())
    if mn < lo - 1e-6 or mx > hi + 1e-6:
        raise ConfigError(
            f"images span [{mn:.3g}, {mx:.3g}], expected values inside [{lo}, {hi}]"
        )


def _check_shapes(images, latents, spec_z):
    n = len(images)
    if len(latents) != n:
        raise ShapeError(f"{n} images but {len(latents)} latents")
    if tuple(latents.shape[1:]) != tuple(spec_z.input_shape):
        raise ShapeError(
            f"latent shape {latents.shape[1:]} does not match decoder input {spec_z.input_shape}"
        )
    if tuple(images.shape[1:]) != tuple(spec_z.expected_output_shape):
        raise ShapeError(
            f"image shape {images.shape[1:]} does not match decoder output "
            f"{spec_z.expected_output_shape}"
        )


def fit_bias(images, spec_bias, train: TrainConfig, seed: int, dtype=np.float32):
    """Train the bias decoder on the constant input; returns ``(per_image_mse, train_mse)``."""
    images = np.asarray(images)
    n = len(images)
    shape = tuple(spec_bias.input_shape)
    ones = np.broadcast_to(make_bias_input(shape), (n,) + shape)
    model, fin = train_decoder(spec_bias, ones, images, replace(train, seed=int(seed)),
                               dtype=dtype)
    recon = model.forward(ones[:1])
    return per_sample_mse(np.broadcast_to(recon, images.shape), images), fin


def fit_latent(images, latents, spec_z, train: TrainConfig, seed: int, dtype=np.float32):
    """Train the latent decoder; returns ``(per_image_mse, train_mse)``."""
    images = np.asarray(images)
    latents = np.asarray(latents)
    _check_shapes(images, latents, spec_z)
    model, fin = train_decoder(spec_z, latents, images, replace(train, seed=int(seed)),
                               dtype=dtype)
    return per_sample_mse(model.predict(latents), images), fin


def combine(seed, bias_fit, latent_fit, epsilon=DEFAULT_EPSILON) -> IobRun:
    """Per-image ratio of bias to latent MSE, averaged over images."""
    mse_b, fin_b = bias_fit
    mse_z, fin_z = latent_fit
    value = float(np.mean(mse_b / (mse_z + epsilon)))
    if not math.isfinite(value) or value <= 0:
        raise NumericalError(f"IOB run produced {value}")
    return IobRun(
        iob=value,
        seed=int(seed),
        mse_bias=float(mse_b.mean()),
        mse_z=float(mse_z.mean()),
        final_train_mse_z=float(fin_z),
        final_train_mse_bias=float(fin_b),
    )


def iob_run(images, latents, spec_z, spec_bias, train: TrainConfig, seed: int,
            epsilon=DEFAULT_EPSILON, dtype=np.float32) -> IobRun:
    """One run: fresh latent and bias decoders, both initialised from ``seed``."""
    images = np.asarray(images)
    latents = np.asarray(latents)
    _check_shapes(images, latents, spec_z)
    bias = fit_bias(images, spec_bias, train, seed, dtype)
    latent = fit_latent(images, latents, spec_z, train, seed, dtype)
    return combine(seed, bias, latent, epsilon)


def aggregate(runs) -> IobResult:
    vals = np.array([r.iob for r in runs])
    return IobResult(
        mean=float(vals.mean()),
        std=float(vals.std()),
        per_run=[float(v) for v in vals],
        mse_bias_mean=float(np.mean([r.mse_bias for r in runs])),
        mse_z_mean=float(np.mean([r.mse_z for r in runs])),
        runs=list(runs),
    )


def compute_iob(images, latents, cfg: IobConfig, base_seed: Optional[int] = None) -> IobResult:
    """IOB averaged over ``cfg.runs`` runs; run ``r`` uses seed ``base_seed + r``.

    ``images`` and ``latents`` may be stacked arrays or sample sets (the
    ``images`` role and, for latents, ``contents`` or ``styles`` matching
    the decoder input shape).
    """
    images = _images_of(images)
    latents = _latents_of(latents, cfg.decoder_spec_z.input_shape)
    _check_range(images, *cfg.input_range)
    base = cfg.train.seed if base_seed is None else base_seed
    runs = []
    for r in range(cfg.runs):
        run = iob_run(images, latents, cfg.decoder_spec_z, cfg.decoder_spec_bias,
                      cfg.train, base + r, cfg.epsilon)
        log.info("IOB run %d/%d: %.4f", r + 1, cfg.runs, run.iob)
        runs.append(run)
    return aggregate(runs)


def _images_of(x):
    if isinstance(x, SampleSet):
        x.require("images")
        return x.images
    return np.asarray(x)


def _latents_of(x, input_shape):
    if not isinstance(x, SampleSet):
        return np.asarray(x)
    for role in ("contents", "styles"):
        arr = getattr(x, role)
        if arr is not None and tuple(arr.shape[1:]) == tuple(input_shape):
            return arr
    raise ShapeError(f"sample set has no contents or styles of shape {tuple(input_shape)}")


def iob_pair_report(images, contents, styles, cfg_c: IobConfig, cfg_s: IobConfig,
                    base_seed: Optional[int] = None) -> dict:
    """IOB for content and style plus a posterior-collapse flag.

    The flag is raised when the two representations look disentangled
    (``dcor(C, s) <= 0.1``) while either one carries little information
    (IOB at most 1.2).
    """
    if contents is None or styles is None:
        raise ShapeError("both contents and styles are required")
    contents = np.asarray(contents)
    styles = np.asarray(styles)
    if len(contents) != len(styles):
        raise ShapeError("contents and styles are not aligned")
    iob_c = compute_iob(images, contents, cfg_c, base_seed)
    iob_s = compute_iob(images, styles, cfg_s, base_seed)
    try:
        dc = dcor_blocked(contents, styles).dcor
    except DegenerateInput:
        # undefined for a constant representation, which is trivially independent
        dc = None
    uncorrelated = dc is None or dc <= COLLAPSE_DC
    collapse = uncorrelated and min(iob_c.mean, iob_s.mean) <= COLLAPSE_IOB
    return {
        "iob_ic": iob_c,
        "iob_is": iob_s,
        "dc_cs": dc,
        "posterior_collapse": bool(collapse),
    }

