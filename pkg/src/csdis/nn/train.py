"""Adam and the minibatch training loop."""

from __future__ import annotations

import json
import logging
import math
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from ..errors import ConfigError, NumericalError, ShapeError
from .model import DecoderModel, mse

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 1e-4
    beta1: float = 0.5
    beta2: float = 0.999
    epochs: int = 40
    batch_size: int = 10
    seed: int = 0
    adam_epsilon: float = 1e-8

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise ConfigError(f"learning_rate must be > 0, got {self.learning_rate}")
        for name in ("beta1", "beta2"):
            v = getattr(self, name)
            if not 0 <= v < 1:
                raise ConfigError(f"{name} must be in [0, 1), got {v}")
        if self.epochs < 1:
            raise ConfigError(f"epochs must be >= 1, got {self.epochs}")
        if self.batch_size < 1:
            raise ConfigError(f"batch_size must be >= 1, got {self.batch_size}")
        if not self.adam_epsilon > 0:
            raise ConfigError("adam_epsilon must be > 0")

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise ConfigError(f"unknown training options {sorted(unknown)}")
        return cls(**d)

    @classmethod
    def load(cls, path) -> "TrainConfig":
        try:
            return cls.from_dict(json.loads(Path(path).read_text()))
        except json.JSONDecodeError as e:
            raise ConfigError(f"{path}: invalid JSON: {e.msg}") from None

    def to_dict(self) -> dict:
        return asdict(self)


def adam_step(model: DecoderModel, grads, config: TrainConfig, t: int) -> DecoderModel:
    """One bias-corrected Adam update, in place. ``t`` counts from 1."""
    if t < 1:
        raise ConfigError(f"Adam step index must be >= 1, got {t}")
    params = [p for _, _, p in model.parameters()]
    if model.adam_m is None:
        model.adam_m = [np.zeros_like(p) for p in params]
        model.adam_v = [np.zeros_like(p) for p in params]
    b1, b2 = config.beta1, config.beta2
    c1 = 1.0 - b1**t
    c2 = 1.0 - b2**t
    step = config.learning_rate / c1
    for p, g, m, v in zip(params, grads, model.adam_m, model.adam_v):
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * (g * g)
        denom = np.sqrt(v / c2)
        denom += config.adam_epsilon
        p -= (step * m / denom).astype(p.dtype, copy=False)
    model.step = t
    return model


def train_decoder(spec, inputs, targets, config: TrainConfig, dtype=np.float32,
                  on_epoch=None, eval_batch=64):
    """Fit a fresh decoder to map ``inputs[i]`` to ``targets[i]``.

    Runs ``epochs * ceil(N / batch_size)`` Adam steps over minibatches
    shuffled with ``config.seed`` and returns ``(model, final_mse)`` where
    the MSE is re-evaluated on the full set after training.
    ``on_epoch(epoch, model, mean_loss)`` is called after each epoch.
    """
    inputs = np.asarray(inputs)
    targets = np.asarray(targets)
    if len(inputs) != len(targets):
        raise ShapeError(f"{len(inputs)} inputs but {len(targets)} targets")
    n = len(inputs)
    if n < 1:
        raise ShapeError("no training samples")
    if tuple(targets.shape[1:]) != tuple(spec.expected_output_shape):
        raise ShapeError(
            f"targets have sample shape {targets.shape[1:]}, decoder produces "
            f"{spec.expected_output_shape}"
        )
    seed_seq = np.random.SeedSequence(config.seed)
    init_seed, shuffle_seed = seed_seq.spawn(2)
    model = DecoderModel(spec, seed=init_seed.generate_state(1)[0], dtype=dtype)
    shuffler = np.random.default_rng(shuffle_seed)
    t = 0
    for epoch in range(config.epochs):
        order = shuffler.permutation(n)
        total = 0.0
        for start in range(0, n, config.batch_size):
            idx = order[start : start + config.batch_size]
            t += 1
            loss, grads = model.backward(inputs[idx], targets[idx])
            if not math.isfinite(loss):
                raise NumericalError(f"non-finite loss at step {t}")
            adam_step(model, grads, config, t)
            total += loss * len(idx)
        mean_loss = total / n
        log.debug("epoch %d/%d loss %.6f", epoch + 1, config.epochs, mean_loss)
        if on_epoch is not None:
            on_epoch(epoch, model, mean_loss)
    final = mse(model.predict(inputs, eval_batch), targets)
    return model, final
