"""Decoder models assembled from a :class:`DecoderSpec`."""

from __future__ import annotations

import hashlib
import math

import numpy as np

from ..errors import NumericalError, ShapeError
from .layers import (
    Conv2d,
    Deconv2d,
    Flatten,
    FullyConnected,
    InstanceNorm,
    LeakyReLU,
    Reshape,
    Tanh,
    to_internal,
    to_public,
)
from .spec import DecoderSpec, infer_shapes


def build_layer(layer_spec, in_shape, dtype, rng):
    k = layer_spec.kind
    if k == "conv2d":
        return Conv2d(in_shape[0], layer_spec.out_channels, layer_spec.kernel,
                      layer_spec.stride, layer_spec.padding, dtype, rng)
    if k == "deconv2d":
        return Deconv2d(in_shape[0], layer_spec.out_channels, layer_spec.kernel,
                        layer_spec.stride, layer_spec.padding, dtype, rng)
    if k == "fully_connected":
        return FullyConnected(in_shape[0], layer_spec.out_features, dtype, rng)
    if k == "instance_norm":
        return InstanceNorm()
    if k == "leaky_relu":
        return LeakyReLU(layer_spec.negative_slope)
    if k == "tanh":
        return Tanh()
    if k == "flatten":
        return Flatten(int(np.prod(in_shape)))
    return Reshape(layer_spec.target_shape)


class DecoderModel:
    """Parameters and Adam state for one decoder.

    ``dtype`` is the parameter and activation precision: float32 for
    training runs, float64 for gradient checks.
    """

    def __init__(self, spec: DecoderSpec, seed: int = 0, dtype=np.float32):
        self.spec = spec
        self.dtype = np.dtype(dtype)
        self.shapes = infer_shapes(spec)
        self.rng = np.random.default_rng(seed)
        self.layers = []
        shape = spec.input_shape
        for layer_spec, out_shape in zip(spec.layers, self.shapes):
            self.layers.append(build_layer(layer_spec, shape, self.dtype, self.rng))
            shape = out_shape
        self.adam_m = None
        self.adam_v = None
        self.step = 0

    def parameters(self):
        """``(layer_index, name, array)`` for every parameter, in a fixed order."""
        for i, layer in enumerate(self.layers):
            for name in sorted(layer.params):
                yield i, name, layer.params[name]

    def gradients(self):
        return [layer.grads[name] for i, layer in enumerate(self.layers)
                for name in sorted(layer.params)]

    def n_parameters(self) -> int:
        return sum(p.size for _, _, p in self.parameters())

    def parameter_hash(self) -> str:
        h = hashlib.sha256()
        for _, _, p in self.parameters():
            h.update(np.ascontiguousarray(p).data)
        return h.hexdigest()

    def forward(self, batch):
        """Map ``(B, *input_shape)`` to ``(B, *output_shape)``."""
        batch = np.asarray(batch)
        if tuple(batch.shape[1:]) != tuple(self.spec.input_shape):
            raise ShapeError(
                f"batch sample shape {batch.shape[1:]} does not match "
                f"decoder input {self.spec.input_shape}"
            )
        x = to_internal(batch.astype(self.dtype, copy=False))
        outs = []
        for layer in self.layers:
            x = layer.forward(x)
            outs.append(x)
        if not np.all(np.isfinite(x)):
            bad = next(i for i, o in enumerate(outs) if not np.all(np.isfinite(o)))
            raise NumericalError(f"non-finite activation produced by layer {bad} "
                                 f"({self.spec.layers[bad].kind})")
        return to_public(x)

    def backward(self, batch, targets):
        """Gradients of :func:`mse` w.r.t. every parameter; returns ``(loss, grads)``."""
        out = self.forward(batch)
        targets = np.asarray(targets)
        if targets.shape != out.shape:
            raise ShapeError(f"targets {targets.shape} do not match outputs {out.shape}")
        resid = out - targets.astype(self.dtype, copy=False)
        loss = float(np.mean(np.square(resid, dtype=np.float64)))
        dy = to_internal(resid * self.dtype.type(2.0 / resid.size))
        for i in range(len(self.layers) - 1, -1, -1):
            dy = self.layers[i].backward(dy, need_dx=i > 0)
        grads = self.gradients()
        for g in grads:
            if not np.all(np.isfinite(g)):
                raise NumericalError("non-finite gradient")
        return loss, grads

    def predict(self, inputs, batch_size=64):
        inputs = np.asarray(inputs)
        return np.concatenate([
            self.forward(inputs[s : s + batch_size])
            for s in range(0, len(inputs), batch_size)
        ])


def mse(outputs, targets) -> float:
    """Mean over batch, channels and pixels of the squared error."""
    d = np.asarray(outputs, dtype=np.float64) - np.asarray(targets, dtype=np.float64)
    return float(np.mean(d * d))


def per_sample_mse(outputs, targets) -> np.ndarray:
    """Per-sample ``(1/K) * sum_k ||I^k - I~^k||^2`` with K pixels, channels summed."""
    d = np.asarray(outputs, dtype=np.float64) - np.asarray(targets, dtype=np.float64)
    sq = d * d
    if sq.ndim == 4:
        k = sq.shape[2] * sq.shape[3]
    else:
        k = int(np.prod(sq.shape[1:]))
    return sq.reshape(sq.shape[0], -1).sum(axis=1) / k


def gaussian_log_likelihood(outputs, targets, sigma2: float = 1.0) -> float:
    """Log-likelihood of ``targets`` under N(outputs, sigma2 I).

    With ``n`` scalar values this equals ``-n/2 log(2 pi sigma2) - n mse / (2 sigma2)``,
    an affine, strictly decreasing function of :func:`mse`; minimising the MSE
    of a decoder therefore maximises its Gaussian likelihood.
    """
    if not sigma2 > 0:
        raise ValueError(f"sigma2 must be > 0, got {sigma2}")
    n = np.asarray(outputs).size
    return -0.5 * n * math.log(2 * math.pi * sigma2) - n * mse(outputs, targets) / (2 * sigma2)
