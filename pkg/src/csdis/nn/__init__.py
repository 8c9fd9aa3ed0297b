"""Minimal decoder stack: layers, Adam, MSE and a training loop."""

from .model import DecoderModel, gaussian_log_likelihood, mse, per_sample_mse
from .spec import DecoderSpec, LayerSpec, builtin_names, builtin_spec, infer_shapes, load_spec
from .train import TrainConfig, adam_step, train_decoder

__all__ = [
    "DecoderModel",
    "DecoderSpec",
    "LayerSpec",
    "TrainConfig",
    "adam_step",
    "builtin_names",
    "builtin_spec",
    "gaussian_log_likelihood",
    "infer_shapes",
    "load_spec",
    "mse",
    "per_sample_mse",
    "train_decoder",
]
