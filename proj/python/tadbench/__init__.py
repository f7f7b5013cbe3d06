"""Adversarial-robustness benchmark for small text classifiers."""

from ._core import (
    ConfigError,
    attack,
    dynamic_temperature,
    entropy,
    report,
    runtime_bench,
    softmax,
    sweep_temperature,
    tokenize,
    train,
)

__all__ = [
    "ConfigError",
    "attack",
    "dynamic_temperature",
    "entropy",
    "report",
    "runtime_bench",
    "softmax",
    "sweep_temperature",
    "tokenize",
    "train",
]
