"""Seeded weight initialization."""

from __future__ import annotations

import numpy as np

from .params import ParamSet


def make_rng(seed: int) -> np.random.Generator:
    """PCG64 generator; same seed gives the same stream on every platform."""
    return np.random.Generator(np.random.PCG64(int(seed)))


def glorot_limit(fan_in: int, fan_out: int) -> float:
    return float(np.sqrt(6.0 / (fan_in + fan_out)))


def init_weights(params: ParamSet, rng: np.random.Generator, forget_bias: float = 1.0) -> ParamSet:
    """Fill ``params`` in place, in declaration order.

    2-D tensors (shape out x in) get U(-k, k) with k = sqrt(6 / (in + out));
    1-D tensors are zeroed. Bias tensors of LSTM layers (``lstm*.b``) get
    ``forget_bias`` on their forget-gate block.
    """
    for name, value in params.items():
        if value.ndim == 2:
            fan_out, fan_in = value.shape
            k = glorot_limit(fan_in, fan_out)
            value[...] = rng.uniform(-k, k, size=value.shape)
        else:
            value[...] = 0.0
            if name.startswith("lstm") and name.endswith(".b"):
                H = value.shape[0] // 4
                value[H : 2 * H] = forget_bias
    return params
