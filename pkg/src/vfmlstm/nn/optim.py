"""Adam optimizer acting on flat parameter vectors."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import DimensionError, NonFiniteError
from .params import ParamSet


@dataclass
class AdamState:
    m: np.ndarray
    v: np.ndarray
    t: int = 0
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8

    def __post_init__(self):
        if self.m.shape != self.v.shape:
            raise DimensionError("first and second moment shapes differ")
        if not (0.0 <= self.beta1 < 1.0 and 0.0 <= self.beta2 < 1.0):
            raise ValueError("beta1 and beta2 must lie in [0, 1)")
        if self.t < 0:
            raise ValueError("step counter must be non-negative")

    @classmethod
    def fresh(cls, size: int, **hyper) -> "AdamState":
        return cls(np.zeros(size), np.zeros(size), **hyper)


def _flat(x) -> np.ndarray:
    return x.flat if isinstance(x, ParamSet) else x


def adam_step(params, grads, state: AdamState):
    """Apply one bias-corrected Adam update to ``params`` in place.

    ``params`` and ``grads`` are flat float64 arrays or ParamSets with the
    same layout. Returns ``(params, state)``.
    """
    theta = _flat(params)
    g = _flat(grads)
    if theta.shape != g.shape or theta.shape != state.m.shape:
        raise DimensionError(f"params {theta.shape}, grads {g.shape}, state {state.m.shape}")
    if not np.all(np.isfinite(g)):
        bad = np.flatnonzero(~np.isfinite(g))
        raise NonFiniteError(f"non-finite gradient at {bad.size} entries (first index {bad[0]})")
    state.t += 1
    state.m *= state.beta1
    state.m += (1.0 - state.beta1) * g
    state.v *= state.beta2
    state.v += (1.0 - state.beta2) * (g * g)
    m_hat = state.m / (1.0 - state.beta1**state.t)
    v_hat = state.v / (1.0 - state.beta2**state.t)
    theta -= state.lr * m_hat / (np.sqrt(v_hat) + state.epsilon)
    return params, state
