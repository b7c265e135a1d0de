"""Single-step LSTM cell and affine layer parameter containers."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import DimensionError


def sigmoid(z):
    e = np.exp(-np.abs(z))
    return np.where(z >= 0, 1.0 / (1.0 + e), e / (1.0 + e))


@dataclass
class LSTMLayerParams:
    """Weights of one LSTM layer, gates stacked as input, forget, candidate, output."""

    W_x: np.ndarray  # (4H, I)
    W_h: np.ndarray  # (4H, H)
    b: np.ndarray  # (4H,)

    def __post_init__(self):
        four_h, i = self.W_x.shape
        if four_h % 4 or self.W_h.shape != (four_h, four_h // 4) or self.b.shape != (four_h,):
            raise DimensionError(
                f"inconsistent LSTM shapes W_x={self.W_x.shape}, W_h={self.W_h.shape}, b={self.b.shape}"
            )

    @property
    def input_size(self) -> int:
        return self.W_x.shape[1]

    @property
    def hidden_size(self) -> int:
        return self.W_h.shape[1]

    @property
    def n_params(self) -> int:
        H, I = self.hidden_size, self.input_size
        return 4 * H * (I + H + 1)


@dataclass
class DenseParams:
    W: np.ndarray  # (output_size, input_size)
    b: np.ndarray  # (output_size,)

    def __post_init__(self):
        if self.W.ndim != 2 or self.b.shape != (self.W.shape[0],):
            raise DimensionError(f"inconsistent dense shapes W={self.W.shape}, b={self.b.shape}")

    @property
    def input_size(self) -> int:
        return self.W.shape[1]

    @property
    def output_size(self) -> int:
        return self.W.shape[0]

    @property
    def n_params(self) -> int:
        return self.W.size + self.b.size

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return x @ self.W.T + self.b


def lstm_cell_forward(params: LSTMLayerParams, x_t, h_prev, c_prev):
    """One step of the forget-gate LSTM recurrence.

    Works in float64 or any wider float dtype carried by the inputs.
    Returns ``(h_t, c_t)``.
    """
    x_t, h_prev, c_prev = (np.asarray(a) for a in (x_t, h_prev, c_prev))
    dtype = np.result_type(params.W_x, x_t, h_prev, c_prev, np.float64)
    x_t, h_prev, c_prev = (a.astype(dtype, copy=False) for a in (x_t, h_prev, c_prev))
    H = params.hidden_size
    if x_t.shape != (params.input_size,) or h_prev.shape != (H,) or c_prev.shape != (H,):
        raise DimensionError(
            f"expected x_t ({params.input_size},), h/c ({H},); "
            f"got {x_t.shape}, {h_prev.shape}, {c_prev.shape}"
        )
    z = params.W_x @ x_t + params.W_h @ h_prev + params.b
    i = sigmoid(z[:H])
    f = sigmoid(z[H : 2 * H])
    g = np.tanh(z[2 * H : 3 * H])
    o = sigmoid(z[3 * H :])
    c_t = f * c_prev + i * g
    h_t = o * np.tanh(c_t)
    return h_t, c_t
