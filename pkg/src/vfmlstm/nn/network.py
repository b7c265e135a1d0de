"""Stacked LSTM with a per-timestep affine head, plus a dense tanh stack.

Both networks keep all weights in a :class:`ParamSet` and expose the same
training surface: ``forward``, ``backward`` and ``loss_and_grad`` working on
one sequence (batch size 1).
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from ..errors import DimensionError, ForwardCacheError
from . import kernels
from .layers import DenseParams, LSTMLayerParams
from .loss import mse_grad, mse_loss
from .params import ParamSet


def lstm_param_specs(input_size: int, hidden_sizes: Sequence[int], output_size: int):
    specs = []
    prev = input_size
    for k, H in enumerate(hidden_sizes):
        specs += [
            (f"lstm{k}.W_x", (4 * H, prev)),
            (f"lstm{k}.W_h", (4 * H, H)),
            (f"lstm{k}.b", (4 * H,)),
        ]
        prev = H
    specs += [("head.W", (output_size, prev)), ("head.b", (output_size,))]
    return specs


class LSTMNetwork:
    """Deep LSTM mapping a (T x I) sequence to a (T x n) sequence.

    Hidden and cell states start at zero for every call to ``forward``.
    """

    def __init__(self, input_size: int, hidden_sizes: Sequence[int], output_size: int,
                 params: ParamSet | None = None):
        if input_size < 1 or output_size < 1 or not hidden_sizes or min(hidden_sizes) < 1:
            raise ValueError("layer sizes must be positive and hidden_sizes non-empty")
        self.input_size = int(input_size)
        self.hidden_sizes = tuple(int(h) for h in hidden_sizes)
        self.output_size = int(output_size)
        specs = lstm_param_specs(self.input_size, self.hidden_sizes, self.output_size)
        if params is None:
            params = ParamSet(specs)
        elif params.specs() != specs:
            raise DimensionError("parameter layout does not match network sizes")
        self.params = params
        self._cache = None

    @property
    def n_params(self) -> int:
        return self.params.size

    def layer(self, k: int) -> LSTMLayerParams:
        p = self.params
        return LSTMLayerParams(p[f"lstm{k}.W_x"], p[f"lstm{k}.W_h"], p[f"lstm{k}.b"])

    @property
    def head(self) -> DenseParams:
        return DenseParams(self.params["head.W"], self.params["head.b"])

    def _check_input(self, x_seq) -> np.ndarray:
        x = np.ascontiguousarray(x_seq, dtype=np.float64)
        if x.ndim != 2 or x.shape[1] != self.input_size or x.shape[0] < 1:
            raise DimensionError(f"expected input of shape (T, {self.input_size}), got {x.shape}")
        return x

    def forward(self, x_seq, keep_cache: bool = True) -> np.ndarray:
        x = self._check_input(x_seq)
        inp = x
        layers = []
        for k in range(len(self.hidden_sizes)):
            lp = self.layer(k)
            hs, cs, gates = kernels.lstm_layer_forward(lp.W_x, lp.W_h, lp.b, inp)
            layers.append((inp, hs, cs, gates))
            inp = hs[1:]
        y_hat = self.head(inp)
        self._cache = (x, layers, y_hat) if keep_cache else None
        return y_hat

    def backward(self, y_seq) -> tuple[float, ParamSet]:
        """Loss and exact MSE gradients for the most recent ``forward`` call."""
        if self._cache is None:
            raise ForwardCacheError("backward called before forward")
        x, layers, y_hat = self._cache
        y = np.asarray(y_seq, dtype=np.float64)
        if y.shape != y_hat.shape:
            raise DimensionError(f"target shape {y.shape} does not match output {y_hat.shape}")
        grads = self.params.zeros_like()
        d_out = mse_grad(y_hat, y)
        top = layers[-1][1][1:]
        grads["head.W"][...] = d_out.T @ top
        grads["head.b"][...] = d_out.sum(axis=0)
        dH = np.ascontiguousarray(d_out @ self.params["head.W"])
        for k in range(len(layers) - 1, -1, -1):
            inp, hs, cs, gates = layers[k]
            lp = self.layer(k)
            dH = kernels.lstm_layer_backward(
                lp.W_x, lp.W_h, inp, hs, cs, gates, dH,
                grads[f"lstm{k}.W_x"], grads[f"lstm{k}.W_h"], grads[f"lstm{k}.b"],
            )
        return mse_loss(y_hat, y), grads

    def loss_and_grad(self, x_seq, y_seq) -> tuple[float, np.ndarray]:
        self.forward(x_seq)
        loss, grads = self.backward(y_seq)
        self._cache = None
        return loss, grads.flat

    def loss(self, x_seq, y_seq) -> float:
        return mse_loss(self.forward(x_seq, keep_cache=False), y_seq)


def dense_param_specs(input_size: int, hidden_sizes: Sequence[int], output_size: int):
    specs = []
    prev = input_size
    for k, H in enumerate(hidden_sizes):
        specs += [(f"dense{k}.W", (H, prev)), (f"dense{k}.b", (H,))]
        prev = H
    specs += [("head.W", (output_size, prev)), ("head.b", (output_size,))]
    return specs


class DenseNetwork:
    """Fully connected stack: tanh hidden layers, linear output.

    Input is a (window x m) array flattened row-major; target is (1 x n).
    """

    def __init__(self, input_size: int, hidden_sizes: Sequence[int], output_size: int,
                 params: ParamSet | None = None):
        if input_size < 1 or output_size < 1 or min(hidden_sizes, default=1) < 1:
            raise ValueError("layer sizes must be positive")
        self.input_size = int(input_size)
        self.hidden_sizes = tuple(int(h) for h in hidden_sizes)
        self.output_size = int(output_size)
        specs = dense_param_specs(self.input_size, self.hidden_sizes, self.output_size)
        if params is None:
            params = ParamSet(specs)
        elif params.specs() != specs:
            raise DimensionError("parameter layout does not match network sizes")
        self.params = params
        self._cache = None

    @property
    def n_params(self) -> int:
        return self.params.size

    def forward(self, x, keep_cache: bool = True) -> np.ndarray:
        a = np.asarray(x, dtype=np.float64).reshape(-1)
        if a.size != self.input_size:
            raise DimensionError(f"expected {self.input_size} inputs, got {a.size}")
        acts = [a]
        for k in range(len(self.hidden_sizes)):
            a = np.tanh(self.params[f"dense{k}.W"] @ a + self.params[f"dense{k}.b"])
            acts.append(a)
        y_hat = (self.params["head.W"] @ a + self.params["head.b"])[None, :]
        self._cache = (acts, y_hat) if keep_cache else None
        return y_hat

    def backward(self, y_seq) -> tuple[float, ParamSet]:
        if self._cache is None:
            raise ForwardCacheError("backward called before forward")
        acts, y_hat = self._cache
        y = np.asarray(y_seq, dtype=np.float64).reshape(y_hat.shape)
        grads = self.params.zeros_like()
        d = mse_grad(y_hat, y)[0]
        grads["head.W"][...] = np.outer(d, acts[-1])
        grads["head.b"][...] = d
        da = self.params["head.W"].T @ d
        for k in range(len(self.hidden_sizes) - 1, -1, -1):
            dz = da * (1.0 - acts[k + 1] ** 2)
            grads[f"dense{k}.W"][...] = np.outer(dz, acts[k])
            grads[f"dense{k}.b"][...] = dz
            da = self.params[f"dense{k}.W"].T @ dz
        return mse_loss(y_hat, y), grads

    def loss_and_grad(self, x, y) -> tuple[float, np.ndarray]:
        self.forward(x)
        loss, grads = self.backward(y)
        self._cache = None
        return loss, grads.flat

    def loss(self, x, y) -> float:
        y_hat = self.forward(x, keep_cache=False)
        return mse_loss(y_hat, np.asarray(y, dtype=np.float64).reshape(y_hat.shape))


def forward_sequence(model, x_seq) -> np.ndarray:
    """Forecast sequence for one input window; caches activations for BPTT."""
    return model.forward(x_seq)


def backward_sequence(model, x_seq, y_seq) -> ParamSet:
    """Gradients of the window MSE w.r.t. every trainable tensor.

    Requires a preceding ``forward_sequence(model, x_seq)`` on the same input.
    """
    cache = model._cache
    if cache is None:
        raise ForwardCacheError("no cached forward pass; call forward_sequence first")
    cached_x = cache[0] if isinstance(model, LSTMNetwork) else cache[0][0]
    x = np.asarray(x_seq, dtype=np.float64)
    if cached_x.size != x.size or not np.array_equal(cached_x.reshape(-1), x.reshape(-1)):
        raise ForwardCacheError("cached forward pass was computed for a different input")
    return model.backward(y_seq)[1]
