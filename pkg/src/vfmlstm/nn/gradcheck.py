"""Central finite-difference verification of analytic gradients.

The finite differences re-evaluate the loss through a plain numpy forward
pass (one :func:`lstm_cell_forward` per step) rather than the compiled
kernels, by default in extended precision so that the difference quotient
is not swamped by float64 roundoff when a gradient entry is small.
"""

from __future__ import annotations

import numpy as np

from .layers import LSTMLayerParams, lstm_cell_forward
from .network import DenseNetwork, LSTMNetwork


def _unpack(model, theta):
    p = model.params
    return {name: theta[p.slice_of(name)].reshape(p.shapes[name]) for name in p.names}


def reference_loss(model, theta, x_seq, y_seq) -> np.floating:
    """MSE of ``model`` evaluated with weights ``theta`` in ``theta.dtype``."""
    w = _unpack(model, theta)
    dtype = theta.dtype
    x = np.asarray(x_seq, dtype=dtype)
    y = np.asarray(y_seq, dtype=dtype)
    if isinstance(model, LSTMNetwork):
        seq = x
        for k, H in enumerate(model.hidden_sizes):
            params = LSTMLayerParams(w[f"lstm{k}.W_x"], w[f"lstm{k}.W_h"], w[f"lstm{k}.b"])
            h = np.zeros(H, dtype=dtype)
            c = np.zeros(H, dtype=dtype)
            out = []
            for x_t in seq:
                h, c = lstm_cell_forward(params, x_t, h, c)
                out.append(h)
            seq = np.array(out)
        y_hat = seq @ w["head.W"].T + w["head.b"]
    elif isinstance(model, DenseNetwork):
        a = x.reshape(-1)
        for k in range(len(model.hidden_sizes)):
            a = np.tanh(w[f"dense{k}.W"] @ a + w[f"dense{k}.b"])
        y_hat = (w["head.W"] @ a + w["head.b"])[None, :]
        y = y.reshape(y_hat.shape)
    else:
        raise TypeError(f"unsupported model type {type(model).__name__}")
    d = y_hat - y
    return np.mean(d * d)


def gradient_check(model, x_seq, y_seq, fd_step: float = 1e-5, grad_fn=None, indices=None,
                   dtype=np.longdouble) -> float:
    """Max relative error between analytic and central-difference gradients.

    Relative error per entry is |a - fd| / max(|a|, |fd|, 1e-8). ``grad_fn``
    overrides the analytic gradient (``grad_fn(model, x, y) -> flat array``);
    ``indices`` restricts the check to those flat parameter positions;
    ``dtype`` is the precision of the finite-difference loss evaluations.
    """
    if grad_fn is None:
        analytic = model.loss_and_grad(x_seq, y_seq)[1].copy()
    else:
        analytic = np.asarray(grad_fn(model, x_seq, y_seq), dtype=np.float64)
    theta = model.params.flat.astype(dtype)
    h = dtype(fd_step)
    idx = np.arange(theta.size) if indices is None else np.asarray(indices)
    worst = 0.0
    for p in idx:
        saved = theta[p]
        theta[p] = saved + h
        up = reference_loss(model, theta, x_seq, y_seq)
        theta[p] = saved - h
        down = reference_loss(model, theta, x_seq, y_seq)
        theta[p] = saved
        fd = float((up - down) / (2 * h))
        a = float(analytic[p])
        worst = max(worst, abs(a - fd) / max(abs(a), abs(fd), 1e-8))
    return worst
