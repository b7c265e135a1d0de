"""Compiled inner loops for the LSTM layer.

Gate blocks are stacked in the order input, forget, candidate, output along
the first axis of ``W_x``, ``W_h`` and ``b``. Loops are written out
explicitly (no BLAS) so results are bitwise reproducible across runs.
"""

import math

import numpy as np
from numba import njit


@njit(cache=True)
def sigmoid(z):
    if z >= 0.0:
        return 1.0 / (1.0 + math.exp(-z))
    e = math.exp(z)
    return e / (1.0 + e)


@njit(cache=True)
def lstm_layer_forward(W_x, W_h, b, X):
    """Run one LSTM layer over ``X`` (T x I) from zero initial state.

    Returns ``hs`` and ``cs`` of shape (T+1, H) whose row 0 is the zero
    initial state, and ``gates`` (T, 4H) holding the activated i, f, g, o.
    """
    T, I = X.shape
    H = W_h.shape[1]
    hs = np.zeros((T + 1, H))
    cs = np.zeros((T + 1, H))
    gates = np.empty((T, 4 * H))
    z = np.empty(4 * H)
    for t in range(T):
        for r in range(4 * H):
            acc = b[r]
            for k in range(I):
                acc += W_x[r, k] * X[t, k]
            for k in range(H):
                acc += W_h[r, k] * hs[t, k]
            z[r] = acc
        for j in range(H):
            i = sigmoid(z[j])
            f = sigmoid(z[H + j])
            g = math.tanh(z[2 * H + j])
            o = sigmoid(z[3 * H + j])
            c = f * cs[t, j] + i * g
            cs[t + 1, j] = c
            hs[t + 1, j] = o * math.tanh(c)
            gates[t, j] = i
            gates[t, H + j] = f
            gates[t, 2 * H + j] = g
            gates[t, 3 * H + j] = o
    return hs, cs, gates


@njit(cache=True)
def lstm_layer_backward(W_x, W_h, X, hs, cs, gates, dH, dW_x, dW_h, db):
    """Backpropagate ``dH`` (T x H, loss gradient w.r.t. each h_t) through time.

    Parameter gradients are accumulated into ``dW_x``, ``dW_h`` and ``db``
    in place; the gradient w.r.t. the layer input ``X`` is returned.
    """
    T, I = X.shape
    H = W_h.shape[1]
    dX = np.zeros((T, I))
    dh_next = np.zeros(H)
    dc_next = np.zeros(H)
    dz = np.empty(4 * H)
    for t in range(T - 1, -1, -1):
        for j in range(H):
            i = gates[t, j]
            f = gates[t, H + j]
            g = gates[t, 2 * H + j]
            o = gates[t, 3 * H + j]
            tc = math.tanh(cs[t + 1, j])
            dh = dH[t, j] + dh_next[j]
            dc = dc_next[j] + dh * o * (1.0 - tc * tc)
            dz[j] = dc * g * i * (1.0 - i)
            dz[H + j] = dc * cs[t, j] * f * (1.0 - f)
            dz[2 * H + j] = dc * i * (1.0 - g * g)
            dz[3 * H + j] = dh * tc * o * (1.0 - o)
            dc_next[j] = dc * f
        for k in range(H):
            dh_next[k] = 0.0
        for r in range(4 * H):
            d = dz[r]
            db[r] += d
            for k in range(I):
                dW_x[r, k] += d * X[t, k]
                dX[t, k] += W_x[r, k] * d
            for k in range(H):
                dW_h[r, k] += d * hs[t, k]
                dh_next[k] += W_h[r, k] * d
    return dX
